"""Exception types shared across the package.

Each subcommand maps these onto a stable process exit code, so keep the
hierarchy flat and the messages self-contained.
"""
from __future__ import annotations


class PxlapError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(PxlapError):
    """Malformed or inconsistent run configuration."""


class ExponentValidationError(PxlapError):
    """Exponent data violates a structural inequality.

    ``kind`` is one of ``"exponent range error"``, ``"supercriticality gap
    error"`` or ``"malformed exponent data"``; ``node`` is the flat index of
    the offending sample when one exists.
    """

    def __init__(self, kind: str, detail: str, node: int | None = None):
        self.kind = kind
        self.node = node
        self.detail = detail
        where = f" at node {node}" if node is not None else ""
        super().__init__(f"{kind}{where}: {detail}")


class FieldMismatchError(PxlapError):
    """Field shape does not match the grid it is used with."""


class BallContainmentError(PxlapError):
    """A ball was required to sit strictly inside the domain but does not."""


class NormBisectionError(PxlapError):
    """Norm bisection failed to bracket or converge."""


class HypothesisError(PxlapError):
    """A structural hypothesis on the nonlinearity fails on the sample set."""


class LandscapeError(PxlapError):
    """The energy landscape contradicts what the configuration promises."""


class SaddleSearchError(PxlapError):
    """Mountain-pass search could not produce an acceptable saddle."""


class CertificationError(PxlapError):
    """Certification could not be completed (for example, no admissible K)."""


class CertifierInconsistencyError(PxlapError):
    """A certified bound contradicts the direct node-wise maximum.

    This is a hard failure: it indicates a bug in the constants or the
    quadrature, never a property of the field being certified.
    """
