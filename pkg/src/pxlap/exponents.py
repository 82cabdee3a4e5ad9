"""Validation of variable exponent pairs (p, q) against the structural inequalities.

The solver needs, at every node: 1 < inf p <= sup p < N, the critical exponent
``p*(x) = N p(x) / (N - p(x))`` strictly above sup p, and a uniformly positive
gap ``q(x) - p*(x)``.  Strictness is checked with a configurable margin so
floating-point ties are rejected deterministically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExponentValidationError

__all__ = ["ExponentField", "validate_exponents", "DEFAULT_MARGIN"]

DEFAULT_MARGIN = 1e-12


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Validated nodal exponent data with cached extremes.

    ``pstar_minus`` equals ``dim_N * p_minus / (dim_N - p_minus)`` exactly,
    which coincides with the nodal minimum of ``pstar_values`` because the
    critical exponent is increasing in p.
    """

    values_p: np.ndarray
    values_q: np.ndarray
    dim_N: int
    p_minus: float
    p_plus: float
    q_minus: float
    q_plus: float
    pstar_values: np.ndarray
    pstar_minus: float
    margin: float

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values_p.shape

    def same_data(self, other: "ExponentField") -> bool:
        return (
            self.dim_N == other.dim_N
            and np.array_equal(self.values_p, other.values_p)
            and np.array_equal(self.values_q, other.values_q)
        )


def _fail(kind: str, detail: str, node: int | None = None) -> None:
    raise ExponentValidationError(kind, detail, node)


def validate_exponents(
    p_samples: np.ndarray,
    q_samples: np.ndarray,
    dim_N: int,
    margin: float = DEFAULT_MARGIN,
) -> ExponentField:
    """Check the inequalities node-wise and return a populated ExponentField.

    Raises :class:`ExponentValidationError` naming the violated inequality and
    the offending flat node index.  Validating the arrays of an already valid
    field returns an identical field.
    """
    p = np.asarray(p_samples, dtype=float)
    q = np.asarray(q_samples, dtype=float)
    if p.size == 0 or q.size == 0:
        _fail("malformed exponent data", "empty sample arrays")
    if p.shape != q.shape:
        _fail(
            "malformed exponent data",
            f"p shape {p.shape} and q shape {q.shape} differ",
        )
    if not isinstance(dim_N, (int, np.integer)) or dim_N < 2:
        _fail("malformed exponent data", f"dimension N must be an integer >= 2, got {dim_N}")
    if not np.all(np.isfinite(p)):
        _fail("malformed exponent data", "non-finite p sample",
              int(np.flatnonzero(~np.isfinite(p).ravel())[0]))
    if not np.all(np.isfinite(q)):
        _fail("malformed exponent data", "non-finite q sample",
              int(np.flatnonzero(~np.isfinite(q).ravel())[0]))

    p_minus = float(p.min())
    p_plus = float(p.max())
    if p_minus - 1.0 <= margin:
        _fail(
            "exponent range error",
            f"inf p = {p_minus} must exceed 1 by more than margin {margin}",
            int(np.argmin(p.ravel())),
        )
    if dim_N - p_plus <= margin:
        _fail(
            "exponent range error",
            f"sup p = {p_plus} must stay below N = {dim_N} by more than margin {margin}",
            int(np.argmax(p.ravel())),
        )

    pstar = dim_N * p / (dim_N - p)
    gap_plus = pstar - p_plus
    if float(gap_plus.min()) <= margin:
        _fail(
            "supercriticality gap error",
            f"critical exponent must exceed sup p at every node; "
            f"min(p* - sup p) = {float(gap_plus.min())}",
            int(np.argmin(gap_plus.ravel())),
        )
    gap_q = q - pstar
    if float(gap_q.min()) <= margin:
        _fail(
            "supercriticality gap error",
            f"need inf(q - p*) > {margin}, got {float(gap_q.min())}",
            int(np.argmin(gap_q.ravel())),
        )

    return ExponentField(
        values_p=p.copy(),
        values_q=q.copy(),
        dim_N=int(dim_N),
        p_minus=p_minus,
        p_plus=p_plus,
        q_minus=float(q.min()),
        q_plus=float(q.max()),
        pstar_values=pstar,
        pstar_minus=dim_N * p_minus / (dim_N - p_minus),
        margin=float(margin),
    )
