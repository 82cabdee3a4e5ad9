"""Modulars and Luxemburg norms for variable-exponent Lebesgue/Sobolev spaces.

The modular of a field u is the quadrature of ``|u(x)|^{e(x)}``.  The norm is
the unique t > 0 with ``modular(u / t) = 1``, found by bisection after a
geometric bracketing step; the map ``t -> modular(u / t)`` is strictly
decreasing for nonzero u, so the bracket is reliable.  The Sobolev norm of a
zero-boundary field is the Luxemburg norm of its nodal gradient magnitude
under the p exponent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FieldMismatchError, NormBisectionError
from .exponents import ExponentField
from .grid import Grid, ScalarField, gradient, integrate

__all__ = [
    "modular",
    "luxemburg_norm",
    "sobolev_norm",
    "check_modular_relations",
    "ModularRelationsReport",
]

DEFAULT_TOL = 1e-10
_MAX_BISECT = 200


def _exponent_samples(
    selector: str | np.ndarray, exps: ExponentField | None, grid: Grid
) -> np.ndarray:
    if isinstance(selector, str):
        if exps is None:
            raise FieldMismatchError("field mismatch: exponent selector needs an ExponentField")
        try:
            e = {
                "p": exps.values_p,
                "pstar": exps.pstar_values,
                "q": exps.values_q,
            }[selector]
        except KeyError:
            raise FieldMismatchError(f"unknown exponent selector {selector!r}") from None
    else:
        e = np.asarray(selector, dtype=float)
    if e.shape != grid.shape:
        # Scalars are broadcast; anything else must match the grid.
        if e.ndim == 0:
            e = np.full(grid.shape, float(e))
        else:
            raise FieldMismatchError(
                f"field mismatch: exponent samples {e.shape} vs grid {grid.shape}"
            )
    return e


def modular(
    u: ScalarField,
    selector: str | np.ndarray,
    exps: ExponentField | None = None,
) -> float:
    """Quadrature of ``|u|^{e(x)}`` for the selected exponent samples.

    ``selector`` is ``"p"``, ``"pstar"``, ``"q"`` (looked up in ``exps``) or a
    raw array of exponent samples.
    """
    e = _exponent_samples(selector, exps, u.grid)
    return integrate(np.abs(u.values) ** e, u.grid)


def _modular_of_scaled(abs_vals: np.ndarray, e: np.ndarray, w: np.ndarray, t: float) -> float:
    return float(np.sum(w * (abs_vals / t) ** e))


def luxemburg_norm(
    u: ScalarField,
    exponent_samples: np.ndarray | str,
    exps: ExponentField | None = None,
    tol: float = DEFAULT_TOL,
) -> float:
    """Luxemburg norm: the t with ``modular(u / t) = 1`` within ``tol``.

    Returns 0.0 for the zero field.  Raises :class:`NormBisectionError` if the
    bracket cannot be grown or bisection does not meet ``tol`` within the
    iteration cap.
    """
    grid = u.grid
    e = _exponent_samples(exponent_samples, exps, grid)
    abs_vals = np.abs(u.values)
    w = grid.quad_weights
    if not np.any(abs_vals > 0.0):
        return 0.0

    lo = hi = 1.0
    rho = _modular_of_scaled(abs_vals, e, w, 1.0)
    if abs(rho - 1.0) <= tol:
        return 1.0
    grow = 0
    if rho > 1.0:
        while _modular_of_scaled(abs_vals, e, w, hi) > 1.0:
            hi *= 2.0
            grow += 1
            if grow > _MAX_BISECT:
                raise NormBisectionError("norm bisection failure: upper bracket did not close")
        lo = hi / 2.0
    else:
        while _modular_of_scaled(abs_vals, e, w, lo) < 1.0:
            lo /= 2.0
            grow += 1
            if grow > _MAX_BISECT:
                raise NormBisectionError("norm bisection failure: lower bracket did not close")
        hi = lo * 2.0

    mid = 0.5 * (lo + hi)
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        rho = _modular_of_scaled(abs_vals, e, w, mid)
        if abs(rho - 1.0) <= tol:
            return mid
        if rho > 1.0:
            lo = mid
        else:
            hi = mid
    raise NormBisectionError(
        f"norm bisection failure: no convergence in {_MAX_BISECT} steps, "
        f"last bracket [{lo}, {hi}]"
    )


def sobolev_norm(
    u: ScalarField,
    exps: ExponentField,
    tol: float = DEFAULT_TOL,
) -> float:
    """Luxemburg norm of the nodal gradient magnitude under the p exponent."""
    g = gradient(u)
    mag = np.sqrt(np.sum(g * g, axis=-1))
    return luxemburg_norm(ScalarField(mag, u.grid), exps.values_p, tol=tol)


@dataclass(frozen=True)
class ModularRelationsReport:
    """Outcome of the norm/modular comparison inequalities for one field.

    Each relation tuple is ``(name, applicable, holds, slack)`` where slack is
    how far inside the inequality the pair sits (nonnegative when it holds).
    """

    norm: float
    modular_value: float
    relations: tuple[tuple[str, bool, bool, float], ...]

    @property
    def all_hold(self) -> bool:
        return all(ok for _, applicable, ok, _ in self.relations if applicable)


def check_modular_relations(
    u: ScalarField,
    exps: ExponentField,
    tol: float = DEFAULT_TOL,
) -> ModularRelationsReport:
    """Evaluate the standard norm/modular inequalities for ``u`` under p.

    Checks the sign trichotomy (norm and modular on the same side of 1) and
    the power bounds ``norm^{p_minus} <= modular <= norm^{p_plus}`` for norms
    above 1, with the exponents swapped below 1.  A small slack proportional
    to the bisection tolerance absorbs quadrature rounding.
    """
    nrm = luxemburg_norm(u, exps.values_p, tol=tol)
    rho = modular(u, "p", exps)
    pad = 10.0 * tol * max(1.0, rho)
    relations: list[tuple[str, bool, bool, float]] = []

    if nrm == 0.0:
        relations.append(("zero field", True, rho <= pad, pad - rho))
        return ModularRelationsReport(nrm, rho, tuple(relations))

    side_ok = True
    if nrm > 1.0 + tol:
        side_ok = rho >= 1.0 - pad
        relations.append(("norm>1 implies modular>=1", True, side_ok, rho - 1.0))
    elif nrm < 1.0 - tol:
        side_ok = rho <= 1.0 + pad
        relations.append(("norm<1 implies modular<=1", True, side_ok, 1.0 - rho))
    else:
        relations.append(("norm=1 implies modular=1", True, abs(rho - 1.0) <= pad,
                          pad - abs(rho - 1.0)))

    if nrm > 1.0 + tol:
        lo, hi = nrm ** exps.p_minus, nrm ** exps.p_plus
        relations.append(("norm^p_minus <= modular", True, rho >= lo - pad, rho - lo))
        relations.append(("modular <= norm^p_plus", True, rho <= hi + pad, hi - rho))
    else:
        relations.append(("norm^p_minus <= modular", False, True, 0.0))
        relations.append(("modular <= norm^p_plus", False, True, 0.0))

    if nrm < 1.0 - tol:
        lo, hi = nrm ** exps.p_plus, nrm ** exps.p_minus
        relations.append(("norm^p_plus <= modular", True, rho >= lo - pad, rho - lo))
        relations.append(("modular <= norm^p_minus", True, rho <= hi + pad, hi - rho))
    else:
        relations.append(("norm^p_plus <= modular", False, True, 0.0))
        relations.append(("modular <= norm^p_minus", False, True, 0.0))

    return ModularRelationsReport(nrm, rho, tuple(relations))
