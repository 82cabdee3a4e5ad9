"""Source nonlinearities and the sup-bounded truncation of the supercritical term.

Two ingredients live here.  First, :class:`NonlinearityModel` wraps the source
term f(x, s) together with its primitive F(x, s) = integral of f in s from 0;
when no closed form is supplied the primitive is evaluated by a fixed
composite Gauss-Legendre rule on [0, s], which keeps the evaluation
vectorized and its s-derivative within quadrature error of f.  Second,
:class:`TruncatedNonlinearity` implements the cutoff of ``|s|^{q(x)-2} s`` at
height K: outside ``|s| <= K`` the growth is lowered to the subcritical power
``sup p - 1`` with the matching constant, which keeps the function continuous
and capped by ``K^{q(x) - sup p} |s|^{sup p - 1}`` everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, HypothesisError
from .exponents import ExponentField
from .expressions import compile_expression

__all__ = [
    "NonlinearityModel",
    "TruncatedNonlinearity",
    "saturating_cubic",
    "zero_model",
    "pure_power_model",
    "model_from_expression",
    "truncation_growth_check",
    "check_hypotheses",
    "GrowthCheckReport",
    "HypothesisReport",
]

# Fixed composite Gauss-Legendre rule on [0, 1]: 8 panels x 12 points.
_GL_PANELS = 8
_GL_DEGREE = 12


def _composite_gl_rule() -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(_GL_DEGREE)
    nodes = []
    weights = []
    width = 1.0 / _GL_PANELS
    for k in range(_GL_PANELS):
        a = k * width
        nodes.append(a + 0.5 * width * (x + 1.0))
        weights.append(0.5 * width * w)
    return np.concatenate(nodes), np.concatenate(weights)


_GL_NODES, _GL_WEIGHTS = _composite_gl_rule()


@dataclass(frozen=True, eq=False)
class NonlinearityModel:
    """Source term f(x, s) with primitive, named for reporting.

    ``fun(s, coords)`` and ``primitive_fun(s, coords)`` take an ndarray of
    state values and, when ``x_dependent``, a tuple of coordinate arrays
    broadcastable against ``s``.  Models must satisfy f(x, 0) = 0.
    """

    name: str
    fun: Callable[..., np.ndarray]
    primitive_fun: Callable[..., np.ndarray]
    x_dependent: bool = False

    def f(self, s: np.ndarray, coords: Sequence[np.ndarray] | None = None) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.asarray(self.fun(s, coords), dtype=float)

    def primitive(self, s: np.ndarray, coords: Sequence[np.ndarray] | None = None) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.asarray(self.primitive_fun(s, coords), dtype=float)


def _gauss_primitive(fun: Callable[..., np.ndarray]) -> Callable[..., np.ndarray]:
    """Build F(s) = integral of f on [0, s] via the fixed composite rule.

    The substitution t = s * tau turns the integral into a fixed-node sum, so
    an entire nodal array of s values is handled in one broadcast pass.
    """

    def primitive(s: np.ndarray, coords=None) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        flat = s.reshape(-1)
        t = _GL_NODES[:, None] * flat[None, :]
        if coords is not None:
            cflat = tuple(np.broadcast_to(c, s.shape).reshape(-1)[None, :] for c in coords)
            vals = fun(t, cflat)
        else:
            vals = fun(t, None)
        out = flat * np.sum(_GL_WEIGHTS[:, None] * vals, axis=0)
        return out.reshape(s.shape)

    return primitive


def _require_zero_at_origin(model: NonlinearityModel, n_coords: int = 1) -> NonlinearityModel:
    coords = (np.array(0.0),) * n_coords if model.x_dependent else None
    probe = model.f(np.array(0.0), coords)
    if not np.all(probe == 0.0):
        raise ConfigError(f"nonlinearity {model.name!r} must vanish at s = 0")
    return model


def saturating_cubic(c: float = 2.8) -> NonlinearityModel:
    """The shipped model ``f(s) = s^3 / (1 + |s|^c)``, x-independent.

    The decay exponent c controls how fast f falls below the subcritical power
    at infinity; c > 4 - inf p is what the large-s hypothesis needs.
    """
    if c <= 0:
        raise ConfigError(f"decay exponent must be positive, got {c}")

    def fun(s, coords=None):
        s = np.asarray(s, dtype=float)
        return s ** 3 / (1.0 + np.abs(s) ** c)

    return _require_zero_at_origin(
        NonlinearityModel(
            name=f"saturating_cubic(c={c:g})",
            fun=fun,
            primitive_fun=_gauss_primitive(fun),
        )
    )


def zero_model() -> NonlinearityModel:
    def fun(s, coords=None):
        return np.zeros_like(np.asarray(s, dtype=float))

    return NonlinearityModel(name="zero", fun=fun, primitive_fun=fun)


def pure_power_model(power: float = 1.0) -> NonlinearityModel:
    """``f(s) = |s|^{power-1} s`` with exact primitive; handy in diagnostics."""
    if power < 1.0:
        raise ConfigError("pure power needs exponent >= 1")

    def fun(s, coords=None):
        s = np.asarray(s, dtype=float)
        return np.abs(s) ** (power - 1.0) * s

    def prim(s, coords=None):
        s = np.asarray(s, dtype=float)
        return np.abs(s) ** (power + 1.0) / (power + 1.0)

    return NonlinearityModel(name=f"pure_power({power:g})", fun=fun, primitive_fun=prim)


def model_from_expression(text: str, dim: int) -> NonlinearityModel:
    """Custom source from an arithmetic expression in s and x1..x<dim>.

    The primitive always comes from the composite quadrature rule, so keep
    custom expressions smooth in s for best accuracy.
    """
    names = tuple(f"x{d + 1}" for d in range(dim))
    x_dep = any(n in text for n in names)
    variables = ("s",) + (names if x_dep else ())
    compiled = compile_expression(text, variables)

    def fun(s, coords=None):
        s = np.asarray(s, dtype=float)
        env = {"s": s}
        if x_dep:
            if coords is None:
                raise ConfigError(f"expression {text!r} needs coordinates")
            env.update({n: c for n, c in zip(names, coords)})
        return np.broadcast_to(np.asarray(compiled(**env), dtype=float), s.shape)

    return _require_zero_at_origin(
        NonlinearityModel(
            name=f"expression({text})",
            fun=fun,
            primitive_fun=_gauss_primitive(fun),
            x_dependent=x_dep,
        ),
        n_coords=len(names),
    )


@dataclass(frozen=True, eq=False)
class TruncatedNonlinearity:
    """Cutoff of the supercritical power at height K >= 2.

    For ``|s| <= K`` this is ``|s|^{q(x)-2} s``; beyond K the exponent drops to
    ``sup p - 1`` with constant ``K^{q(x) - sup p}`` chosen so the two branches
    meet at ``|s| = K``.  ``primitive`` integrates the same expression in s,
    piecewise in closed form.
    """

    K: float
    exps: ExponentField

    def __post_init__(self) -> None:
        if not np.isfinite(self.K) or self.K < 2.0:
            raise ConfigError(f"truncation height K must be >= 2, got {self.K}")

    def _branch_values(self, a: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Magnitude of the truncated term and its envelope, sharing factors.

        Both branches are written as a multiple of ``a^{sup p - 1}`` so the
        envelope inequality and the continuity at ``a = K`` hold exactly in
        floating point, not just up to rounding of independent power calls.
        """
        p_plus = self.exps.p_plus
        common = a ** (p_plus - 1.0)
        bound = self.K ** (q - p_plus) * common
        low_factor = a ** (q - p_plus)
        high_factor = self.K ** (q - p_plus)
        mag = np.where(a <= self.K, low_factor, high_factor) * common
        return mag, bound

    def truncate(self, s: np.ndarray) -> np.ndarray:
        """Evaluate the truncated term at nodal states ``s`` (grid shape)."""
        s = np.asarray(s, dtype=float)
        q = np.broadcast_to(self.exps.values_q, s.shape)
        mag, _ = self._branch_values(np.abs(s), q)
        return mag * np.sign(s)

    def growth_bound(self, s: np.ndarray) -> np.ndarray:
        """The dominating envelope ``K^{q(x) - sup p} |s|^{sup p - 1}``."""
        s = np.asarray(s, dtype=float)
        q = np.broadcast_to(self.exps.values_q, s.shape)
        return self.K ** (q - self.exps.p_plus) * np.abs(s) ** (self.exps.p_plus - 1.0)

    def primitive(self, s: np.ndarray) -> np.ndarray:
        """Primitive of :meth:`truncate` in s, vanishing at 0, even in s."""
        s = np.asarray(s, dtype=float)
        q = np.broadcast_to(self.exps.values_q, s.shape)
        p_plus = self.exps.p_plus
        a = np.abs(s)
        out = np.zeros_like(s)
        low = a <= self.K
        high = ~low
        if np.any(low):
            out[low] = a[low] ** q[low] / q[low]
        if np.any(high):
            qh = q[high]
            out[high] = self.K ** qh / qh + self.K ** (qh - p_plus) * (
                a[high] ** p_plus - self.K ** p_plus
            ) / p_plus
        return out


@dataclass(frozen=True)
class GrowthCheckReport:
    """Envelope check of the truncated term over a dense sample set."""

    max_violation: float
    max_rel_continuity_jump: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.max_violation <= 0.0


def truncation_growth_check(
    tn: TruncatedNonlinearity,
    s_max: float = 50.0,
    n_samples: int = 2001,
) -> GrowthCheckReport:
    """Verify ``|truncate(s)| <= growth_bound(s)`` over a dense symmetric grid.

    The envelope inequality is exact, not asymptotic, so any positive
    violation indicates an implementation bug.  Also reports the worst
    relative mismatch of the two branch formulas at ``|s| = K``.
    """
    q = tn.exps.values_q.ravel()
    s_vals = np.linspace(-s_max, s_max, n_samples)
    if tn.K < s_max:
        s_vals = np.unique(np.concatenate([s_vals, [-tn.K, tn.K]]))
    worst = -np.inf
    chunk = max(1, int(2e6) // max(q.size, 1))
    for start in range(0, s_vals.size, chunk):
        block = s_vals[start : start + chunk]
        a = np.abs(np.broadcast_to(block[:, None], (block.size, q.size)))
        q2 = np.broadcast_to(q[None, :], a.shape)
        mag, bound = tn._branch_values(a, q2)
        worst = max(worst, float(np.max(mag - bound)))

    # Continuity at the knot: evaluate both branch formulas at |s| = K.
    a_knot = np.full(q.shape, tn.K)
    common = a_knot ** (tn.exps.p_plus - 1.0)
    inner = a_knot ** (q - tn.exps.p_plus) * common
    outer = tn.K ** (q - tn.exps.p_plus) * common
    jump = float(np.max(np.abs(inner - outer) / np.maximum(np.abs(inner), 1.0)))
    return GrowthCheckReport(
        max_violation=worst,
        max_rel_continuity_jump=jump,
        samples=int(s_vals.size) * int(q.size),
    )


@dataclass(frozen=True)
class HypothesisReport:
    """Sampled checks of the structural conditions on the source term."""

    sup_abs_f: float
    ratio_at_small: float
    ratio_at_large: float
    tol_ratio: float
    small_ok: bool
    large_ok: bool
    zero_at_origin: bool

    @property
    def all_ok(self) -> bool:
        return (
            np.isfinite(self.sup_abs_f) and self.small_ok and self.large_ok
            and self.zero_at_origin
        )


def check_hypotheses(
    model: NonlinearityModel,
    exps: ExponentField,
    coords: Sequence[np.ndarray] | None = None,
    s_small: float = 1e-3,
    s_large: float = 1e3,
    tol_ratio: float = 0.2,
) -> HypothesisReport:
    """Sample the boundedness and vanishing-ratio conditions on f.

    The ratio is ``|f(x, s)| / |s|^{p(x) - 1}``, which must be small both at
    ``s_small`` (superlinear at the origin relative to the principal power)
    and at ``s_large`` (sublinear at infinity).  This is a diagnostic: the
    report carries the values and flags, nothing is raised here.
    """
    p = exps.values_p.ravel()
    if coords is not None:
        cflat: tuple[np.ndarray, ...] | None = tuple(np.ravel(c) for c in coords)
    else:
        cflat = None

    def max_ratio(s_abs: float) -> float:
        worst = 0.0
        for s in (-s_abs, s_abs):
            sv = np.full(p.shape, float(s))
            fv = model.f(sv, cflat)
            worst = max(worst, float(np.max(np.abs(fv) / s_abs ** (p - 1.0))))
        return worst

    sup_f = 0.0
    for s in np.linspace(-s_large, s_large, 501):
        sv = np.full(p.shape, float(s))
        sup_f = max(sup_f, float(np.max(np.abs(model.f(sv, cflat)))))

    zero_ok = bool(np.all(model.f(np.zeros(p.shape), cflat) == 0.0))
    r_small = max_ratio(s_small)
    r_large = max_ratio(s_large)
    return HypothesisReport(
        sup_abs_f=sup_f,
        ratio_at_small=r_small,
        ratio_at_large=r_large,
        tol_ratio=tol_ratio,
        small_ok=r_small <= tol_ratio,
        large_ok=r_large <= tol_ratio,
        zero_at_origin=zero_ok,
    )


def hypothesis_gate(report: HypothesisReport, name: str) -> None:
    """Raise :class:`HypothesisError` describing every failed flag in ``report``."""
    if report.all_ok:
        return
    problems = []
    if not np.isfinite(report.sup_abs_f):
        problems.append("sampled sup |f| is not finite")
    if not report.zero_at_origin:
        problems.append("f does not vanish at s = 0")
    if not report.small_ok:
        problems.append(
            f"ratio |f|/|s|^(p-1) at small s is {report.ratio_at_small:.3g} "
            f"> {report.tol_ratio:g}"
        )
    if not report.large_ok:
        problems.append(
            f"ratio |f|/|s|^(p-1) at large s is {report.ratio_at_large:.3g} "
            f"> {report.tol_ratio:g}"
        )
    raise HypothesisError(f"nonlinearity {name!r}: " + "; ".join(problems))
