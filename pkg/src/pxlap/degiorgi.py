"""Level-set certification that solutions stay below the truncation level.

The chain of custody for the sup bound: a Caccioppoli-type estimate controls
the gradient energy on level sets, the explicit constants of that estimate
feed a superlinear recursion for the level-set tail energies ``a_i``, and the
recursion collapses to zero exactly when the starting tail ``a_0`` is below a
closed-form threshold.  The module evaluates all of that arithmetic as
written, measures the actual ``a_i`` on the discrete field, and then refuses
to take its own word for it: every certificate is cross-checked against a
brute-force nodal maximum, and a contradiction raises
:class:`CertifierInconsistencyError` rather than returning a bad verdict.

The embedding constant ``S`` is estimated from a sampled Rayleigh quotient,
which is optimistic by construction; the brute-force override is what keeps
the final verdict sound.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CertificationError, CertifierInconsistencyError
from .exponents import ExponentField
from .grid import Grid, ScalarField, gradient, level_set_measure
from .nonlinearity import NonlinearityModel

__all__ = [
    "DeGiorgiConstants",
    "DeGiorgiReport",
    "RecursionResult",
    "CaccioppoliReport",
    "GlobalCertificate",
    "KSelection",
    "compute_constants",
    "compute_sequence",
    "recursion_oracle",
    "caccioppoli_check",
    "caccioppoli_verdict",
    "rayleigh_quotient_min",
    "estimate_sobolev_constant",
    "certify",
    "certify_global",
    "covering_centers",
    "select_K_and_delta",
]

DEFAULT_I_MAX = 40
DEFAULT_FLOOR = 1e-14
DEFAULT_TOL_DISC = 0.05
_SUP_SLACK = 1e-12
_DIVERGENCE_CAP = 1e100


@dataclass(frozen=True)
class DeGiorgiConstants:
    """All closed-form constants of the level-set iteration, plus inputs.

    ``c`` can overflow double precision for extreme exponent spreads, so the
    threshold is always derived from ``log_c``.
    """

    p_minus: float
    p_plus: float
    q_plus: float
    dim_N: int
    pstar_minus: float
    R: float
    lam: float
    mu: float
    K: float
    growth_C: float
    sobolev_S: float
    eta: float
    b: float
    eps: float
    c_p_eps: float
    c_mu_k: float
    c_prime: float
    c_dprime: float
    c: float
    log_c: float
    threshold: float


def compute_constants(
    exps: ExponentField,
    lam: float,
    mu: float,
    K: float,
    R: float,
    growth_C: float,
    sobolev_S: float,
) -> DeGiorgiConstants:
    """Evaluate the iteration constants exactly as written; pure arithmetic."""
    if not 0.0 < R <= 1.0:
        raise CertificationError(f"radius out of range: need 0 < R <= 1, got {R}")
    if lam <= 0 or mu < 0 or K < 2 or growth_C <= 0 or sobolev_S <= 0:
        raise CertificationError(
            "constants require lam > 0, mu >= 0, K >= 2, growth and embedding "
            f"constants > 0; got lam={lam}, mu={mu}, K={K}, "
            f"C={growth_C}, S={sobolev_S}"
        )
    pm, pp = exps.p_minus, exps.p_plus
    qp = exps.q_plus
    n = exps.dim_N
    ps = exps.pstar_minus
    eta = pm / (n - pm)
    b = 2.0 ** (2.0 * ps * ps / pm)
    eps = (1.0 / (2.0 * (pp - 1.0))) ** ((pp - 1.0) / pp)
    c_p_eps = (pp / pm) * 2.0**pp * (2.0 * pp - 2.0) ** ((pp - 1.0) * pm / pp)
    c_mu_k = (
        2.0 * c_p_eps
        + growth_C * lam * 2.0**pp
        + mu * K ** (qp - pp) * 2.0 ** (pp + 1.0)
        + 1.0
    )
    c_prime = 2.0 * c_p_eps + growth_C * lam * 2.0**pp + 1.0
    c_dprime = 2.0 ** (pp + 1.0)
    inner = (
        c_mu_k * (2.0 ** (3.0 * ps) / R**ps + 2.0 ** (2.0 * ps + 1.0))
        + 2.0**pm / R**pm
        + 2.0 ** (pm + 2.0 * ps) / R**pm
    )
    log_c = (
        -(ps / pm) * math.log(sobolev_S)
        + ps * math.log(2.0)
        + (ps / pm) * math.log(inner)
    )
    try:
        c = math.exp(log_c)
    except OverflowError:
        c = math.inf
    threshold = math.exp(-log_c / eta - math.log(b) / (eta * eta))
    return DeGiorgiConstants(
        p_minus=pm,
        p_plus=pp,
        q_plus=qp,
        dim_N=n,
        pstar_minus=ps,
        R=float(R),
        lam=float(lam),
        mu=float(mu),
        K=float(K),
        growth_C=float(growth_C),
        sobolev_S=float(sobolev_S),
        eta=eta,
        b=b,
        eps=eps,
        c_p_eps=c_p_eps,
        c_mu_k=c_mu_k,
        c_prime=c_prime,
        c_dprime=c_dprime,
        c=c,
        log_c=log_c,
        threshold=threshold,
    )


def shrinking_radii(R: float, i_max: int) -> list[float]:
    """The ball radii R/2 + R/2^{i+1}, strictly decreasing toward R/2."""
    return [R / 2.0 + R / 2.0 ** (i + 1) for i in range(i_max + 1)]


def rising_levels(K: float, i_max: int) -> list[float]:
    """The cut levels K(1 - 1/2^{i+1}), strictly increasing toward K."""
    return [K * (1.0 - 1.0 / 2.0 ** (i + 1)) for i in range(i_max + 1)]


def compute_sequence(
    u: ScalarField,
    K: float,
    R: float,
    center,
    i_max: int,
    pstar_minus: float,
) -> list[float]:
    """Tail energies a_i of ``u`` over the shrinking balls and rising levels.

    ``a_i`` integrates ``(u - K_i)^{p*-}`` over the nodes exceeding level
    ``K_i`` inside the ball of radius ``rho_i``.  The sequence is
    nonincreasing by construction (nested sets, shrinking integrand).
    """
    if K < 2:
        raise CertificationError(f"truncation level must be >= 2, got {K}")
    if i_max < 1:
        raise CertificationError(f"need i_max >= 1, got {i_max}")
    # Containment is checked once at the outer radius; the shrinking radii
    # stay inside it.
    level_set_measure(u, -math.inf, R, center, strict=True)
    grid = u.grid
    cell = grid.cell_volume
    out = []
    for rho, k_i in zip(shrinking_radii(R, i_max), rising_levels(K, i_max)):
        ms = level_set_measure(u, k_i, rho, center, strict=False)
        if ms.count == 0:
            out.append(0.0)
            continue
        excess = u.values.ravel()[ms.node_indices] - k_i
        out.append(float(np.sum(excess**pstar_minus)) * cell)
    return out


@dataclass(frozen=True)
class RecursionResult:
    values: list[float]
    converged: bool
    diverged: bool
    iterations: int
    floor: float


def recursion_oracle(
    c: float,
    b: float,
    eta: float,
    a0: float,
    n: int | None = None,
    floor: float = DEFAULT_FLOOR,
    log_c: float | None = None,
) -> RecursionResult:
    """Iterate the worst-case recursion ``a_{i+1} = c * b^i * a_i^{1+eta}``.

    Uses the conjugate variable ``y_i = a_i / (T * b^{-i/eta})`` with ``T``
    the closed-form threshold, for which the recursion is exactly
    ``y_{i+1} = y_i^{1+eta}``.  This keeps the boundary case ``a_0 = T``
    (``y = 1``) on its true geometric decay instead of drifting, and turns
    over/underflow into simple log-space bookkeeping.  Stops early once a
    value drops below ``floor`` (converged) or explodes (diverged).

    ``log_c`` overrides ``log(c)`` for constants too large to represent.
    """
    if log_c is None:
        if c <= 0:
            raise CertificationError(f"recursion needs c > 0, got c={c}")
        log_c = math.log(c)
    if b <= 1 or eta <= 0:
        raise CertificationError(
            f"recursion needs b > 1, eta > 0; got b={b}, eta={eta}"
        )
    if a0 < 0:
        raise CertificationError(f"recursion needs a0 >= 0, got {a0}")
    if n is None:
        n = int(math.ceil(200.0 * max(1.0, 1.0 / eta)))
    if a0 == 0.0:
        return RecursionResult([0.0] * (n + 1), True, False, n, floor)
    if a0 < floor:
        return RecursionResult([a0], True, False, 0, floor)
    log_b = math.log(b)
    log_t = -log_c / eta - log_b / (eta * eta)
    log_y = math.log(a0) - log_t
    values = [a0]
    converged = False
    diverged = False
    i = 0
    for i in range(1, n + 1):
        log_y *= 1.0 + eta
        log_a = log_t - (i / eta) * log_b + log_y
        a_i = math.exp(log_a) if log_a < 700.0 else math.inf
        values.append(a_i)
        if a_i < floor:
            converged = True
            break
        if a_i > _DIVERGENCE_CAP or not math.isfinite(a_i):
            diverged = True
            break
    return RecursionResult(values, converged, diverged, i, floor)


@dataclass(frozen=True)
class CaccioppoliReport:
    lhs: float
    rhs: float
    tol_disc: float
    passed: bool
    level: float
    t: float
    s: float
    center: tuple[float, ...]
    inner_count: int
    outer_count: int


def caccioppoli_verdict(lhs: float, rhs: float, tol_disc: float = DEFAULT_TOL_DISC) -> bool:
    """The bare comparator, exposed so its sanity is testable in isolation."""
    return lhs <= rhs * (1.0 + tol_disc)


def caccioppoli_check(
    u: ScalarField,
    constants: DeGiorgiConstants,
    level: float,
    t: float,
    s: float,
    center,
    tol_disc: float = DEFAULT_TOL_DISC,
) -> CaccioppoliReport:
    """Evaluate both sides of the interior gradient estimate on the grid.

    Left side: gradient energy at power p- over the level set inside the
    inner ball.  Right side: the constant ``C' + C'' mu K^{q+ - p+}`` times
    the scaled tail integral plus a volume term over the outer ball.  This is
    a diagnostic; discretization error is absorbed by ``tol_disc``.
    """
    if level < 1.0:
        raise CertificationError(f"level must be >= 1, got {level}")
    if not 0.0 < t < s <= 1.0:
        raise CertificationError(f"need 0 < t < s <= 1, got t={t}, s={s}")
    grid = u.grid
    inner = level_set_measure(u, level, t, center, strict=True)
    outer = level_set_measure(u, level, s, center, strict=True)
    cell = grid.cell_volume
    grads = gradient(u)
    grad_mag = np.sqrt(np.sum(grads**2, axis=-1)).ravel()
    lhs = float(np.sum(grad_mag[inner.node_indices] ** constants.p_minus)) * cell
    excess = u.values.ravel()[outer.node_indices] - level
    tail = float(np.sum((excess / (s - t)) ** constants.pstar_minus)) * cell
    factor = (
        constants.c_prime
        + constants.c_dprime
        * constants.mu
        * constants.K ** (constants.q_plus - constants.p_plus)
    )
    rhs = factor * (tail + (level**constants.p_plus + 1.0) * outer.measure)
    return CaccioppoliReport(
        lhs=lhs,
        rhs=rhs,
        tol_disc=tol_disc,
        passed=caccioppoli_verdict(lhs, rhs, tol_disc),
        level=float(level),
        t=float(t),
        s=float(s),
        center=tuple(float(x) for x in center),
        inner_count=inner.count,
        outer_count=outer.count,
    )


def _sine_products(grid: Grid, max_mode: int) -> list[np.ndarray]:
    coords = grid.coordinate_arrays()
    hats = [
        (c - lo) / (hi - lo) for c, (lo, hi) in zip(coords, grid.extents)
    ]
    fields = []
    for modes in itertools.product(range(1, max_mode + 1), repeat=grid.dim):
        v = np.ones(grid.shape)
        for hat, k in zip(hats, modes):
            v = v * np.sin(np.pi * k * hat)
        fields.append(v)
    return fields


def rayleigh_quotient_min(
    grid: Grid,
    p_minus: float,
    pstar_minus: float,
    sample_count: int = 64,
    seed: int = 0,
) -> float:
    """Minimum of ``(grad energy)^{1/p-} / (mass)^{1/p*-}`` to the power p-.

    Sampled over sine products, random smooth bumps, and smoothed noise, all
    zero on the boundary.  A sampled minimum can only overestimate the true
    infimum, which makes downstream thresholds optimistic; soundness is
    restored by the certifier's brute-force override.
    """
    rng = np.random.default_rng(seed)
    from .multisolve import _random_bump, _smooth_noise

    fields = _sine_products(grid, max_mode=3)
    while len(fields) < sample_count:
        if rng.random() < 0.5:
            fields.append(_random_bump(grid, rng))
        else:
            fields.append(_smooth_noise(grid, rng))
    best = math.inf
    cell = grid.cell_volume
    for v in fields:
        v = np.array(v, dtype=float)
        v[grid.boundary_mask] = 0.0
        grads = gradient(ScalarField(v, grid))
        grad_mag = np.sqrt(np.sum(grads**2, axis=-1))
        num = float(np.sum(grad_mag**p_minus)) * cell
        den = float(np.sum(np.abs(v) ** pstar_minus)) * cell
        if den <= 0.0 or num <= 0.0:
            continue
        ratio = num ** (1.0 / p_minus) / den ** (1.0 / pstar_minus)
        best = min(best, ratio**p_minus)
    if not math.isfinite(best):
        raise CertificationError("no nondegenerate sample for the embedding constant")
    return best


def estimate_sobolev_constant(
    exps: ExponentField,
    grid: Grid,
    sample_count: int = 64,
    seed: int = 0,
) -> float:
    """Embedding constant estimate at the exponent field's p- and p*-."""
    return rayleigh_quotient_min(
        grid, exps.p_minus, exps.pstar_minus, sample_count, seed
    )


def _direct_sup(u: ScalarField, R: float, center) -> float:
    """Brute-force max of |u| over nodes within R/2 of the center.

    Deliberately a plain nodal loop over coordinates, independent of the
    level-set machinery it cross-checks.
    """
    half = R / 2.0
    best = 0.0
    for idx, point in zip(
        np.ndindex(u.grid.shape), u.grid.node_coordinates()
    ):
        if math.dist(point, tuple(center)) < half:
            best = max(best, abs(float(u.values[idx])))
    return best


@dataclass(frozen=True)
class DeGiorgiReport:
    """Certificate for one field, one ball: measured decay plus cross-checks."""

    a_sequence: list[float]
    a_sequence_negative: list[float]
    modeled_sequence: list[float]
    constants: DeGiorgiConstants
    threshold: float
    threshold_met: bool
    empirical_decay: bool
    certified_bound: bool
    direct_sup: float
    K: float
    R: float
    center: tuple[float, ...]
    floor: float
    i_max: int


def _decays(seq: list[float], floor: float) -> bool:
    nonincreasing = all(seq[i + 1] <= seq[i] + 1e-300 for i in range(len(seq) - 1))
    return nonincreasing and seq[-1] <= floor


def certify(
    u: ScalarField,
    exps: ExponentField,
    lam: float,
    mu: float,
    K: float,
    R: float,
    center,
    growth_C: float,
    sobolev_S: float,
    i_max: int = DEFAULT_I_MAX,
    floor: float = DEFAULT_FLOOR,
) -> DeGiorgiReport:
    """Certify ``|u| <= K`` on the half ball, measuring both signs of u.

    ``certified_bound`` requires the measured tail sequences of both ``u``
    and ``-u`` to be nonincreasing and to hit the floor, and the starting
    tails to sit below the closed-form threshold.  The verdict is then
    cross-checked against the brute-force nodal sup; a certificate that
    contradicts it is a hard failure, never a return value.
    """
    constants = compute_constants(exps, lam, mu, K, R, growth_C, sobolev_S)
    ps = exps.pstar_minus
    seq_pos = compute_sequence(u, K, R, center, i_max, ps)
    neg = ScalarField(-u.values, u.grid)
    seq_neg = compute_sequence(neg, K, R, center, i_max, ps)
    threshold = constants.threshold
    threshold_met = seq_pos[0] <= threshold and seq_neg[0] <= threshold
    decay = _decays(seq_pos, floor) and _decays(seq_neg, floor)
    certified = threshold_met and decay
    modeled = recursion_oracle(
        constants.c, constants.b, constants.eta, seq_pos[0],
        n=i_max, floor=floor, log_c=constants.log_c,
    ).values
    direct = _direct_sup(u, R, center)
    if certified and direct > K + _SUP_SLACK:
        raise CertifierInconsistencyError(
            f"certifier inconsistency: certificate claims |u| <= {K} on the "
            f"half ball at {tuple(center)} but the nodal max is {direct}"
        )
    return DeGiorgiReport(
        a_sequence=seq_pos,
        a_sequence_negative=seq_neg,
        modeled_sequence=modeled,
        constants=constants,
        threshold=threshold,
        threshold_met=threshold_met,
        empirical_decay=decay,
        certified_bound=certified,
        direct_sup=direct,
        K=float(K),
        R=float(R),
        center=tuple(float(x) for x in center),
        floor=floor,
        i_max=i_max,
    )


def covering_centers(grid: Grid, R: float) -> list[tuple[float, ...]]:
    """Lattice of ball centers whose half balls cover the admissible core.

    Centers keep the full ball of radius R strictly inside the domain; the
    lattice pitch R/sqrt(N) makes the half balls overlap enough to cover
    the core without gaps.
    """
    pitch = R / math.sqrt(grid.dim)
    axes = []
    for lo, hi in grid.extents:
        a = lo + R * (1.0 + 1e-9)
        b = hi - R * (1.0 + 1e-9)
        if a > b:
            return []
        count = max(1, int(math.ceil((b - a) / pitch)) + 1)
        axes.append(np.linspace(a, b, count))
    return [tuple(float(c) for c in combo) for combo in itertools.product(*axes)]


@dataclass(frozen=True)
class GlobalCertificate:
    certified: bool
    all_centers_certified: bool
    boundary_shell_ok: bool
    reports: list[DeGiorgiReport]
    centers: list[tuple[float, ...]]
    uncovered_count: int
    shell_sup: float
    K: float


def certify_global(
    u: ScalarField,
    exps: ExponentField,
    lam: float,
    mu: float,
    K: float,
    R: float,
    growth_C: float,
    sobolev_S: float,
    i_max: int = DEFAULT_I_MAX,
    floor: float = DEFAULT_FLOOR,
) -> GlobalCertificate:
    """Extend the interior verdict to every node of the domain.

    Runs :func:`certify` on a covering lattice of interior centers, then
    checks the nodes no half ball reaches (a shell near the boundary, where
    the Dirichlet condition pins the field) directly against K.
    """
    grid = u.grid
    centers = covering_centers(grid, R)
    reports = [
        certify(u, exps, lam, mu, K, R, c, growth_C, sobolev_S, i_max, floor)
        for c in centers
    ]
    all_centers = bool(reports) and all(r.certified_bound for r in reports)

    covered = np.zeros(grid.shape, dtype=bool)
    coords = grid.coordinate_arrays()
    half = R / 2.0
    for ctr in centers:
        dist2 = np.zeros(grid.shape)
        for c_arr, c in zip(coords, ctr):
            dist2 += (c_arr - c) ** 2
        covered |= dist2 < half * half
    uncovered = ~covered
    shell_sup = float(np.max(np.abs(u.values[uncovered]))) if uncovered.any() else 0.0
    shell_ok = shell_sup <= K + _SUP_SLACK
    return GlobalCertificate(
        certified=all_centers and shell_ok,
        all_centers_certified=all_centers,
        boundary_shell_ok=shell_ok,
        reports=reports,
        centers=centers,
        uncovered_count=int(np.count_nonzero(uncovered)),
        shell_sup=shell_sup,
        K=float(K),
    )


@dataclass(frozen=True)
class KSelection:
    K: float
    delta1: float
    delta: float
    bracket: float
    a0_max: float
    a0_effective: float
    scanned: list[tuple[float, float]]  # (K, bracket value)


def _tail_a0(u: ScalarField, K: float, R: float, center, pstar_minus: float) -> float:
    ms = level_set_measure(u, K / 2.0, R, center, strict=True)
    if ms.count == 0:
        return 0.0
    excess = u.values.ravel()[ms.node_indices] - K / 2.0
    return float(np.sum(excess**pstar_minus)) * u.grid.cell_volume


DEFAULT_TAIL_FLOOR = 1e-20


def select_K_and_delta(
    u_family: list[ScalarField],
    exps: ExponentField,
    lam: float,
    R: float,
    growth_C: float,
    sobolev_S: float,
    K_grid: list[float],
    mu_cap: float,
    centers: list[tuple[float, ...]] | None = None,
    tail_floor: float = DEFAULT_TAIL_FLOOR,
) -> KSelection:
    """Scan the K grid for a positive selection bracket, then price delta1.

    The bracket is the explicit expression whose positivity admits a strictly
    positive perturbation budget; its only field dependence is the worst tail
    integral ``a_0`` at level K/2 over the candidate balls (both signs of
    every family member).

    On a grid, a bounded field's tail drops to exactly zero once K/2 clears
    its sup, and the formula would then price an infinite budget.  The
    quadrature cannot actually distinguish zero from anything below its
    resolution, so the tail is floored at ``tail_floor`` before pricing.
    The budget is monotone decreasing in the tail, so flooring can only
    shrink it: the returned delta1 is a conservative underestimate of the
    formula's value at the true tail.  The final authority stays with the
    post-hoc certification loop either way.
    """
    if not K_grid or any(k < 2 for k in K_grid):
        raise CertificationError("K grid must be nonempty with every entry >= 2")
    if sorted(K_grid) != list(K_grid):
        raise CertificationError("K grid must be increasing")
    if not u_family:
        raise CertificationError("need at least one field to select K")
    grid = u_family[0].grid
    if centers is None:
        centers = covering_centers(grid, R)
    if not centers:
        raise CertificationError(
            f"no ball of radius {R} fits strictly inside the domain"
        )
    pm, pp = exps.p_minus, exps.p_plus
    qp = exps.q_plus
    n = exps.dim_N
    ps = exps.pstar_minus
    c_p_eps = (pp / pm) * 2.0**pp * (2.0 * pp - 2.0) ** ((pp - 1.0) * pm / pp)
    inv = 1.0 / (2.0 ** (3.0 * ps) / R**ps + 2.0 ** (2.0 * ps + 1.0))
    geom = 2.0**pm / R**pm + 2.0 ** (pm + 2.0 * ps) / R**pm

    scanned: list[tuple[float, float]] = []
    best_bracket = -math.inf
    for K in K_grid:
        a0_max = 0.0
        for u in u_family:
            for sgn in (1.0, -1.0):
                side = u if sgn > 0 else ScalarField(-u.values, u.grid)
                for ctr in centers:
                    a0_max = max(a0_max, _tail_a0(side, K, R, ctr, ps))
        a0_eff = max(a0_max, tail_floor)
        sob_term = sobolev_S * 2.0 ** (-pm - 2.0 * n) / a0_eff ** (pm / n)
        bracket = inv * (sob_term - geom) - 2.0 * c_p_eps - lam * growth_C * 2.0**pp - 1.0
        scanned.append((float(K), bracket))
        best_bracket = max(best_bracket, bracket)
        if bracket > 0.0:
            denom = K ** (qp - pp) * 2.0 ** (pp + 1.0)
            return KSelection(
                K=float(K),
                delta1=bracket / denom,
                delta=min(bracket / denom, mu_cap),
                bracket=bracket,
                a0_max=a0_max,
                a0_effective=a0_eff,
                scanned=scanned,
            )
    raise CertificationError(
        "no admissible K at this resolution; largest bracket value seen was "
        f"{best_bracket:.6g} over K grid {list(K_grid)}"
    )
