"""Critical-point search: minimization, local-min verification, mountain pass.

Minimization is monotone Armijo descent with the inverse-Laplacian (Sobolev)
preconditioner from the problem object and a carried-over step size; for the
p = 2 / zero-forcing case one step lands on the exact minimizer.  Armijo
progress dies near a critical point once energy differences drop below double
resolution, so a matrix-free Krylov polish on the gradient finishes the last
stretch inside the located basin, guarded against basin hopping.  The
mountain-pass search relaxes an elastic string between two endpoints, takes
the maximum-energy node as a guess, and drives the squared preconditioned
residual to zero with finite-difference curvature probes.  No Hessians are
ever assembled.

The descent/saddle cores are generic over plain callables so they can be
exercised on toy landscapes in the tests.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import NoConvergence, newton_krylov
from scipy.sparse.linalg import LinearOperator

from .energy import (
    EnergyReport,
    TruncatedProblem,
    principal_energy,
    source_potential,
)
from .errors import ConfigError, LandscapeError
from .grid import Grid, ScalarField, l2_distance
from .varspace import sobolev_norm

__all__ = [
    "SolverParams",
    "MinimizeResult",
    "SaddleResult",
    "SolutionTriple",
    "LocalMinReport",
    "descend",
    "newton_polish",
    "refine_saddle",
    "relax_string",
    "minimize_energy",
    "find_global_minimizer",
    "verify_local_min_at_zero",
    "mountain_pass",
    "solve_truncated_problem",
    "build_starts",
]

log = logging.getLogger(__name__)

_LS_MAX_TRIALS = 60
_STEP_MAX = 64.0


@dataclass(frozen=True)
class SolverParams:
    """Knobs for the critical-point searches.

    ``tol`` is on the sup norm of the energy gradient.  ``distinctness`` is a
    relative L2 threshold; the absolute threshold is ``distinctness *
    sqrt(domain volume)``.  ``amplitude_guard`` aborts a descent whose iterate
    exceeds that sup norm, which walls off the runaway region the truncated
    term opens up at large amplitudes; ``None`` disables the guard.
    """

    tol: float = 1e-8
    max_iter: int = 4000
    ls_contraction: float = 0.5
    ls_slope: float = 1e-4
    multistart: int = 16
    path_nodes: int = 21
    distinctness: float = 1e-3
    eps_reg: float = 1e-8
    seed: int = 20260823
    amplitude_guard: float | None = None
    string_sweeps: int = 40
    saddle_max_iter: int = 6000
    stall_window: int = 40
    polish_trigger: float = 1e-4

    def __post_init__(self) -> None:
        if not (self.tol > 0 and self.distinctness > 0 and self.eps_reg >= 0):
            raise ConfigError("solver tolerances must be positive")
        if not (0 < self.ls_contraction < 1 and 0 < self.ls_slope < 1):
            raise ConfigError("line-search constants must sit in (0, 1)")
        if self.multistart < 1 or self.max_iter < 1 or self.path_nodes < 3:
            raise ConfigError(
                "need multistart >= 1, max_iter >= 1 and path_nodes >= 3"
            )


@dataclass
class MinimizeResult:
    values: np.ndarray
    energy: float
    residual_sup: float
    iterations: int
    status: str  # "converged" or "descent stagnation"
    trace: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def descend(
    value_fn,
    grad_fn,
    x0: np.ndarray,
    params: SolverParams,
    precond_fn=None,
    guard: float | None = None,
) -> MinimizeResult:
    """Monotone preconditioned descent with backtracking line search.

    Accepts a trial step only under the sufficient-decrease rule, so the
    energy trace is nonincreasing by construction.  The accepted step size is
    carried to the next iteration and allowed to grow by one doubling.  Stops
    early once the residual has gone ``stall_window`` iterations without a
    0.1 percent improvement; callers can then polish with
    :func:`refine_saddle`, which does not pay the floating-point resolution
    floor of comparing nearly equal energies.
    """
    x = np.array(x0, dtype=float, copy=True)
    energy = float(value_fn(x))
    g = np.asarray(grad_fn(x))
    step = 1.0
    trace = [(0, energy, float(np.max(np.abs(g))))]
    status = "descent stagnation"
    best_sup = float(np.max(np.abs(g)))
    stagnant = 0
    it = 0
    for it in range(1, params.max_iter + 1):
        sup = float(np.max(np.abs(g)))
        if sup <= params.tol:
            status = "converged"
            break
        if sup < 0.999 * best_sup:
            best_sup = sup
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= params.stall_window:
                break
        d = -precond_fn(g) if precond_fn is not None else -g
        slope = float(np.vdot(g, d))
        if slope >= 0.0:
            d = -g
            slope = -float(np.vdot(g, g))
        alpha = min(2.0 * step, _STEP_MAX)
        accepted = False
        for _ in range(_LS_MAX_TRIALS):
            xt = x + alpha * d
            if guard is not None and float(np.max(np.abs(xt))) > guard:
                alpha *= params.ls_contraction
                continue
            et = float(value_fn(xt))
            if np.isfinite(et) and et <= energy + params.ls_slope * alpha * slope:
                accepted = True
                break
            alpha *= params.ls_contraction
        if not accepted:
            break
        x = xt
        energy = et
        step = alpha
        g = np.asarray(grad_fn(x))
        trace.append((it, energy, float(np.max(np.abs(g)))))
    else:
        it = params.max_iter
    sup = float(np.max(np.abs(g)))
    if sup <= params.tol:
        status = "converged"
    if status != "converged":
        log.debug("descent stagnation at iteration %d, residual sup %.3e", it, sup)
    return MinimizeResult(
        values=x,
        energy=energy,
        residual_sup=sup,
        iterations=it,
        status=status,
        trace=trace,
    )


def newton_polish(
    problem: TruncatedProblem,
    x0: np.ndarray,
    params: SolverParams,
) -> MinimizeResult:
    """Solve ``gradient = 0`` on the interior nodes by matrix-free Newton-Krylov.

    Jacobian action comes from finite differencing the gradient, the inner
    solves are lgmres preconditioned by the problem's inverse Laplacian, all
    via scipy.  No acceptance policy here: callers decide whether the
    converged point is the one they wanted (energy, guard, and move checks).
    """
    grid = problem.grid
    interior = ~grid.boundary_mask.ravel()
    n = int(interior.sum())
    shape = grid.shape
    evals = [0]

    def expand(xi: np.ndarray) -> np.ndarray:
        full = np.zeros(interior.size)
        full[interior] = xi
        return full.reshape(shape)

    def residual_fn(xi: np.ndarray) -> np.ndarray:
        evals[0] += 1
        return problem.gradient(expand(xi)).ravel()[interior]

    inner_m = LinearOperator(
        (n, n),
        matvec=lambda v: problem.precondition(expand(v)).ravel()[interior],
    )
    xi0 = np.asarray(x0, dtype=float).ravel()[interior]
    status = "converged"
    try:
        sol = newton_krylov(
            residual_fn,
            xi0,
            f_tol=0.5 * params.tol,
            maxiter=100,
            method="lgmres",
            inner_M=inner_m,
        )
    except NoConvergence as exc:
        sol = np.asarray(exc.args[0], dtype=float)
        status = "saddle search failed"
    except (ValueError, FloatingPointError):
        sol = xi0
        status = "saddle search failed"
    values = expand(sol)
    g = problem.gradient(values)
    sup = float(np.max(np.abs(g)))
    if sup > params.tol:
        status = "saddle search failed"
    return MinimizeResult(
        values=values,
        energy=problem.energy(values),
        residual_sup=sup,
        iterations=evals[0],
        status="converged" if status == "converged" else status,
    )


def _basin_cap(base: np.ndarray, grid: Grid) -> float:
    """Largest L2 move a polish may take while still counting as the same point."""
    norm = float(np.sqrt(np.sum(base**2) * grid.cell_volume))
    return 0.05 * max(1.0, norm)


def minimize_energy(
    problem: TruncatedProblem,
    u_init: ScalarField,
    params: SolverParams,
) -> MinimizeResult:
    """Descend the problem's total energy from ``u_init`` (boundary forced to 0).

    Armijo descent on a large energy stalls once the step-induced energy
    change falls below the resolution of double precision, typically decades
    above the residual target.  A stalled run is handed to the Newton-Krylov
    polish; the polished point is accepted only if it converged, kept the
    energy from rising, moved less than a small fraction of the solution
    scale, and respected the amplitude guard.  The squared-residual refiner
    is the fallback for stalls that Newton cannot finish.
    """
    start = u_init.zero_boundary()
    result = descend(
        problem.energy,
        problem.gradient,
        start.values,
        params,
        precond_fn=problem.precondition,
        guard=params.amplitude_guard,
    )
    if result.converged:
        return result

    cap = _basin_cap(result.values, problem.grid)

    def moved_from(values: np.ndarray) -> float:
        return float(
            np.sqrt(np.sum((values - result.values) ** 2) * problem.grid.cell_volume)
        )

    newton = newton_polish(problem, result.values, params)
    guard_ok = params.amplitude_guard is None or (
        float(np.max(np.abs(newton.values))) <= params.amplitude_guard
    )
    # Energy slack is relative: on a near-degenerate valley floor the descent
    # iterate can sit a few parts in 1e9 below the exact critical value, and
    # the polish must still count as staying put.
    energy_ok = newton.energy <= result.energy + 1e-6 * (1.0 + abs(result.energy))
    if newton.converged and guard_ok and energy_ok and moved_from(newton.values) <= cap:
        return MinimizeResult(
            values=newton.values,
            energy=newton.energy,
            residual_sup=newton.residual_sup,
            iterations=result.iterations + newton.iterations,
            status="converged",
            trace=result.trace,
        )

    if result.residual_sup <= params.polish_trigger:
        polished = refine_saddle(
            problem.energy,
            problem.gradient,
            result.values,
            params,
            precond_fn=problem.precondition,
        )
        if (
            polished.residual_sup < result.residual_sup
            and moved_from(polished.values) <= cap
        ):
            result = MinimizeResult(
                values=polished.values,
                energy=polished.energy,
                residual_sup=polished.residual_sup,
                iterations=result.iterations + polished.iterations,
                status=polished.status if polished.converged else result.status,
                trace=result.trace,
            )
    return result


def _smooth_noise(grid: Grid, rng: np.random.Generator, passes: int = 12) -> np.ndarray:
    """Zero-boundary random field smoothed by repeated neighbor averaging."""
    v = rng.standard_normal(grid.shape)
    for _ in range(passes):
        out = np.copy(v)
        for d in range(grid.dim):
            out += 0.5 * (np.roll(v, 1, axis=d) + np.roll(v, -1, axis=d))
        v = out / (1.0 + grid.dim)
        v[grid.boundary_mask] = 0.0
    return v


def _random_bump(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    center = [
        lo + (0.3 + 0.4 * rng.random()) * (hi - lo) for lo, hi in grid.extents
    ]
    widths = [
        (0.15 + 0.55 * rng.random()) * 0.5 * (hi - lo) for lo, hi in grid.extents
    ]
    coords = grid.coordinate_arrays()
    if rng.random() < 0.5:
        r2 = np.zeros(grid.shape)
        for c_arr, c, w in zip(coords, center, widths):
            r2 += ((c_arr - c) / w) ** 2
        t = np.sqrt(r2)
        vals = np.where(t < 1.0, np.cos(0.5 * np.pi * np.minimum(t, 1.0)) ** 2, 0.0)
    else:
        vals = np.ones(grid.shape)
        for c_arr, c, w in zip(coords, center, widths):
            t = np.abs(c_arr - c) / w
            vals *= np.where(t < 1.0, np.cos(0.5 * np.pi * np.minimum(t, 1.0)) ** 2, 0.0)
    amp = float(np.exp(rng.uniform(np.log(0.25), np.log(4.0))))
    sign = 1.0 if rng.random() < 0.5 else -1.0
    vals = sign * amp * vals
    vals[grid.boundary_mask] = 0.0
    return vals


def build_starts(
    problem: TruncatedProblem,
    params: SolverParams,
    witness: ScalarField | None = None,
    extra_starts: tuple[ScalarField, ...] = (),
) -> list[ScalarField]:
    """Assemble the multistart family: witness rescales, extras, seeded bumps."""
    grid = problem.grid
    starts: list[ScalarField] = []
    if witness is not None:
        for scale in (1.0, 0.6, 1.6):
            starts.append(ScalarField(scale * witness.values, grid).zero_boundary())
    for extra in extra_starts:
        starts.append(extra.zero_boundary())
    rng = np.random.default_rng(params.seed)
    while len(starts) < max(params.multistart, len(starts)):
        starts.append(ScalarField(_random_bump(grid, rng), grid))
    return starts


def find_global_minimizer(
    problem: TruncatedProblem,
    params: SolverParams,
    witness: ScalarField | None = None,
    lambda_min: float | None = None,
    extra_starts: tuple[ScalarField, ...] = (),
) -> tuple[MinimizeResult, list[MinimizeResult]]:
    """Multistart descent; returns the lowest-energy result and all runs.

    Selection is energy first: a converged run only wins if it reaches the
    lowest energy seen across all starts up to a relative slack, so runs that
    converged into a shallow basin (typically the zero one) can never shadow
    a deep run that stalled.  When the coupling is known to exceed the
    admissible threshold the best energy must be negative; a nonnegative best
    then raises :class:`LandscapeError` because it contradicts the witness
    construction.
    """
    starts = build_starts(problem, params, witness, extra_starts)
    results = [minimize_energy(problem, s, params) for s in starts]
    floor = min(r.energy for r in results)
    if lambda_min is not None and problem.lam > lambda_min and floor >= -1e-12:
        raise LandscapeError(
            "landscape inconsistency: no start reached negative energy although "
            f"the coupling {problem.lam:.6g} exceeds the threshold {lambda_min:.6g}"
        )
    slack = 1e-6 * (1.0 + abs(floor))
    deep_converged = [r for r in results if r.converged and r.energy <= floor + slack]
    if deep_converged:
        best = min(deep_converged, key=lambda r: r.energy)
    else:
        best = min(results, key=lambda r: r.energy)
    return best, results


@dataclass(frozen=True)
class LocalMinReport:
    """Ring sampling of the energy around zero in the Sobolev metric."""

    radii: tuple[float, ...]
    min_energy: tuple[float, ...]
    max_ratio: tuple[float, ...]
    sample_count: int
    passed: bool
    ratio_decreasing: bool


def verify_local_min_at_zero(
    problem: TruncatedProblem,
    ring_radii: tuple[float, ...] = (1e-1, 1e-2, 1e-3),
    sample_count: int = 64,
    seed: int | None = None,
) -> LocalMinReport:
    """Sample random smooth directions on Sobolev-norm rings around zero.

    Records the minimum total energy and the maximum source/principal ratio
    per ring.  Raises :class:`LandscapeError` if the smallest ring carries a
    nonpositive energy sample, since that contradicts a strict local minimum
    at zero.
    """
    grid = problem.grid
    rng = np.random.default_rng(problem.exps.dim_N if seed is None else seed)
    directions = []
    for _ in range(sample_count):
        v = _smooth_noise(grid, rng)
        nrm = sobolev_norm(ScalarField(v, grid), problem.exps)
        if nrm <= 0.0:
            continue
        directions.append(v / nrm)
    radii = tuple(sorted(ring_radii, reverse=True))
    min_e, max_r = [], []
    for r in radii:
        energies, ratios = [], []
        for v in directions:
            vals = r * v
            energies.append(problem.energy(vals))
            u = ScalarField(vals, grid)
            phi = principal_energy(u, problem.exps, problem.eps_reg)
            j = source_potential(u, problem.model)
            ratios.append(j / phi if phi > 0 else 0.0)
        min_e.append(float(np.min(energies)))
        max_r.append(float(np.max(ratios)))
    passed = min_e[-1] > 0.0
    decreasing = all(max_r[i] > max_r[i + 1] for i in range(len(max_r) - 1))
    if not passed:
        raise LandscapeError(
            f"local-min verification failed: energy {min_e[-1]:.3e} <= 0 "
            f"on the ring of radius {radii[-1]:g}"
        )
    return LocalMinReport(
        radii=radii,
        min_energy=tuple(min_e),
        max_ratio=tuple(max_r),
        sample_count=len(directions),
        passed=passed,
        ratio_decreasing=decreasing,
    )


def relax_string(
    value_fn,
    grad_fn,
    endpoints: tuple[np.ndarray, np.ndarray],
    params: SolverParams,
    precond_fn=None,
    reparametrize: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Elastic-string relaxation between two fixed endpoints.

    Returns ``(path, energies)`` where path has ``params.path_nodes`` states.
    Interior nodes take small descent steps orthogonal to the local tangent;
    with ``reparametrize`` the path is then redistributed to equal chord
    length, which keeps nodes from bunching into the wells.  Turn it off when
    the initial node placement is deliberately concentrated around a barrier.
    """
    a, b = endpoints
    m = params.path_nodes
    ts = np.linspace(0.0, 1.0, m)
    path = np.stack([(1 - t) * a + t * b for t in ts])
    flat = path.reshape(m, -1)
    steps = np.full(m, 0.25)
    for _ in range(params.string_sweeps):
        for k in range(1, m - 1):
            g = np.asarray(grad_fn(flat[k].reshape(a.shape))).ravel()
            tau = flat[k + 1] - flat[k - 1]
            tau_norm = float(np.linalg.norm(tau))
            if tau_norm > 0:
                tau /= tau_norm
                g = g - float(np.dot(g, tau)) * tau
            d = (
                -precond_fn(g.reshape(a.shape)).ravel()
                if precond_fn is not None
                else -g
            )
            e_cur = float(value_fn(flat[k].reshape(a.shape)))
            trial = flat[k] + steps[k] * d
            if float(value_fn(trial.reshape(a.shape))) < e_cur:
                flat[k] = trial
                steps[k] = min(steps[k] * 1.5, 2.0)
            else:
                steps[k] = max(steps[k] * 0.5, 1e-6)
        if not reparametrize:
            continue
        seg = np.linalg.norm(np.diff(flat, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        if cum[-1] > 0:
            targets = np.linspace(0.0, cum[-1], m)
            new_flat = np.empty_like(flat)
            new_flat[0], new_flat[-1] = flat[0], flat[-1]
            for k in range(1, m - 1):
                j = int(np.searchsorted(cum, targets[k]) - 1)
                j = min(max(j, 0), m - 2)
                w = (targets[k] - cum[j]) / max(cum[j + 1] - cum[j], 1e-300)
                new_flat[k] = (1 - w) * flat[j] + w * flat[j + 1]
            flat = new_flat
    path = flat.reshape(m, *a.shape)
    energies = np.array([float(value_fn(p)) for p in path])
    return path, energies


def refine_saddle(
    value_fn,
    grad_fn,
    x0: np.ndarray,
    params: SolverParams,
    precond_fn=None,
) -> MinimizeResult:
    """Drive the gradient to zero by conjugate descent on the squared residual.

    The objective is ``0.5 <g, M g>`` with M the preconditioner; its gradient
    is the Hessian action on ``M g``, obtained from a central finite
    difference of the gradient along that direction.  First order only: the
    Hessian is probed, never formed.

    Search directions are Polak-Ribiere conjugate updates of the
    preconditioned objective gradient.  Plain steepest descent here inherits
    the SQUARE of the operator's conditioning (the objective Hessian near a
    root is H M H) and crawls once the easy digits are gone; the conjugate
    recurrence restores the square-root rate at no extra gradient cost.

    Rejected trial steps are refit by quadratic interpolation instead of
    blind halving, under a deliberately strong sufficient-decrease rule
    (0.1, not the descent loop's 1e-4): near a root the objective is an even
    parabola along the direction, and a weak rule happily accepts the
    overshooting step that mirrors the iterate across the root, decaying a
    percent per step instead of converging.  The interpolation lands on the
    parabola's vertex in one refit.
    """
    x = np.array(x0, dtype=float, copy=True)
    ident = (lambda r: r) if precond_fn is None else precond_fn
    decrease = 0.1

    def theta_and_pieces(vec):
        g = np.asarray(grad_fn(vec))
        mg = np.asarray(ident(g))
        return 0.5 * float(np.vdot(g, mg)), g, mg

    theta, g, mg = theta_and_pieces(x)
    step = 1.0
    status = "saddle search failed"
    it = 0
    d = None
    gt_prev = m_gt_prev = None
    for it in range(1, params.saddle_max_iter + 1):
        sup = float(np.max(np.abs(g)))
        if sup <= params.tol:
            status = "converged"
            break
        v = mg
        v_sup = float(np.max(np.abs(v)))
        if v_sup == 0.0:
            status = "converged"
            break
        delta = np.sqrt(np.finfo(float).eps) * (1.0 + float(np.max(np.abs(x)))) / v_sup
        g_plus = np.asarray(grad_fn(x + delta * v))
        g_minus = np.asarray(grad_fn(x - delta * v))
        grad_theta = (g_plus - g_minus) / (2.0 * delta)
        m_gt = np.asarray(ident(grad_theta))
        beta = 0.0
        if d is not None and gt_prev is not None:
            denom = float(np.vdot(gt_prev, m_gt_prev))
            if denom > 0.0:
                beta = max(
                    0.0, float(np.vdot(grad_theta, m_gt - m_gt_prev)) / denom
                )
        d = -m_gt + beta * d if (d is not None and beta > 0.0) else -m_gt
        slope = float(np.vdot(grad_theta, d))
        if slope >= 0.0:
            d = -m_gt
            slope = float(np.vdot(grad_theta, d))
        if slope >= 0.0:
            d = -grad_theta
            slope = -float(np.vdot(grad_theta, grad_theta))
        gt_prev, m_gt_prev = grad_theta, m_gt
        alpha = min(2.0 * step, _STEP_MAX)
        accepted = False
        for _ in range(_LS_MAX_TRIALS):
            xt = x + alpha * d
            theta_t, g_t, mg_t = theta_and_pieces(xt)
            if np.isfinite(theta_t) and theta_t <= theta + decrease * alpha * slope:
                accepted = True
                break
            if np.isfinite(theta_t):
                curv = (theta_t - theta - slope * alpha) / (alpha * alpha)
            else:
                curv = 0.0
            if curv > 0.0:
                vertex = -slope / (2.0 * curv)
                alpha = min(max(vertex, 0.05 * alpha), 0.95 * alpha)
            else:
                alpha *= params.ls_contraction
        if not accepted:
            break
        x, theta, g, mg = xt, theta_t, g_t, mg_t
        step = alpha
    sup = float(np.max(np.abs(g)))
    if sup <= params.tol:
        status = "converged"
    return MinimizeResult(
        values=x,
        energy=float(value_fn(x)),
        residual_sup=sup,
        iterations=it,
        status=status,
    )


@dataclass
class SaddleResult:
    status: str  # "converged", "collapse to endpoint", "saddle search failed"
    values: np.ndarray | None
    energy: float
    residual_sup: float
    path_max_energy: float
    dist_to_a: float
    dist_to_b: float
    iterations: int


def _ray_ridge(problem: TruncatedProblem, base: np.ndarray) -> tuple[float, float]:
    """Locate the energy maximum along ``t * base`` for t in (0, 1].

    The barrier between zero and a deep minimizer typically sits at a tiny
    fraction of the segment, so the scan is log-spaced in t.  Returns
    ``(t_star, energy)``.
    """
    ts = np.concatenate([np.geomspace(1e-5, 1.0, 220), np.linspace(0.05, 1.0, 40)])
    ts = np.unique(ts)
    energies = np.array([problem.energy(t * base) for t in ts])
    k = int(np.argmax(energies))
    return float(ts[k]), float(energies[k])


def mountain_pass(
    problem: TruncatedProblem,
    u_a: ScalarField,
    u_b: ScalarField,
    params: SolverParams,
) -> SaddleResult:
    """Search for a third critical point between two known ones.

    Seeding is staged.  First the ridge along the straight ray from ``u_a``
    toward ``u_b`` is located by a log-spaced scan, and squared-residual
    refinement starts there.  If that collapses onto an endpoint, a string
    concentrated around the ridge is relaxed without reparametrization and
    its maximum node reseeds the refinement.  The last resort is a uniform
    string over the whole segment.  A candidate counts only if it is
    L2-separated from both endpoints by the distinctness threshold.
    """
    grid = problem.grid
    threshold = params.distinctness * np.sqrt(grid.volume)
    direction = u_b.values - u_a.values

    t_star, ridge_energy = _ray_ridge(problem, direction)
    base_a = u_a.values

    def seed_ray() -> tuple[np.ndarray, float]:
        return base_a + t_star * direction, ridge_energy

    def seed_concentrated() -> tuple[np.ndarray, float]:
        lo = base_a + (t_star / 5.0) * direction
        hi = base_a + min(5.0 * t_star, 1.0) * direction
        path, energies = relax_string(
            problem.energy,
            problem.gradient,
            (lo, hi),
            params,
            precond_fn=problem.precondition,
            reparametrize=False,
        )
        k = int(np.argmax(energies))
        k = min(max(k, 1), len(energies) - 2)
        return path[k], float(np.max(energies))

    def seed_uniform() -> tuple[np.ndarray, float]:
        path, energies = relax_string(
            problem.energy,
            problem.gradient,
            (u_a.values, u_b.values),
            params,
            precond_fn=problem.precondition,
        )
        k = int(np.argmax(energies))
        k = min(max(k, 1), len(energies) - 2)
        return path[k], float(np.max(energies))

    best: SaddleResult | None = None
    below_pass: SaddleResult | None = None
    for seeder in (seed_ray, seed_concentrated, seed_uniform):
        start, barrier = seeder()
        refined = refine_saddle(
            problem.energy,
            problem.gradient,
            start,
            params,
            precond_fn=problem.precondition,
        )
        cand = ScalarField(refined.values, grid)
        d_a = l2_distance(cand, u_a)
        d_b = l2_distance(cand, u_b)
        if refined.status != "converged":
            status = "saddle search failed"
        elif d_a < threshold or d_b < threshold:
            status = "collapse to endpoint"
        else:
            status = "converged"
        result = SaddleResult(
            status=status,
            values=refined.values if status == "converged" else None,
            energy=refined.energy,
            residual_sup=refined.residual_sup,
            path_max_energy=barrier,
            dist_to_a=d_a,
            dist_to_b=d_b,
            iterations=refined.iterations,
        )
        if status == "converged":
            # The pass point sits at a positive level between the ring
            # barrier and the path maximum; a converged candidate below zero
            # is some other critical point, kept only as a last resort.
            if result.energy > 0.0:
                return result
            if below_pass is None or result.energy > below_pass.energy:
                below_pass = result
            continue
        if best is None or (
            best.status == "saddle search failed"
            and status == "collapse to endpoint"
        ):
            best = result
    if below_pass is not None:
        return below_pass
    return best


@dataclass
class SolutionTriple:
    """Outcome of one full three-solution search at fixed couplings."""

    solutions: tuple[ScalarField | None, ScalarField | None, ScalarField | None]
    reports: tuple[EnergyReport | None, EnergyReport | None, EnergyReport | None]
    found_count: int
    distances: dict[str, float]
    sup_norms: tuple[float, ...]
    sobolev_norms: tuple[float, ...]
    gamma_hat: float
    statuses: dict[str, str]
    minimizer: MinimizeResult | None
    saddle: SaddleResult | None
    local_min: LocalMinReport | None


def solve_truncated_problem(
    problem: TruncatedProblem,
    params: SolverParams,
    witness: ScalarField | None = None,
    lambda_min: float | None = None,
    extra_starts: tuple[ScalarField, ...] = (),
    check_local_min: bool = True,
) -> SolutionTriple:
    """Zero solution, global minimizer, and mountain-pass point, with bookkeeping.

    ``found_count`` counts the distinct critical points actually produced
    (zero always counts).  Distances are discrete L2; the distinctness
    threshold scales with the square root of the domain volume.
    """
    grid = problem.grid
    threshold = params.distinctness * np.sqrt(grid.volume)
    u0 = ScalarField.zeros(grid)
    statuses = {"u0": "converged"}
    local_report = None
    if check_local_min:
        local_report = verify_local_min_at_zero(problem, seed=params.seed)

    best, _runs = find_global_minimizer(
        problem, params, witness=witness, lambda_min=lambda_min,
        extra_starts=extra_starts,
    )
    u1: ScalarField | None = ScalarField(best.values, grid)
    statuses["u1"] = best.status
    d01 = l2_distance(u0, u1)
    if not best.converged or best.energy >= 0.0 or d01 < threshold:
        u1 = None
        statuses["u1"] = statuses["u1"] if statuses["u1"] != "converged" else (
            "indistinct from zero" if d01 < threshold else "nonnegative energy"
        )

    saddle = None
    u2: ScalarField | None = None
    if u1 is not None:
        saddle = mountain_pass(problem, u0, u1, params)
        statuses["u2"] = saddle.status
        if saddle.status == "converged":
            u2 = ScalarField(saddle.values, grid)
    else:
        statuses["u2"] = "skipped: no global minimizer"

    solutions = (u0, u1, u2)
    reports = tuple(
        problem.energy_report(s) if s is not None else None for s in solutions
    )
    distances = {}
    names = ("u0", "u1", "u2")
    for i in range(3):
        for j in range(i + 1, 3):
            if solutions[i] is not None and solutions[j] is not None:
                distances[f"{names[i]}-{names[j]}"] = l2_distance(
                    solutions[i], solutions[j]
                )
    sup_norms = tuple(s.sup_norm if s is not None else float("nan") for s in solutions)
    sob = tuple(
        sobolev_norm(s, problem.exps) if s is not None else float("nan")
        for s in solutions
    )
    found = sum(1 for s in solutions if s is not None)
    gamma_hat = max((v for v in sob if np.isfinite(v)), default=0.0)
    return SolutionTriple(
        solutions=solutions,
        reports=reports,
        found_count=found,
        distances=distances,
        sup_norms=sup_norms,
        sobolev_norms=sob,
        gamma_hat=gamma_hat,
        statuses=statuses,
        minimizer=best,
        saddle=saddle,
        local_min=local_report,
    )
