"""End-to-end orchestration: validate, solve, price the perturbation, certify.

The solve pipeline runs in two phases.  An unperturbed phase locates the
three critical points and supplies the level-set tail data that prices the
admissible perturbation budget; a perturbed phase re-solves with that budget
switched on, warm-started from the unperturbed solutions, and every solution
is then certified against the truncation height on a covering lattice.  If
certification fails at the selected height the pipeline advances along the
height grid and repeats.

All artifacts (JSON report, field CSVs, descent trace, level-set decay
tables) are written without timestamps so a rerun with the same seed is
byte identical.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .config import RunConfig, build_exponents, build_grid, build_model
from .degiorgi import (
    GlobalCertificate,
    KSelection,
    certify_global,
    covering_centers,
    estimate_sobolev_constant,
    rising_levels,
    select_K_and_delta,
    shrinking_radii,
)
from .energy import RatioSupEstimate, TruncatedProblem, combined_growth_constant, source_ratio_sup
from .errors import CertificationError, ConfigError
from .exponents import ExponentField
from .grid import Grid, ScalarField, write_field_csv
from .multisolve import SolutionTriple, solve_truncated_problem
from .nonlinearity import (
    NonlinearityModel,
    TruncatedNonlinearity,
    check_hypotheses,
    hypothesis_gate,
)

__all__ = [
    "ValidationContext",
    "SolveOutcome",
    "SweepCell",
    "SweepOutcome",
    "run_validation",
    "resolve_coupling",
    "run_solve",
    "run_sweep",
    "write_solve_artifacts",
]

_SOLUTION_NAMES = ("u0", "u1", "u2")
_SOBOLEV_SAMPLES = 48


@dataclass
class ValidationContext:
    """Everything the solve and sweep phases share: validated inputs and bounds."""

    grid: Grid
    exps: ExponentField
    model: NonlinearityModel
    theta_hat: float
    lambda_min: float
    witness: ScalarField
    growth_constant: float
    sobolev_constant: float
    hypotheses: dict


def run_validation(cfg: RunConfig) -> ValidationContext:
    """Build and validate the discrete problem, then estimate its landscape bounds.

    Raises the specific error of whichever stage fails: grid or expression
    problems surface as :class:`ConfigError`, exponent inequality violations
    as :class:`ExponentValidationError`, structural conditions on the source
    term as :class:`HypothesisError`, and a missing positive source-to-principal
    ratio as :class:`LandscapeError`.
    """
    grid = build_grid(cfg)
    exps = build_exponents(cfg, grid)
    model = build_model(cfg, grid.dim)
    coords = grid.coordinate_arrays() if model.x_dependent else None
    hyp = check_hypotheses(model, exps, coords)
    hypothesis_gate(hyp, cfg.nonlinearity.kind)
    growth_c = combined_growth_constant(model, exps, coords)
    ratio: RatioSupEstimate = source_ratio_sup(model, exps, grid)
    sob = estimate_sobolev_constant(exps, grid, _SOBOLEV_SAMPLES, cfg.seed)
    return ValidationContext(
        grid=grid,
        exps=exps,
        model=model,
        theta_hat=ratio.value,
        lambda_min=ratio.lambda_min,
        witness=ratio.witness,
        growth_constant=growth_c,
        sobolev_constant=sob,
        hypotheses={
            "sup_abs_f": hyp.sup_abs_f,
            "ratio_at_small": hyp.ratio_at_small,
            "ratio_at_large": hyp.ratio_at_large,
            "zero_at_origin": hyp.zero_at_origin,
        },
    )


def resolve_coupling(cfg: RunConfig, theta_hat: float, value: float | None = None) -> float:
    """Turn a config coupling value into an absolute one via the ratio estimate."""
    v = cfg.coupling.value if value is None else value
    if cfg.coupling.mode == "relative":
        return v / theta_hat
    return v


@dataclass
class SolveOutcome:
    """Result of the full two-phase solve plus certification."""

    ctx: ValidationContext
    lam: float
    mu: float
    selection: KSelection
    base: SolutionTriple
    final: SolutionTriple
    certificates: dict[str, GlobalCertificate]
    all_certified: bool
    attempts: int


def _nonzero_solutions(triple: SolutionTriple) -> list[ScalarField]:
    return [
        s for s in triple.solutions if s is not None and float(s.sup_norm) > 0.0
    ]


def run_solve(cfg: RunConfig, require_admissible: bool = True) -> SolveOutcome:
    """Run validation, both solve phases, budget selection, and certification.

    ``require_admissible`` enforces that the coupling clears the landscape
    threshold; sweeps switch it off so sub-threshold cells report a single
    solution instead of erroring.
    """
    ctx = run_validation(cfg)
    lam = resolve_coupling(cfg, ctx.theta_hat)
    if require_admissible and lam <= ctx.lambda_min:
        raise ConfigError(
            f"coupling {lam:.6g} does not clear the admissible threshold "
            f"{ctx.lambda_min:.6g}; raise coupling.value"
        )
    return _solve_at(cfg, ctx, lam)


def _solve_at(cfg: RunConfig, ctx: ValidationContext, lam: float,
              mu_fraction: float | None = None) -> SolveOutcome:
    grid, exps, model = ctx.grid, ctx.exps, ctx.model
    params = cfg.solver
    cert_cfg = cfg.certification

    tn0 = TruncatedNonlinearity(cfg.K_grid[0], exps)
    base_problem = TruncatedProblem(exps, model, tn0, lam, 0.0, grid, params.eps_reg)
    base = solve_truncated_problem(
        base_problem, params, witness=ctx.witness, lambda_min=ctx.lambda_min
    )
    family = _nonzero_solutions(base)
    centers = covering_centers(grid, cert_cfg.R)

    attempts = 0
    start = 0
    k_grid = list(cfg.K_grid)
    while start < len(k_grid):
        attempts += 1
        sel = select_K_and_delta(
            family if family else [ScalarField.zeros(grid)],
            exps, lam, cert_cfg.R, ctx.growth_constant, ctx.sobolev_constant,
            k_grid[start:], cfg.perturbation.cap,
            centers=centers, tail_floor=cert_cfg.tail_floor,
        )
        if mu_fraction is not None:
            mu = mu_fraction * sel.delta
        elif cfg.perturbation.mode == "auto":
            mu = sel.delta
        else:
            mu = cfg.perturbation.value

        if mu > 0.0 and family:
            guard = cfg.guard_factor * max(float(s.sup_norm) for s in family) + 10.0
            tn = TruncatedNonlinearity(sel.K, exps)
            problem = TruncatedProblem(exps, model, tn, lam, mu, grid, params.eps_reg)
            final = solve_truncated_problem(
                problem,
                replace(params, amplitude_guard=guard),
                witness=ctx.witness,
                lambda_min=ctx.lambda_min,
                extra_starts=tuple(family),
            )
        else:
            final = base

        certificates: dict[str, GlobalCertificate] = {}
        all_ok = True
        for name, sol in zip(_SOLUTION_NAMES, final.solutions):
            if sol is None:
                continue
            cert = certify_global(
                sol, exps, lam, mu, sel.K, cert_cfg.R,
                ctx.growth_constant, ctx.sobolev_constant,
                cert_cfg.i_max, cert_cfg.floor,
            )
            certificates[name] = cert
            all_ok = all_ok and cert.certified
        if all_ok:
            return SolveOutcome(
                ctx=ctx, lam=lam, mu=mu, selection=sel, base=base, final=final,
                certificates=certificates, all_certified=True, attempts=attempts,
            )
        start = k_grid.index(sel.K) + 1

    raise CertificationError(
        "certification failed at every truncation height in the K grid; "
        "refine the grid or extend the height range"
    )


# ---------------------------------------------------------------------------
# report assembly


def _triple_summary(triple: SolutionTriple) -> dict:
    reports = {}
    for name, rep in zip(_SOLUTION_NAMES, triple.reports):
        if rep is None:
            reports[name] = None
        else:
            reports[name] = {
                "energy": rep.total,
                "principal": rep.principal,
                "source": rep.source,
                "truncation": rep.truncation,
                "residual_sup": rep.residual_sup,
            }
    out = {
        "found_count": triple.found_count,
        "statuses": dict(triple.statuses),
        "distances": {k: float(v) for k, v in triple.distances.items()},
        "sup_norms": [float(v) for v in triple.sup_norms],
        "sobolev_norms": [float(v) for v in triple.sobolev_norms],
        "gamma_hat": float(triple.gamma_hat),
        "energies": reports,
    }
    if triple.local_min is not None:
        lm = triple.local_min
        out["local_min"] = {
            "radii": [float(r) for r in lm.radii],
            "min_energy": [float(v) for v in lm.min_energy],
            "max_ratio": [float(v) for v in lm.max_ratio],
            "ratio_decreasing": bool(lm.ratio_decreasing),
            "passed": bool(lm.passed),
        }
    return out


def _certificate_summary(cert: GlobalCertificate) -> dict:
    return {
        "certified": bool(cert.certified),
        "all_centers_certified": bool(cert.all_centers_certified),
        "boundary_shell_ok": bool(cert.boundary_shell_ok),
        "K": float(cert.K),
        "center_count": len(cert.centers),
        "uncovered_count": int(cert.uncovered_count),
        "shell_sup": float(cert.shell_sup),
        "centers": [
            {
                "center": [float(c) for c in rep.center],
                "certified_bound": bool(rep.certified_bound),
                "threshold_met": bool(rep.threshold_met),
                "empirical_decay": bool(rep.empirical_decay),
                "direct_sup": float(rep.direct_sup),
                "a_first": float(rep.a_sequence[0]),
                "a_last": float(rep.a_sequence[-1]),
                "a_neg_first": float(rep.a_sequence_negative[0]),
                "a_neg_last": float(rep.a_sequence_negative[-1]),
            }
            for rep in cert.reports
        ],
    }


def solve_report(outcome: SolveOutcome, cfg: RunConfig) -> dict:
    sel = outcome.selection
    return {
        "validation": {
            "theta_hat": outcome.ctx.theta_hat,
            "lambda_min": outcome.ctx.lambda_min,
            "growth_constant": outcome.ctx.growth_constant,
            "sobolev_constant": outcome.ctx.sobolev_constant,
            "p_minus": outcome.ctx.exps.p_minus,
            "p_plus": outcome.ctx.exps.p_plus,
            "q_minus": outcome.ctx.exps.q_minus,
            "q_plus": outcome.ctx.exps.q_plus,
            "pstar_minus": outcome.ctx.exps.pstar_minus,
            "hypotheses": outcome.ctx.hypotheses,
        },
        "coupling": outcome.lam,
        "perturbation": outcome.mu,
        "selection": {
            "K": sel.K,
            "delta1": sel.delta1,
            "delta": sel.delta,
            "bracket": sel.bracket,
            "a0_max": sel.a0_max,
            "a0_effective": sel.a0_effective,
            "scanned": [[float(k), float(b)] for k, b in sel.scanned],
        },
        "base_run": _triple_summary(outcome.base),
        "final_run": _triple_summary(outcome.final),
        "certification": {
            "all_certified": outcome.all_certified,
            "attempts": outcome.attempts,
            "R": cfg.certification.R,
            "solutions": {
                name: _certificate_summary(cert)
                for name, cert in outcome.certificates.items()
            },
        },
        "seed": cfg.seed,
    }


def write_solve_artifacts(outcome: SolveOutcome, cfg: RunConfig,
                          out_dir: str | Path) -> list[str]:
    """Write the JSON report plus field, trace, and decay CSVs; return paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    report = solve_report(outcome, cfg)
    report_path = out / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    written.append(str(report_path))

    for name, sol in zip(_SOLUTION_NAMES, outcome.final.solutions):
        if sol is None:
            continue
        path = out / f"{name}.csv"
        write_field_csv(sol, path)
        written.append(str(path))
    for name, sol in zip(_SOLUTION_NAMES, outcome.base.solutions):
        if sol is None or name == "u0":
            continue
        path = out / f"base_{name}.csv"
        write_field_csv(sol, path)
        written.append(str(path))

    if outcome.final.minimizer is not None:
        path = out / "trace_u1.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "energy", "residual_sup"])
            for it, en, res in outcome.final.minimizer.trace:
                w.writerow([it, f"{en:.17g}", f"{res:.17g}"])
        written.append(str(path))

    for name, cert in outcome.certificates.items():
        if not cert.reports:
            continue
        rep = cert.reports[0]
        path = out / f"levels_{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "radius", "level", "a_pos", "a_neg", "modeled"])
            n = len(rep.a_sequence)
            radii = shrinking_radii(rep.R, n - 1)
            levels = rising_levels(rep.K, n - 1)
            for i in range(n):
                w.writerow([
                    i,
                    f"{radii[i]:.17g}",
                    f"{levels[i]:.17g}",
                    f"{rep.a_sequence[i]:.17g}",
                    f"{rep.a_sequence_negative[i]:.17g}",
                    f"{rep.modeled_sequence[i]:.17g}",
                ])
        written.append(str(path))
    return written


# ---------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class SweepCell:
    """One (coupling, perturbation fraction) cell of a sweep."""

    row: int
    col: int
    coupling_value: float
    lam: float
    mu_fraction: float
    mu: float
    below_threshold: bool
    found_count: int
    K: float
    certified: bool
    energy_min: float
    gamma_hat: float
    status_u1: str
    status_u2: str


@dataclass
class SweepOutcome:
    cells: list[SweepCell]
    csv_path: str | None
    theta_hat: float


def _run_cell(args: tuple[RunConfig, int, int]) -> SweepCell:
    cfg, i, j = args
    ncols = len(cfg.sweep.perturbation_fractions)
    cell_seed = cfg.seed + 7919 * (i * ncols + j + 1)
    cfg = replace(cfg, solver=replace(cfg.solver, seed=cell_seed))
    value = cfg.sweep.coupling_values[i]
    fraction = cfg.sweep.perturbation_fractions[j]

    ctx = run_validation(cfg)
    lam = resolve_coupling(cfg, ctx.theta_hat, value)
    below = lam <= ctx.lambda_min
    outcome = _solve_at(cfg, ctx, lam, mu_fraction=fraction)
    rep1 = outcome.final.reports[1]
    return SweepCell(
        row=i,
        col=j,
        coupling_value=float(value),
        lam=float(lam),
        mu_fraction=float(fraction),
        mu=float(outcome.mu),
        below_threshold=bool(below),
        found_count=int(outcome.final.found_count),
        K=float(outcome.selection.K),
        certified=bool(outcome.all_certified),
        energy_min=float(rep1.total) if rep1 is not None else float("nan"),
        gamma_hat=float(outcome.final.gamma_hat),
        status_u1=outcome.final.statuses.get("u1", ""),
        status_u2=outcome.final.statuses.get("u2", ""),
    )


def run_sweep(cfg: RunConfig, out_dir: str | Path | None = None) -> SweepOutcome:
    """Run every (coupling, fraction) cell, optionally in worker processes.

    Cells are independent; each derives its own solver seed from the base
    seed and its position, so the output is deterministic regardless of the
    worker count.  Sub-threshold couplings are legal here and come back as
    flagged single-solution cells.
    """
    tasks = [
        (cfg, i, j)
        for i in range(len(cfg.sweep.coupling_values))
        for j in range(len(cfg.sweep.perturbation_fractions))
    ]
    if cfg.sweep.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.sweep.workers) as pool:
            cells = list(pool.map(_run_cell, tasks))
    else:
        cells = [_run_cell(t) for t in tasks]

    theta = float("nan")
    if cells and cfg.coupling.mode == "relative" and cells[0].lam != 0.0:
        theta = cells[0].coupling_value / cells[0].lam
    csv_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = str(out / "sweep.csv")
        _write_sweep_csv(cells, csv_path)
    return SweepOutcome(cells=cells, csv_path=csv_path, theta_hat=theta)


_SWEEP_COLUMNS = [
    "row", "col", "coupling_value", "lam", "mu_fraction", "mu",
    "below_threshold", "found_count", "K", "certified", "energy_min",
    "gamma_hat", "status_u1", "status_u2",
]


def _write_sweep_csv(cells: list[SweepCell], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_SWEEP_COLUMNS)
        for c in cells:
            w.writerow([
                c.row, c.col,
                f"{c.coupling_value:.17g}", f"{c.lam:.17g}",
                f"{c.mu_fraction:.17g}", f"{c.mu:.17g}",
                int(c.below_threshold), c.found_count,
                f"{c.K:.17g}", int(c.certified),
                f"{c.energy_min:.17g}", f"{c.gamma_hat:.17g}",
                c.status_u1, c.status_u2,
            ])
