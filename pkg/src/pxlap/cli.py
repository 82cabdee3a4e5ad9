"""Command line front end.

Five working subcommands (validate, solve, sweep, recursion, certify) plus
``defaults`` to print the reference configuration.  Every failure class maps
to its own exit code so scripted callers can branch without parsing text:

    0  success
    2  configuration or usage problem
    3  exponent field rejected
    4  structural hypotheses on the source term rejected
    5  landscape problem (no positive ratio, no negative-energy minimizer)
    6  numerics (norm bisection, containment, field mismatch, saddle search)
    7  certification failed
    8  certifier inconsistency (claimed bound contradicted by a nodal max)
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import DEFAULT_CONFIG_YAML, RunConfig, default_config, load_config
from .degiorgi import certify_global, recursion_oracle, select_K_and_delta
from .errors import (
    BallContainmentError,
    CertificationError,
    CertifierInconsistencyError,
    ConfigError,
    ExponentValidationError,
    FieldMismatchError,
    HypothesisError,
    LandscapeError,
    NormBisectionError,
    PxlapError,
    SaddleSearchError,
)
from .grid import read_field_csv
from .pipeline import (
    resolve_coupling,
    run_solve,
    run_sweep,
    run_validation,
    solve_report,
    write_solve_artifacts,
)

_EXIT_CODES: list[tuple[type, int]] = [
    (ConfigError, 2),
    (ExponentValidationError, 3),
    (HypothesisError, 4),
    (LandscapeError, 5),
    (SaddleSearchError, 6),
    (NormBisectionError, 6),
    (BallContainmentError, 6),
    (FieldMismatchError, 6),
    (CertifierInconsistencyError, 8),
    (CertificationError, 7),
]


def _exit_code(exc: PxlapError) -> int:
    for klass, code in _EXIT_CODES:
        if isinstance(exc, klass):
            return code
    return 1


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_config()
    if getattr(args, "nodes", None):
        nodes = tuple(args.nodes for _ in cfg.grid.nodes)
        cfg = replace(cfg, grid=replace(cfg.grid, nodes=nodes))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed, solver=replace(cfg.solver, seed=args.seed))
    if getattr(args, "coupling", None) is not None:
        cfg = replace(cfg, coupling=replace(cfg.coupling, value=args.coupling))
    if getattr(args, "perturbation", None) is not None:
        cfg = replace(
            cfg,
            perturbation=replace(
                cfg.perturbation, mode="absolute", value=args.perturbation
            ),
        )
    if getattr(args, "workers", None) is not None:
        cfg = replace(cfg, sweep=replace(cfg.sweep, workers=args.workers))
    if getattr(args, "out", None):
        cfg = replace(cfg, output_dir=args.out)
    return cfg


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    ctx = run_validation(cfg)
    lam = resolve_coupling(cfg, ctx.theta_hat)
    summary = {
        "p_minus": ctx.exps.p_minus,
        "p_plus": ctx.exps.p_plus,
        "q_minus": ctx.exps.q_minus,
        "q_plus": ctx.exps.q_plus,
        "pstar_minus": ctx.exps.pstar_minus,
        "theta_hat": ctx.theta_hat,
        "lambda_min": ctx.lambda_min,
        "coupling": lam,
        "coupling_admissible": lam > ctx.lambda_min,
        "growth_constant": ctx.growth_constant,
        "sobolev_constant": ctx.sobolev_constant,
        "hypotheses": ctx.hypotheses,
    }
    if args.json:
        print(json.dumps(summary, indent=2, sort_keys=True))
    else:
        print(f"exponents ok: p in [{ctx.exps.p_minus:g}, {ctx.exps.p_plus:g}], "
              f"q in [{ctx.exps.q_minus:g}, {ctx.exps.q_plus:g}], "
              f"critical bound {ctx.exps.pstar_minus:g}")
        print(f"ratio sup estimate {ctx.theta_hat:.6g} "
              f"-> admissible couplings above {ctx.lambda_min:.6g}")
        print(f"resolved coupling {lam:.6g} "
              f"({'admissible' if lam > ctx.lambda_min else 'NOT admissible'})")
        print(f"growth constant {ctx.growth_constant:.6g}, "
              f"embedding constant {ctx.sobolev_constant:.6g}")
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = _load(args)
    outcome = run_solve(cfg)
    paths = write_solve_artifacts(outcome, cfg, cfg.output_dir)
    rep = solve_report(outcome, cfg)
    final = rep["final_run"]
    print(f"coupling {outcome.lam:.6g}  perturbation {outcome.mu:.6g}  "
          f"height {outcome.selection.K:g}")
    print(f"found {final['found_count']} solutions; statuses {final['statuses']}")
    for name, info in final["energies"].items():
        if info is None:
            continue
        print(f"  {name}: energy {info['energy']:.6f}  "
              f"residual {info['residual_sup']:.3e}")
    print(f"certified: {outcome.all_certified} "
          f"(attempt {outcome.attempts} of the height grid)")
    print(f"artifacts in {cfg.output_dir}: "
          + ", ".join(Path(p).name for p in paths))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load(args)
    outcome = run_sweep(cfg, cfg.output_dir)
    print(f"{len(outcome.cells)} cells "
          f"({len(cfg.sweep.coupling_values)} couplings x "
          f"{len(cfg.sweep.perturbation_fractions)} fractions)")
    for c in outcome.cells:
        flag = "  below-threshold" if c.below_threshold else ""
        print(f"  coupling {c.lam:.5g} fraction {c.mu_fraction:g}: "
              f"found {c.found_count}, certified {c.certified}{flag}")
    if outcome.csv_path:
        print(f"table written to {outcome.csv_path}")
    return 0


def cmd_recursion(args: argparse.Namespace) -> int:
    res = recursion_oracle(args.c, args.b, args.eta, args.a0, n=args.steps,
                           floor=args.floor)
    print("i,value")
    for i, v in enumerate(res.values):
        print(f"{i},{v:.17g}")
    verdict = "converged" if res.converged else (
        "diverged" if res.diverged else "undecided")
    print(f"verdict: {verdict} after {res.iterations} steps")
    return 0


def cmd_certify(args: argparse.Namespace) -> int:
    cfg = _load(args)
    ctx = run_validation(cfg)
    lam = resolve_coupling(cfg, ctx.theta_hat)
    mu = cfg.perturbation.value if cfg.perturbation.mode == "absolute" else 0.0
    u = read_field_csv(args.field, ctx.grid)
    cert_cfg = cfg.certification
    if args.height is not None:
        K = float(args.height)
    else:
        sel = select_K_and_delta(
            [u], ctx.exps, lam, cert_cfg.R, ctx.growth_constant,
            ctx.sobolev_constant, list(cfg.K_grid), cfg.perturbation.cap,
            tail_floor=cert_cfg.tail_floor,
        )
        K = sel.K
    cert = certify_global(
        u, ctx.exps, lam, mu, K, cert_cfg.R,
        ctx.growth_constant, ctx.sobolev_constant,
        cert_cfg.i_max, cert_cfg.floor,
    )
    print(f"height {K:g}: certified {cert.certified} "
          f"({len(cert.centers)} centers, "
          f"{cert.uncovered_count} shell nodes, shell sup {cert.shell_sup:.6g})")
    if not cert.certified:
        bad = [r for r in cert.reports if not r.certified_bound]
        for r in bad[:5]:
            print(f"  center {tuple(round(c, 4) for c in r.center)}: "
                  f"threshold_met {r.threshold_met}, decay {r.empirical_decay}, "
                  f"direct sup {r.direct_sup:.6g}")
        return 7
    return 0


def cmd_defaults(args: argparse.Namespace) -> int:
    print(DEFAULT_CONFIG_YAML, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pxlap",
        description="Three-solution solver and sup-bound certifier for "
                    "variable-exponent quasilinear problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("-c", "--config", help="YAML configuration file")
        p.add_argument("--nodes", type=int, help="override nodes per axis")
        p.add_argument("--seed", type=int, help="override the base seed")

    p_val = sub.add_parser("validate", help="check exponents, hypotheses, "
                                            "and the coupling threshold")
    add_common(p_val)
    p_val.add_argument("--coupling", type=float, help="override coupling.value")
    p_val.add_argument("--json", action="store_true", help="machine output")
    p_val.set_defaults(fn=cmd_validate)

    p_solve = sub.add_parser("solve", help="run the two-phase solve and certify")
    add_common(p_solve)
    p_solve.add_argument("--coupling", type=float, help="override coupling.value")
    p_solve.add_argument("--perturbation", type=float,
                         help="fix the perturbation instead of auto pricing")
    p_solve.add_argument("--out", help="artifact directory")
    p_solve.set_defaults(fn=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="grid of (coupling, fraction) cells")
    add_common(p_sweep)
    p_sweep.add_argument("--workers", type=int, help="worker processes")
    p_sweep.add_argument("--out", help="artifact directory")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_rec = sub.add_parser("recursion", help="run the decay recursion oracle")
    p_rec.add_argument("c", type=float)
    p_rec.add_argument("b", type=float)
    p_rec.add_argument("eta", type=float)
    p_rec.add_argument("a0", type=float)
    p_rec.add_argument("--steps", type=int, default=None)
    p_rec.add_argument("--floor", type=float, default=1e-14)
    p_rec.set_defaults(fn=cmd_recursion)

    p_cert = sub.add_parser("certify", help="certify a stored field CSV")
    add_common(p_cert)
    p_cert.add_argument("--field", required=True, help="field CSV to certify")
    p_cert.add_argument("--height", type=float,
                        help="truncation height; default picks from the grid")
    p_cert.add_argument("--coupling", type=float, help="override coupling.value")
    p_cert.add_argument("--perturbation", type=float,
                        help="perturbation used in the certificate constants")
    p_cert.set_defaults(fn=cmd_certify)

    p_def = sub.add_parser("defaults", help="print the reference configuration")
    p_def.set_defaults(fn=cmd_defaults)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PxlapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
