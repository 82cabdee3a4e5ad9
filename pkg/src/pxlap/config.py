"""Structured run configuration: YAML in, validated dataclasses out.

One config file drives validation, solving, certification, and sweeps.  The
`defaults` subcommand prints the reference template below, which doubles as
the documentation of every key.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Real
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .expressions import compile_expression
from .exponents import ExponentField, validate_exponents
from .grid import Grid, make_grid
from .multisolve import SolverParams
from .nonlinearity import (
    NonlinearityModel,
    model_from_expression,
    pure_power_model,
    saturating_cubic,
    zero_model,
)

__all__ = [
    "RunConfig",
    "load_config",
    "config_from_dict",
    "default_config",
    "DEFAULT_CONFIG_YAML",
    "build_grid",
    "build_exponents",
    "build_model",
]

DEFAULT_CONFIG_YAML = """\
# Reference configuration; every key below shows its default.
grid:
  extents: [[0.0, 1.0], [0.0, 1.0]]   # box per axis
  nodes: [48, 48]                     # nodes per axis (min 8)

exponents:
  p: "1.5 + 0.3*x1"   # expression in x1..xN, or a number
  q: "20.0"
  margin: 1.0e-12     # strictness margin for the exponent inequalities

nonlinearity:
  kind: saturating_cubic   # one of: saturating_cubic, zero, pure_power, expression
  saturation: 2.8          # saturating_cubic: s^3 / (1 + |s|^saturation)
  power: 3.0               # pure_power only
  expression: ""           # expression kind: uses s and optionally x1..xN

coupling:
  mode: relative    # relative: lambda = value / theta_hat; absolute: lambda = value
  value: 2.0

perturbation:
  mode: auto        # auto: mu = min(delta1, cap); absolute: mu = value
  value: 0.0
  cap: 1.0e-3

truncation:
  K_grid: [2, 4, 8, 16, 32, 64, 128, 256]

solver:
  tol: 1.0e-8
  max_iter: 4000
  multistart: 16
  path_nodes: 21
  distinctness: 1.0e-3
  eps_reg: 1.0e-8
  guard_factor: 4.0   # amplitude guard for perturbed runs, times the base sup

certification:
  R: 0.25
  i_max: 40
  floor: 1.0e-14
  tail_floor: 1.0e-20
  tol_disc: 0.05

sweep:
  coupling_values: [1.5, 2.0, 2.5]   # interpreted per coupling.mode
  perturbation_fractions: [0.0, 0.5, 1.0]   # fractions of the selected budget
  workers: 1

output:
  directory: runs/latest

seed: 20260823
"""


@dataclass(frozen=True)
class GridConfig:
    extents: tuple[tuple[float, float], ...]
    nodes: tuple[int, ...]


@dataclass(frozen=True)
class ExponentConfig:
    p: str
    q: str
    margin: float


@dataclass(frozen=True)
class NonlinearityConfig:
    kind: str
    saturation: float
    power: float
    expression: str


@dataclass(frozen=True)
class CouplingConfig:
    mode: str  # "relative" or "absolute"
    value: float


@dataclass(frozen=True)
class PerturbationConfig:
    mode: str  # "auto" or "absolute"
    value: float
    cap: float


@dataclass(frozen=True)
class CertificationConfig:
    R: float
    i_max: int
    floor: float
    tail_floor: float
    tol_disc: float


@dataclass(frozen=True)
class SweepConfig:
    coupling_values: tuple[float, ...]
    perturbation_fractions: tuple[float, ...]
    workers: int


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig
    exponents: ExponentConfig
    nonlinearity: NonlinearityConfig
    coupling: CouplingConfig
    perturbation: PerturbationConfig
    K_grid: tuple[float, ...]
    solver: SolverParams
    certification: CertificationConfig
    sweep: SweepConfig
    output_dir: str
    seed: int
    guard_factor: float


def _section(data: dict, name: str) -> dict:
    sub = data.get(name, {})
    if sub is None:
        sub = {}
    if not isinstance(sub, dict):
        raise ConfigError(f"config section '{name}' must be a mapping")
    return sub


def _number(value, name: str) -> float:
    if not isinstance(value, Real) or isinstance(value, bool):
        raise ConfigError(f"config key '{name}' must be a number, got {value!r}")
    return float(value)


def _expr_text(value, name: str) -> str:
    if isinstance(value, Real) and not isinstance(value, bool):
        return repr(float(value))
    if isinstance(value, str) and value.strip():
        return value
    raise ConfigError(f"config key '{name}' must be an expression string or number")


_KNOWN_SECTIONS = {
    "grid", "exponents", "nonlinearity", "coupling", "perturbation",
    "truncation", "solver", "certification", "sweep", "output", "seed",
}


def config_from_dict(data: dict) -> RunConfig:
    """Assemble and sanity-check a RunConfig from parsed YAML."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(data) - _KNOWN_SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    g = _section(data, "grid")
    extents_raw = g.get("extents", [[0.0, 1.0], [0.0, 1.0]])
    try:
        extents = tuple((float(lo), float(hi)) for lo, hi in extents_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid.extents must be [[lo, hi], ...]: {exc}") from None
    nodes_raw = g.get("nodes", [48] * len(extents))
    if isinstance(nodes_raw, Real) and not isinstance(nodes_raw, bool):
        nodes_raw = [int(nodes_raw)] * len(extents)
    nodes = tuple(int(n) for n in nodes_raw)
    if len(nodes) != len(extents):
        raise ConfigError("grid.nodes and grid.extents must agree in length")
    grid_cfg = GridConfig(extents=extents, nodes=nodes)

    e = _section(data, "exponents")
    exp_cfg = ExponentConfig(
        p=_expr_text(e.get("p", "1.5 + 0.3*x1"), "exponents.p"),
        q=_expr_text(e.get("q", "20.0"), "exponents.q"),
        margin=_number(e.get("margin", 1e-12), "exponents.margin"),
    )

    nl = _section(data, "nonlinearity")
    kind = str(nl.get("kind", "saturating_cubic"))
    if kind not in ("saturating_cubic", "zero", "pure_power", "expression"):
        raise ConfigError(f"unknown nonlinearity.kind: {kind!r}")
    nl_cfg = NonlinearityConfig(
        kind=kind,
        saturation=_number(nl.get("saturation", 2.8), "nonlinearity.saturation"),
        power=_number(nl.get("power", 3.0), "nonlinearity.power"),
        expression=str(nl.get("expression", "")),
    )
    if kind == "expression" and not nl_cfg.expression.strip():
        raise ConfigError("nonlinearity.kind 'expression' needs a nonempty expression")

    cp = _section(data, "coupling")
    mode = str(cp.get("mode", "relative"))
    if mode not in ("relative", "absolute"):
        raise ConfigError(f"coupling.mode must be relative or absolute, got {mode!r}")
    coupling = CouplingConfig(mode=mode, value=_number(cp.get("value", 2.0), "coupling.value"))

    pt = _section(data, "perturbation")
    pmode = str(pt.get("mode", "auto"))
    if pmode not in ("auto", "absolute"):
        raise ConfigError(f"perturbation.mode must be auto or absolute, got {pmode!r}")
    perturbation = PerturbationConfig(
        mode=pmode,
        value=_number(pt.get("value", 0.0), "perturbation.value"),
        cap=_number(pt.get("cap", 1e-3), "perturbation.cap"),
    )

    tr = _section(data, "truncation")
    K_grid = tuple(float(k) for k in tr.get("K_grid", [2, 4, 8, 16, 32, 64, 128, 256]))

    sv = _section(data, "solver")
    guard_factor = _number(sv.get("guard_factor", 4.0), "solver.guard_factor")
    solver = SolverParams(
        tol=_number(sv.get("tol", 1e-8), "solver.tol"),
        max_iter=int(sv.get("max_iter", 4000)),
        multistart=int(sv.get("multistart", 16)),
        path_nodes=int(sv.get("path_nodes", 21)),
        distinctness=_number(sv.get("distinctness", 1e-3), "solver.distinctness"),
        eps_reg=_number(sv.get("eps_reg", 1e-8), "solver.eps_reg"),
        seed=int(data.get("seed", 20260823)),
    )

    ct = _section(data, "certification")
    cert = CertificationConfig(
        R=_number(ct.get("R", 0.25), "certification.R"),
        i_max=int(ct.get("i_max", 40)),
        floor=_number(ct.get("floor", 1e-14), "certification.floor"),
        tail_floor=_number(ct.get("tail_floor", 1e-20), "certification.tail_floor"),
        tol_disc=_number(ct.get("tol_disc", 0.05), "certification.tol_disc"),
    )

    sw = _section(data, "sweep")
    sweep = SweepConfig(
        coupling_values=tuple(
            float(v) for v in sw.get("coupling_values", [1.5, 2.0, 2.5])
        ),
        perturbation_fractions=tuple(
            float(v) for v in sw.get("perturbation_fractions", [0.0, 0.5, 1.0])
        ),
        workers=int(sw.get("workers", 1)),
    )

    out = _section(data, "output")
    output_dir = str(out.get("directory", "runs/latest"))

    return RunConfig(
        grid=grid_cfg,
        exponents=exp_cfg,
        nonlinearity=nl_cfg,
        coupling=coupling,
        perturbation=perturbation,
        K_grid=K_grid,
        solver=solver,
        certification=cert,
        sweep=sweep,
        output_dir=output_dir,
        seed=int(data.get("seed", 20260823)),
        guard_factor=guard_factor,
    )


def load_config(path: str | Path) -> RunConfig:
    """Parse a YAML config file into a RunConfig."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from None
    if data is None:
        data = {}
    return config_from_dict(data)


def default_config() -> RunConfig:
    return config_from_dict(yaml.safe_load(DEFAULT_CONFIG_YAML))


def build_grid(cfg: RunConfig) -> Grid:
    return make_grid(cfg.grid.extents, cfg.grid.nodes)


def build_exponents(cfg: RunConfig, grid: Grid) -> ExponentField:
    """Evaluate the p and q expressions on the grid and validate them."""
    names = [f"x{d + 1}" for d in range(grid.dim)]
    coords = dict(zip(names, grid.coordinate_arrays()))
    p_fn = compile_expression(cfg.exponents.p, names)
    q_fn = compile_expression(cfg.exponents.q, names)
    p_vals = np.broadcast_to(np.asarray(p_fn(**coords), dtype=float), grid.shape)
    q_vals = np.broadcast_to(np.asarray(q_fn(**coords), dtype=float), grid.shape)
    return validate_exponents(p_vals, q_vals, grid.dim, cfg.exponents.margin)


def build_model(cfg: RunConfig, dim: int) -> NonlinearityModel:
    nl = cfg.nonlinearity
    if nl.kind == "saturating_cubic":
        return saturating_cubic(nl.saturation)
    if nl.kind == "zero":
        return zero_model()
    if nl.kind == "pure_power":
        return pure_power_model(nl.power)
    return model_from_expression(nl.expression, dim)
