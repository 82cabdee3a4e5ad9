"""Shared fixtures: one small discretization reused across module tests."""
from __future__ import annotations

import numpy as np
import pytest

from pxlap import (
    SolverParams,
    TruncatedNonlinearity,
    TruncatedProblem,
    make_grid,
    saturating_cubic,
    solve_truncated_problem,
    source_ratio_sup,
    validate_exponents,
)


@pytest.fixture(scope="session")
def unit_grid_2d():
    return make_grid([[0.0, 1.0], [0.0, 1.0]], 16)


@pytest.fixture(scope="session")
def ramp_exponents(unit_grid_2d):
    """p = 1.5 + 0.3 x1 against a flat q = 20 on the session grid."""
    g = unit_grid_2d
    x1 = g.coordinate_arrays()[0]
    p = np.broadcast_to(1.5 + 0.3 * x1, g.shape)
    q = np.full(g.shape, 20.0)
    return validate_exponents(p, q, g.dim)


@pytest.fixture(scope="session")
def cubic_model():
    return saturating_cubic(2.8)


@pytest.fixture(scope="session")
def small_problem(unit_grid_2d, ramp_exponents, cubic_model):
    tn = TruncatedNonlinearity(4.0, ramp_exponents)
    return TruncatedProblem(
        ramp_exponents, cubic_model, tn, 60.0, 0.0, unit_grid_2d
    )


@pytest.fixture(scope="session")
def solved():
    """One full three-solution search on a coarse mesh, shared by the checks."""
    g = make_grid([[0.0, 1.0], [0.0, 1.0]], 12)
    x1 = g.coordinate_arrays()[0]
    exps = validate_exponents(1.5 + 0.3 * x1, np.full(g.shape, 20.0), 2)
    model = saturating_cubic(2.8)
    est = source_ratio_sup(model, exps, g)
    lam = 2.0 * est.lambda_min
    tn = TruncatedNonlinearity(4.0, exps)
    problem = TruncatedProblem(exps, model, tn, lam, 0.0, g)
    params = SolverParams(multistart=6, path_nodes=15, string_sweeps=25)
    triple = solve_truncated_problem(
        problem, params, witness=est.witness, lambda_min=est.lambda_min
    )
    return problem, params, est, triple


@pytest.fixture()
def rng():
    return np.random.default_rng(607)
