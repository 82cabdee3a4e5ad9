"""Variable-exponent quasilinear solver with certified sup bounds.

The package finds three critical points of a truncated variable-exponent
energy (the zero state, a negative-energy global minimizer, and a pass
point between them) and then certifies a node-wise bound on each solution
through an explicit level-set decay recursion, so the truncated solutions
are solutions of the untruncated problem.
"""
from .config import (
    DEFAULT_CONFIG_YAML,
    RunConfig,
    build_exponents,
    build_grid,
    build_model,
    config_from_dict,
    default_config,
    load_config,
)
from .degiorgi import (
    CaccioppoliReport,
    DeGiorgiConstants,
    DeGiorgiReport,
    GlobalCertificate,
    KSelection,
    RecursionResult,
    caccioppoli_check,
    caccioppoli_verdict,
    certify,
    certify_global,
    compute_constants,
    compute_sequence,
    covering_centers,
    estimate_sobolev_constant,
    recursion_oracle,
    rising_levels,
    select_K_and_delta,
    shrinking_radii,
)
from .energy import (
    EnergyReport,
    RatioSupEstimate,
    ResidualVector,
    TruncatedProblem,
    combined_growth_constant,
    default_bump_family,
    principal_energy,
    principal_gradient,
    residual,
    source_potential,
    source_ratio_sup,
    truncation_potential,
)
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
from .exponents import ExponentField, validate_exponents
from .grid import (
    Grid,
    LevelSetMeasure,
    ScalarField,
    gradient,
    integrate,
    l2_distance,
    level_set_measure,
    make_grid,
    read_field_csv,
    write_field_csv,
)
from .multisolve import (
    LocalMinReport,
    MinimizeResult,
    SaddleResult,
    SolutionTriple,
    SolverParams,
    build_starts,
    descend,
    find_global_minimizer,
    minimize_energy,
    mountain_pass,
    newton_polish,
    refine_saddle,
    relax_string,
    solve_truncated_problem,
    verify_local_min_at_zero,
)
from .nonlinearity import (
    GrowthCheckReport,
    HypothesisReport,
    NonlinearityModel,
    TruncatedNonlinearity,
    check_hypotheses,
    hypothesis_gate,
    model_from_expression,
    pure_power_model,
    saturating_cubic,
    truncation_growth_check,
    zero_model,
)
from .pipeline import (
    SolveOutcome,
    SweepCell,
    SweepOutcome,
    ValidationContext,
    run_solve,
    run_sweep,
    run_validation,
    write_solve_artifacts,
)
from .varspace import (
    ModularRelationsReport,
    check_modular_relations,
    luxemburg_norm,
    modular,
    sobolev_norm,
)

__version__ = "0.1.0"
