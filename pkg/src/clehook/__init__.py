"""Connection probabilities for conformal loop ensembles: closed forms,
stochastic-flow Monte Carlo, and exact discrete-model checks."""

from .bessel import (
    DrivingPath,
    LocalTimeConfig,
    TrackedPoint,
    default_localtime_config,
    estimate_excursion_ratio,
    estimate_localtime_at_tau,
    estimate_localtime_expectation,
    estimate_wald_pair,
    local_time_estimate,
    simulate_driving_pair,
    swallow_time,
)
from .errors import (
    AccuracyLossError,
    ClehookError,
    DomainError,
    NonTerminationError,
    NumericError,
    ParameterError,
    ResourceError,
    StatisticsError,
)
from .hookup import (
    HookupEvaluation,
    KappaContext,
    Regime,
    aspect_to_cross,
    avoid_probability_Q,
    bessel_value_function_U,
    c_event_probability,
    cardy_denominator,
    cardy_denominator_quadrature,
    cardy_hit_asymptote,
    cardy_hit_probability,
    cross_to_aspect,
    eta_gamma_form,
    f_kappa,
    f_one,
    f_params,
    hookup_probability,
    localtime_expectation,
    make_context,
    partition_Z,
    partition_Z_limit,
    relate_models,
    theta_identity_residual,
)
from .lattice import (
    BOUNDARY_CONVENTION,
    ExactResult,
    FkInstance,
    FplInstance,
    Tileset,
    UnionFind,
    fk_duality_identity,
    fk_exact_crossing,
    fk_mc_crossing,
    fpl_enumerate_hookup,
    fpl_rotation_check,
)
from .mc import BATCH, McEstimate
from .sle import SleHitConfig, estimate_hit_probability, simulate_hit_event
from .specialfn import (
    HypergeometricParams,
    basis_about_infinity,
    basis_about_one,
    basis_about_one_outside,
    connection_coefficients_infinity,
    connection_coefficients_one,
    euler_transform,
    gamma_ratio,
    gauss_2f1,
    gauss_2f1_at_one,
    h1_about_infinity,
    log_gamma,
    signed_log_gamma,
)

__version__ = "0.1.0"
