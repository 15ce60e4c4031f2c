"""boundary-lab: simulation, envelope estimation and Monte Carlo verification
for Poisson support-boundary models."""

from .bounds import (
    DeviationBoundParams,
    ExponentTable,
    InterpolationCheck,
    deviation_bound,
    deviation_bound_curve,
    gamma_moment,
    interpolation_check,
    local_asymptotic_constant,
    rate_exponents,
    risk_upper_bound_power,
    variance_rhs,
)
from .envelope import Envelope, ExceedanceTable, build_exceedance_table, envelope_evaluate, envelope_exceedance
from .functionals import (
    EstimateResult,
    estimate_functional,
    estimate_lp_norm,
    estimate_pseudo,
    exact_power_envelope_integral,
)
from .harness import RateFit, RiskRow, RiskTable, fit_rate_slope, run_risk_grid
from .lowerbound import (
    Chi2Report,
    PriorConfig,
    chi2_certificate,
    draw_prior,
    estimation_prior_cells,
    likelihood_ratio,
    matched_weights,
    prior_geometry,
    theta_norm,
    uniform_weights,
)
from .model import (
    BoundaryFunction,
    BumpSumBoundary,
    ConstantBoundary,
    FunctionalSpec,
    GridBoundary,
    HolderClass,
    ModelConfig,
    NoObservationsError,
    PowerRampBoundary,
    ShiftedBoundary,
    functional_value,
    holder_membership_check,
    parse_boundary,
    power_functional,
)
from .simulate import PppSample, default_cap, read_sample_csv, sample_ppp, write_sample_csv
from .testing import ErrorExperimentResult, TestConfig, default_alternatives, error_experiment, run_test

__version__ = "0.1.0"
