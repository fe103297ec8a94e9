"""Robust optimal harvesting of a population with uncertain physiological heterogeneity."""

from .calibrate import (
    Candidate,
    FitRanges,
    FitResult,
    ObservationSet,
    grid_search_fit,
    loss,
    theoretical_moments,
)
from .config import RunConfig, ValidationReport, load_config, parse_config, validate
from .estimators import RobustHarvestSolver, UncertainLogisticRegressor
from .exceptions import (
    CFLViolation,
    CFLWarning,
    ConfigurationError,
    InputError,
    NumericalFailure,
    ParameterError,
)
from .growth import (
    PRESETS,
    GrowthSpec,
    HeterogeneityDensity,
    QuadratureGrid,
    density_weights,
    mean_weight,
    weight,
)
from .policy import (
    Trajectory,
    distorted_weight_path,
    gradient_n,
    integrate_backward,
    integrate_forward,
    optimal_harvest,
    policy_field,
)
from .robust import (
    DistortionField,
    ObjectiveSpec,
    PiecewiseLinear,
    distorted_mean_weight,
    hamiltonian,
    hamiltonian_dz,
    hamiltonian_limit,
    hamiltonian_modified,
    kl_divergence,
    worst_case_distortion,
)
from .solver import SolveGrid, ValueField, cfl_max_dt, interpolate, solve

__version__ = "0.1.0"
