"""Technology-adoption dynamics on coupled spatial-network structures."""

__version__ = "0.1.0"

from .amplification import (
    AmplificationReport,
    amplification_by_integration,
    amplification_factor,
    amplification_factors,
    amplification_report,
    decompose,
    validate_against_simulation,
)
from .dynamics import ModelParams, SourceSchedule, Trajectory, Window, integrate, ou_stationary_variance, steady_state
from .errors import (
    AdoptnetError,
    CollinearityError,
    ConfigError,
    ConstructionError,
    DegenerateSampleError,
    IndefiniteOperatorError,
    IngestionError,
    NegativeRateError,
    NumericalError,
    StabilityError,
    UndefinedCorrelationError,
)
from .feynman_kac import WalkGenerator, estimate, make_levy_walk_generator, make_walk_generator
from .graph import Gaussian, Knn, OperatorSet, SpatialNetwork, build_operators, generate_network, load_network, save_network
from .intervention import Shock, run_duration_sweep, run_shock_experiment, threshold_check
from .jumps import JumpParams, regime_summary, simulate_jump_diffusion

__all__ = [
    "AdoptnetError", "AmplificationReport", "CollinearityError", "ConfigError", "ConstructionError",
    "DegenerateSampleError", "Gaussian", "IndefiniteOperatorError", "IngestionError", "JumpParams", "Knn",
    "ModelParams", "NegativeRateError", "NumericalError", "OperatorSet", "Shock", "SourceSchedule",
    "SpatialNetwork", "StabilityError", "Trajectory", "UndefinedCorrelationError", "WalkGenerator", "Window",
    "amplification_by_integration", "amplification_factor", "amplification_factors", "amplification_report",
    "build_operators", "decompose", "estimate", "generate_network", "integrate", "load_network",
    "make_levy_walk_generator", "make_walk_generator", "ou_stationary_variance", "regime_summary",
    "run_duration_sweep", "run_shock_experiment", "save_network", "simulate_jump_diffusion", "steady_state",
    "threshold_check", "validate_against_simulation",
]
