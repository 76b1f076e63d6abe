"""Rate-energy analysis and constellation design for a unified SWIPT receiver.

Submodules
----------
system
    Scenario parameters, signal models and harvested energy.
bounds
    Closed-form rate upper bounds.
inner
    Monte-Carlo achievable rate with Gaussian input.
region
    Rate-energy curves, baselines and fading averages.
constellation
    Multi-ring QAM, the 3-D observation model and ML detection.
optimizer
    Integer constellation design under a pairwise-error target.
simulator
    Link-level symbol-error simulation.
"""

from .errors import (
    ConfigError,
    DegenerateNoise,
    InfeasibleGeometry,
    QuadratureFailure,
    SingularCovariance,
    SwiptError,
)
from .system import PRESETS, PowerSplit, SystemParams, harvested_energy, preset
from .bounds import rate_upper, q_function
from .inner import lower_bound, mi_rectified_gaussian_input, rate_lower
from .region import ergodic_region, region_curves
from .constellation import (
    Constellation,
    build_constellation,
    ml_detect,
    noise_covariance,
    pairwise_error_probability,
)
from .optimizer import DesignPoint, OptimizationResult, solve_p1, solve_p2, sweep_rho
from .simulator import SimReport, simulate_ser, validate_pep

__all__ = [
    "ConfigError",
    "DegenerateNoise",
    "InfeasibleGeometry",
    "QuadratureFailure",
    "SingularCovariance",
    "SwiptError",
    "PRESETS",
    "PowerSplit",
    "SystemParams",
    "harvested_energy",
    "preset",
    "rate_upper",
    "q_function",
    "lower_bound",
    "mi_rectified_gaussian_input",
    "rate_lower",
    "ergodic_region",
    "region_curves",
    "Constellation",
    "build_constellation",
    "ml_detect",
    "noise_covariance",
    "pairwise_error_probability",
    "DesignPoint",
    "OptimizationResult",
    "solve_p1",
    "solve_p2",
    "sweep_rho",
    "SimReport",
    "simulate_ser",
    "validate_pep",
]
