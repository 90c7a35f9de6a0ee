"""Photocurrent noise spectra of a three-level laser pumped coherently by a two-level laser.

The package builds linear Langevin models of the coupled lasers
(:mod:`lumispec.system`), evaluates their photocurrent spectra exactly
(:mod:`lumispec.spectra`), simulates them by Monte Carlo
(:mod:`lumispec.montecarlo`, :mod:`lumispec.dsp`) and scans parameters
(:mod:`lumispec.sweep`).
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BudgetError,
    ConfigError,
    InconsistentSteadyStateError,
    LumispecError,
    NumericalError,
    ParameterError,
    SingularResolventError,
    UnstableSystemError,
)
from .model import (  # noqa: E402
    LaserParams,
    MicroParams,
    RegimeWarning,
    SteadyState,
    kappa0_from_micro,
    steady_state,
    xi_from_pump,
)
from .system import (  # noqa: E402
    LinearNoiseSystem,
    build,
    build_coupled,
    build_feedback_coupled,
    build_feedback_isolated,
    build_isolated_2l,
    psd_classify,
)
from .spectra import SpectrumCurve, closed_form, transfer_spectrum, validate_engine  # noqa: E402
from .montecarlo import TrajectoryEnsemble, factor_covariance, simulate  # noqa: E402
from .dsp import PsdEstimate, ensemble_spectrum, welch_psd  # noqa: E402
from .sweep import SweepResult, fano_zero, ips_distance, sweep  # noqa: E402

__all__ = [
    "BudgetError", "ConfigError", "InconsistentSteadyStateError", "LumispecError", "NumericalError",
    "ParameterError", "SingularResolventError", "UnstableSystemError",
    "LaserParams", "MicroParams", "RegimeWarning", "SteadyState", "kappa0_from_micro", "steady_state",
    "xi_from_pump",
    "LinearNoiseSystem", "build", "build_coupled", "build_feedback_coupled", "build_feedback_isolated",
    "build_isolated_2l", "psd_classify",
    "SpectrumCurve", "closed_form", "transfer_spectrum", "validate_engine",
    "TrajectoryEnsemble", "factor_covariance", "simulate",
    "PsdEstimate", "ensemble_spectrum", "welch_psd",
    "SweepResult", "fano_zero", "ips_distance", "sweep",
]
