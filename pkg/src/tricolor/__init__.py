"""Noise model and analysis toolkit for three-color CV entanglement from cascaded NOPOs."""

from .cascade_model import CascadeConfig, build_cascade_covariance, criteria_at_operating_point
from .errors import BelowThresholdError, ConfigError, NoSolutionError, PhysicsError, TricolorError
from .gaussian_core import CovarianceMatrix, ModeLabel, QuadratureCombo, VarianceDb, apply_loss, physicality_check
from .nopo_model import NoiseInputSpectrum, NopoParams
from .vlf_criteria import CriteriaResult, MeasuredDbTable, criteria_from_measurements, evaluate, evaluate_optimal

__version__ = "0.1.0"
