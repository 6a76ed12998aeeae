"""Estimating the larger of two location parameters under invariant losses."""

from .calibrate import Calibration, CalibrationError
from .estimate import Estimate, all_estimates, estimate, ierd_check
from .family import LocationFamily, ObservationPair, custom_family, exponential_family, make_family, normal_family
from .loss import LossKind, LossSpec, check_bowl, make_loss
from .numerics import QuadSpec, RootSpec, NumericalError
from .risklab import SweepConfig, dominance_report, gpn_sweep, risk_sweep

__version__ = "0.1.0"
