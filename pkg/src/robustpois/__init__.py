"""Robust estimation of Poisson log-linear autoregressions with missing
entries and sparse outliers."""

from .model import (
    HyperParams,
    ModelParams,
    ModelState,
    NumericalRangeError,
    ObservationSet,
    forward_means,
    grad_smooth,
    neg_log_likelihood,
    objective,
    smooth_part,
)
from .prox import ShrinkageProblem, newton_second_zero, prox_energy, shrink
from .special import digamma, log_gamma

__version__ = "0.1.0"
