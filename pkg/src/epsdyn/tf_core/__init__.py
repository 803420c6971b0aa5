"""Transfer-function algebra with exact transport lags."""
from .delay_rational import (
    DegenerateFeedbackError,
    DelayMismatchError,
    DelayRational,
    NonzeroDelayError,
    PoleOnAxisError,
    StabilityReport,
    dc_gain,
    freq_eval,
    pade_coefficients,
    pade_rationalize,
    poles_and_stability,
    tf_add,
    tf_feedback,
    tf_mul,
)
from .frequency import (
    FrequencyGrid,
    FrequencyResponse,
    GridMismatchError,
    evaluator_of,
    sample,
)
from .margins import Crossover, MarginReport, nyquist_rhp_count, stability_margins
from .polynomial import Polynomial

__all__ = [
    "Crossover",
    "DegenerateFeedbackError",
    "DelayMismatchError",
    "DelayRational",
    "FrequencyGrid",
    "FrequencyResponse",
    "GridMismatchError",
    "MarginReport",
    "nyquist_rhp_count",
    "NonzeroDelayError",
    "PoleOnAxisError",
    "Polynomial",
    "StabilityReport",
    "dc_gain",
    "evaluator_of",
    "freq_eval",
    "pade_coefficients",
    "pade_rationalize",
    "poles_and_stability",
    "sample",
    "stability_margins",
    "tf_add",
    "tf_feedback",
    "tf_mul",
]
