"""pmshock: event-time microstructure analysis of prediction-market shocks.

From raw matched-trade logs of a binary prediction market to event-time
diagnostics of trading responses (abnormal activity, entry), trader
heterogeneity (panel/pooled/logit regressions), and price adjustment
(Kyle lambda, Glosten-Harris, variance ratios, two-sidedness), with
matched-time placebo randomization inference and a synthetic-market oracle.
"""
from .config import RunConfig, load_config
from .errors import (
    CollinearityError,
    DataError,
    NumericalError,
    PmshockError,
    SeparationError,
    ValidationError,
)
from .series import BIN_WIDTH, EventSpec, bin_index, build_bin_series, classify_ticks
from .synth import ExposureConfig, ShockSpec, SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "BIN_WIDTH",
    "CollinearityError",
    "DataError",
    "EventSpec",
    "ExposureConfig",
    "NumericalError",
    "PmshockError",
    "RunConfig",
    "SeparationError",
    "ShockSpec",
    "SynthConfig",
    "ValidationError",
    "bin_index",
    "build_bin_series",
    "classify_ticks",
    "generate",
    "load_config",
    "__version__",
]
