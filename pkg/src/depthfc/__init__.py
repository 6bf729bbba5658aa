"""Depth-based forecasting of functional time series."""

__version__ = "0.1.0"

from depthfc.core import (
    CurveLibrary,
    FocalCurve,
    MalformedInputError,
    PeriodGrid,
    lambda_measure,
    pointwise_hull,
    restricted_distance,
    slice_series,
)
from depthfc.depth import DepthReport, depth_percentile, mbd_bruteforce, mbd_restricted
from depthfc.envelope import Envelope, FocalOutsideRangeError, build_envelope, envelopable_set
from depthfc.forecast import (
    BandForecast,
    EnvelopeTooSmallError,
    TuningChart,
    band_forecast,
    k_deepest,
    point_forecast,
    select_k,
    tune,
)
