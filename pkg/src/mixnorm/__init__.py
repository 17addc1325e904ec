"""Numerical toolkit for mixed-norm spaces of analytic functions with radial doubling weights."""

__version__ = "0.1.0"

from .diskfn import AnalyticPoly, NormSpec, PolarSamples, mixed_norm, space_norm_Xq  # noqa: E402
from .ratios import RatioReport, ratio_sweep  # noqa: E402
from .weights import RadialWeight, load_weight, parse_weight  # noqa: E402

__all__ = [
    "AnalyticPoly", "NormSpec", "PolarSamples", "RadialWeight", "RatioReport",
    "load_weight", "mixed_norm", "parse_weight", "ratio_sweep", "space_norm_Xq",
]
