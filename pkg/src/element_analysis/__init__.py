"""Element analysis: detection and reconstruction of Morse-function events in noise."""

from __future__ import annotations

__version__ = "0.1.0"

from .cwt import FrequencyGrid, TransformPlane, build_grid, transform
from .errors import ConfigurationError, MonteCarloFloorError, NumericalError
from .influence import InfluenceRegion, contains, isolate, region_curve
from .maxima import MaximumPoint, apply_missing_rule, find_maxima, refine
from .morse import ElementSpec, WaveletSpec, zeta, zeta_max
from .noise import NoiseModel, RateTable, simulate_maxima, threshold_for_rate
from .pipeline import AnalysisConfig, AnalysisResult, EventEstimate, infer, reconstruct, run
from .synth import EventTrain, paper_synthetic, red_noise, white_noise

__all__ = [
    "AnalysisConfig", "AnalysisResult", "ConfigurationError", "ElementSpec", "EventEstimate",
    "EventTrain", "FrequencyGrid", "InfluenceRegion", "MaximumPoint", "MonteCarloFloorError",
    "NoiseModel", "NumericalError", "RateTable", "TransformPlane", "WaveletSpec",
    "apply_missing_rule", "build_grid", "contains", "find_maxima", "infer", "isolate",
    "paper_synthetic", "red_noise", "reconstruct", "refine", "region_curve", "run",
    "simulate_maxima", "threshold_for_rate", "transform", "white_noise", "zeta", "zeta_max",
]
