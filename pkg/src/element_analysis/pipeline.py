"""End-to-end element analysis of one series.

transform -> maxima -> significance -> missing-data rule -> isolation ->
inference -> reconstruction.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import noise as _noise
from .cwt import FrequencyGrid, TransformPlane, build_grid, transform
from .errors import ConfigurationError
from .influence import isolate, region_curve
from .maxima import MaximumPoint, apply_missing_rule, find_maxima
from .morse import ElementSpec, WaveletSpec, zeta_max
from .synth import element_series

__all__ = ["AnalysisConfig", "AnalysisResult", "EventEstimate", "infer", "reconstruct", "run",
           "rate_tables"]


@dataclass
class AnalysisConfig:
    """Parameters of an element analysis.

    ``rate`` is the tolerated number of false detections per scale per
    series of the analysed length (the default means one per thousand
    series).  ``noise_mode`` is ``"fixed"`` to use ``noise_amplitude`` as
    the spectral amplitude ``A`` (the standard deviation for white noise)
    or ``"estimated"`` to infer it from the highest-frequency band.
    """

    beta: float = 2.0
    gamma: float = 2.0
    mu: float = 1.0
    alpha: float = 0.0
    noise_mode: str = "fixed"
    noise_amplitude: float = 1.0
    eta: float = 0.05
    D: float = 4.0
    p: float = 3.0
    lam: float = 0.5
    missing_threshold: float = 0.10
    rate: float = 1e-3
    seed: int = 0
    n_realizations: int = 100_000
    method: str = "conditional"
    n_bins: int = 600
    w_max: float = 6.0
    keep_plane: bool = False
    threads: int = 1

    def validate(self) -> None:
        if not self.beta > 0:
            raise ConfigurationError("beta must be positive for the analyzing wavelet")
        if not self.gamma > 0:
            raise ConfigurationError("gamma must be positive")
        if not self.mu >= 0:
            raise ConfigurationError("mu must be >= 0")
        if not self.beta > self.alpha - 0.5:
            raise ConfigurationError("need beta > alpha - 1/2 for the noise spectrum to exist")
        if not 0 < self.lam < 1:
            raise ConfigurationError("lam must lie in (0, 1)")
        if not 0 <= self.missing_threshold <= 1:
            raise ConfigurationError("missing_threshold must lie in [0, 1]")
        if not self.rate > 0:
            raise ConfigurationError("rate must be positive")
        if self.noise_mode not in ("fixed", "estimated"):
            raise ConfigurationError("noise_mode must be 'fixed' or 'estimated'")
        if self.noise_mode == "fixed" and not self.noise_amplitude > 0:
            raise ConfigurationError("noise_amplitude must be positive")
        if self.method not in ("direct", "conditional"):
            raise ConfigurationError("method must be 'direct' or 'conditional'")
        if int(self.n_realizations) < 1 or int(self.n_bins) < 1 or not self.w_max > 0:
            raise ConfigurationError("n_realizations, n_bins and w_max must be positive")

    @property
    def wavelet(self) -> WaveletSpec:
        return WaveletSpec(self.beta, self.gamma)

    @property
    def element(self) -> ElementSpec:
        return ElementSpec(self.mu, self.gamma)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg


@dataclass
class EventEstimate:
    """Element parameters read off one significant, isolated maximum."""

    t_hat: float
    rho_hat: float
    omega_rho: float
    c_hat: complex
    source: MaximumPoint

    @property
    def abs_c(self) -> float:
        return abs(self.c_hat)

    @property
    def phase(self) -> float:
        return math.atan2(self.c_hat.imag, self.c_hat.real)


@dataclass
class AnalysisResult:
    config: AnalysisConfig
    grid: FrequencyGrid
    noise_model: _noise.NoiseModel
    thresholds: np.ndarray
    maxima: list[MaximumPoint]
    events: list[EventEstimate]
    reconstruction: np.ndarray
    residual: np.ndarray
    expected_false: np.ndarray
    plane: TransformPlane | None = None
    tables: list = field(default_factory=list, repr=False)

    @property
    def counts(self) -> dict:
        usable = [p for p in self.maxima if not p.edge]
        sig = [p for p in usable if p.significant]
        return {"maxima": len(self.maxima), "significant": len(sig),
                "isolated": sum(p.isolated for p in sig)}


def infer(point: MaximumPoint, wavelet: WaveletSpec, element: ElementSpec) -> EventEstimate:
    """Invert a maximum into element time, scale, frequency and coefficient."""
    if wavelet.gamma != element.gamma:
        raise ConfigurationError("wavelet and element must share gamma")
    s_max, zmax, _ = zeta_max(wavelet.beta, element.mu, wavelet.gamma)
    s_hat = wavelet.omega_peak / point.omega_s
    rho = s_hat / s_max
    return EventEstimate(float(point.t_index), rho, element.omega_peak / rho,
                         2 * complex(point.w_value) / zmax, point)


def reconstruct(events: list[EventEstimate], element: ElementSpec, length: int) -> np.ndarray:
    """Superpose the inferred elements on ``0..length-1``.

    Each element is evaluated within four element footprints of its centre
    and taken as zero beyond.
    """
    if length < 1:
        raise ValueError("length must be positive")
    if not events:
        return np.zeros(int(length))
    return element_series([e.t_hat for e in events], [e.rho_hat for e in events],
                          [e.c_hat for e in events], element, length,
                          n_footprints=4.0)


def rate_tables(config: AnalysisConfig, model: _noise.NoiseModel, grid: FrequencyGrid,
                cache: _noise.RateTableCache | None = None) -> list:
    """Noise-maxima rate tables for every interior scale, through the cache if given.

    Tables are normalized by the noise level, so they depend on ``alpha`` but
    not on the amplitude; the key uses unit amplitude.
    """
    unit = _noise.NoiseModel(model.alpha, 1.0)

    def compute():
        return _noise.simulate_maxima(unit, config.wavelet, grid, config.n_realizations,
                                      config.seed, method=config.method, n_bins=config.n_bins,
                                      w_max=config.w_max, threads=config.threads)

    if cache is None:
        return compute()
    key = _noise.cache_key(unit, config.wavelet, grid, config.n_realizations, config.seed,
                           config.method, config.n_bins, config.w_max)
    return cache.get_or_compute(key, compute)


def _non_edge_counts(plane: TransformPlane) -> np.ndarray:
    return (~plane.edge_mask).sum(axis=0)


def run(x, missing=None, config: AnalysisConfig | None = None, *, tables=None,
        cache: _noise.RateTableCache | None = None, grid: FrequencyGrid | None = None
        ) -> AnalysisResult:
    """Full element analysis of one series.

    Parameters
    ----------
    x : array_like
        Samples; values at missing positions are ignored.
    missing : array_like of bool, optional
        True where a sample is missing.  NaNs in ``x`` are treated as missing.
    config : AnalysisConfig
    tables : list of RateTable, optional
        Precomputed rate tables for ``grid``; simulated when omitted.
    cache : RateTableCache, optional
    grid : FrequencyGrid, optional
        Overrides the grid built from ``config``.
    """
    config = config or AnalysisConfig()
    config.validate()
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be one-dimensional")
    miss = np.zeros(x.shape, bool) if missing is None else np.asarray(missing, bool).copy()
    miss |= ~np.isfinite(x)
    x = np.where(miss, 0.0, x)
    M = x.size
    wavelet, element = config.wavelet, config.element
    grid = grid or build_grid(wavelet, M, config.eta, config.D, config.p)
    plane = transform(x, miss, wavelet, grid)

    if config.noise_mode == "fixed":
        model = _noise.NoiseModel(config.alpha, config.noise_amplitude)
    else:
        model = _noise.NoiseModel(config.alpha, _noise.estimate_amplitude(plane, config.alpha))

    if tables is None:
        tables = rate_tables(config, model, grid, cache)
    thresholds = _noise.threshold_for_rate(tables, config.rate, M, len(grid))

    points = find_maxima(plane)
    sigma = np.sqrt(_noise.wavelet_spectrum(model, wavelet,
                                            wavelet.omega_peak / np.array([p.omega_s for p in points])
                                            )) if points else np.empty(0)
    for p, sg in zip(points, sigma):
        p.norm_magnitude = p.magnitude / float(sg)
        if p.edge:
            p.reject("significant", "edge")
        elif not p.norm_magnitude > thresholds[p.scale_index]:
            p.reject("significant", "below-threshold")
    apply_missing_rule([p for p in points if not p.edge], config.missing_threshold)
    points = isolate(points, config.lam, wavelet.beta, element.mu, wavelet.gamma)
    for p in points:
        if not p.significant:
            p.isolated = False

    events = [infer(p, wavelet, element) for p in points if p.passed]
    events.sort(key=lambda e: e.t_hat)
    recon = reconstruct(events, element, M)
    residual = np.where(miss, np.nan, x - recon)

    # expected false detections per scale: rate per series scaled by usable points
    usable = _non_edge_counts(plane).astype(float)
    usable[[0, -1]] = 0.0
    expected = config.rate * usable / M

    return AnalysisResult(config, grid, model, thresholds, points, events, recon, residual,
                          expected, plane if config.keep_plane else None, tables)


def event_regions(result: AnalysisResult, n_points: int = 256) -> list[np.ndarray]:
    """Region-of-influence polylines, one per surviving event."""
    cfg = result.config
    return [region_curve(cfg.lam, cfg.beta, cfg.mu, cfg.gamma, e.rho_hat, e.t_hat,
                         n_points).curve for e in result.events]
