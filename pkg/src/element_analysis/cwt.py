"""Scale-frequency grid and the amplitude-normalized analytic wavelet transform."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
from scipy.optimize import brentq

from .errors import ConfigurationError
from .morse import WaveletSpec, footprint, freq_wavelet

__all__ = ["FrequencyGrid", "TransformPlane", "build_grid", "transform",
           "fill_missing", "scaling_check", "ScalingReport"]


@dataclass(frozen=True)
class FrequencyGrid:
    """Geometric array of scale frequencies, highest first.

    Attributes
    ----------
    omegas : ndarray
        Scale frequencies in radians per sample, strictly decreasing.
    r : float
        Ratio of successive scales, ``omegas[j] / omegas[j + 1]``.
    eta, D, p : float
        High-frequency cutoff level, density, and packing number used to
        build the grid.  ``nan`` when the grid was given explicitly.
    M : int
        Length of the series the grid was designed for.
    """

    omegas: np.ndarray
    r: float
    eta: float
    D: float
    p: float
    M: int

    def __len__(self) -> int:
        return len(self.omegas)

    def scales(self, wavelet: WaveletSpec) -> np.ndarray:
        return wavelet.omega_peak / self.omegas

    def digest(self) -> str:
        """Short hash of the frequency array, used in cache keys."""
        rounded = np.round(np.asarray(self.omegas, dtype=float), 12)
        return hashlib.sha256(rounded.tobytes()).hexdigest()[:16]

    @classmethod
    def explicit(cls, omegas, M: int) -> "FrequencyGrid":
        omegas = np.asarray(omegas, dtype=float)
        if omegas.ndim != 1 or omegas.size == 0 or np.any(omegas <= 0):
            raise ConfigurationError("omegas must be a non-empty array of positive frequencies")
        if np.any(np.diff(omegas) >= 0):
            raise ConfigurationError("omegas must be strictly decreasing")
        r = float(omegas[0] / omegas[1]) if omegas.size > 1 else float("nan")
        return cls(omegas, r, float("nan"), float("nan"), float("nan"), int(M))


@dataclass
class TransformPlane:
    """Wavelet transform values on a time x scale grid.

    ``values[n, j]`` is the transform at sample ``n`` and scale frequency
    ``grid.omegas[j]``.  Stored column-major so each scale is contiguous.
    """

    values: np.ndarray
    grid: FrequencyGrid
    wavelet: WaveletSpec
    missing_mask: np.ndarray
    edge_mask: np.ndarray

    @property
    def scales(self) -> np.ndarray:
        return self.grid.scales(self.wavelet)

    @property
    def footprints(self) -> np.ndarray:
        return footprint(self.wavelet, self.scales)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _omega_high(wavelet: WaveletSpec, eta: float) -> float:
    # frequency x > omega_peak where Psi has decayed to eta times its peak
    peak = float(freq_wavelet(wavelet, wavelet.omega_peak))
    log_target = math.log(eta * peak)
    log_a = math.log(wavelet.a)

    def g(x):
        return log_a + wavelet.beta * math.log(x) - x**wavelet.gamma - log_target

    lo = wavelet.omega_peak
    hi = 2 * lo
    while g(hi) > 0:
        hi *= 2
    x = brentq(g, lo, hi, xtol=1e-15, rtol=1e-12)
    return math.pi * wavelet.omega_peak / x


def build_grid(wavelet: WaveletSpec, M: int, eta: float = 0.1, D: float = 4.0,
               p: float = 5.0) -> FrequencyGrid:
    """Logarithmically spaced scale frequencies for a series of length ``M``.

    The highest frequency is set so that the wavelet has decayed to ``eta``
    of its peak at the Nyquist frequency; successive frequencies differ by
    the ratio ``1 + 1/(D P)``; the lowest frequency is the last one for which
    ``p`` footprints still fit in ``M`` samples.
    """
    if not wavelet.is_wavelet:
        raise ConfigurationError("the analyzing wavelet needs beta > 0")
    if not 0 < eta < 1:
        raise ConfigurationError(f"eta must lie in (0, 1), got {eta}")
    if not D > 0 or not p > 0:
        raise ConfigurationError("D and p must be positive")
    if M < 16:
        raise ConfigurationError(f"series length {M} is too short (need >= 16)")
    omega_high = _omega_high(wavelet, eta)
    omega_low = p * 2 * math.sqrt(2) * wavelet.p_time_bandcenter / M
    if omega_high <= omega_low:
        raise ConfigurationError(
            f"series of length {M} too short: omega_high={omega_high:.4g} "
            f"<= omega_low={omega_low:.4g}")
    r = 1 + 1 / (D * wavelet.p_time_bandcenter)
    J = int(math.floor(math.log(omega_high / omega_low) / math.log(r) + 1e-12)) + 1
    omegas = omega_high / r ** np.arange(J)
    return FrequencyGrid(omegas, r, float(eta), float(D), float(p), int(M))


def fill_missing(x, missing_mask) -> np.ndarray:
    """Linearly interpolate over missing samples; ends take the nearest valid value."""
    x = np.asarray(x, dtype=float)
    missing = np.asarray(missing_mask, dtype=bool)
    if x.ndim != 1 or missing.shape != x.shape:
        raise ValueError("x and missing_mask must be 1-d arrays of the same length")
    valid = ~missing
    if not valid.any():
        raise ValueError("all samples are missing")
    if not np.all(np.isfinite(x[valid])):
        bad = np.flatnonzero(valid & ~np.isfinite(x))
        raise ValueError(f"non-finite values at valid samples, first at index {bad[0]}")
    if valid.all():
        return x.copy()
    n = np.arange(x.size)
    return np.interp(n, n[valid], x[valid])


def _edge_mask(M: int, footprints: np.ndarray) -> np.ndarray:
    n = np.arange(M)[:, None]
    half = footprints[None, :] / 2
    return (n < half) | (M - 1 - n < half)


def transform(x, missing_mask, wavelet: WaveletSpec, grid: FrequencyGrid) -> TransformPlane:
    """Analytic wavelet transform with 1/s amplitude normalization.

    The filled series is reflected about its end so the extended sequence of
    length ``2 M`` is a symmetric periodic extension; each scale column is the
    inverse DFT of ``Psi(s omega_k) X_k`` over nonnegative frequencies.
    """
    if missing_mask is None:
        missing_mask = np.zeros(np.shape(x), dtype=bool)
    filled = fill_missing(x, missing_mask)
    M = filled.size
    values = _transform_columns(filled, wavelet, grid.omegas)
    edge = _edge_mask(M, footprint(wavelet, grid.scales(wavelet)))
    return TransformPlane(values, grid, wavelet, np.asarray(missing_mask, dtype=bool).copy(), edge)


@lru_cache(maxsize=4)
def _filter_bank(wavelet: WaveletSpec, N: int, omega_bytes: bytes) -> np.ndarray:
    # Psi(s omega_k) for every scale, on the nonnegative DFT frequencies of length N
    omegas = np.frombuffer(omega_bytes, dtype=float)
    omega_k = 2 * np.pi * np.arange(N // 2 + 1) / N
    H = freq_wavelet(wavelet, (wavelet.omega_peak / omegas)[:, None] * omega_k[None, :])
    if N % 2 == 0:
        H[:, -1] *= 0.5
    H.setflags(write=False)
    return H


def _transform_columns(x: np.ndarray, wavelet: WaveletSpec, omegas: np.ndarray,
                       block: int = 16) -> np.ndarray:
    M = x.size
    ext = np.concatenate([x, x[::-1]])
    N = ext.size
    X = scipy.fft.rfft(ext)
    omegas = np.ascontiguousarray(omegas, dtype=float)
    J = omegas.size
    # the filter bank is reused across calls with the same length and grid
    H_all = _filter_bank(wavelet, N, omegas.tobytes()) if J * X.size <= 1 << 22 else None
    out = np.empty((M, J), dtype=complex, order="F")
    for start in range(0, J, block):
        stop = min(start + block, J)
        if H_all is not None:
            H = H_all[start:stop]
        else:
            H = _filter_bank.__wrapped__(wavelet, N, omegas[start:stop].tobytes())
        spec = np.zeros((stop - start, N), dtype=complex)
        spec[:, :X.size] = H * X[None, :]
        out[:, start:stop] = scipy.fft.ifft(spec, axis=1)[:, :M].T
    return out


@dataclass(frozen=True)
class ScalingReport:
    rho: int
    max_discrepancy: float
    peak_original: float
    peak_stretched: float


def scaling_check(x, rho: int, wavelet: WaveletSpec | None = None,
                  n_omegas: int = 12) -> ScalingReport:
    """Compare ``|w|`` of ``x`` with that of ``x`` stretched in time by ``rho``.

    The stretched series is the band-limited resampling of ``x`` onto a grid
    ``rho`` times finer, so ``y(t) = x(t / rho)``.  Moduli are compared at
    ``(tau, omega)`` versus ``(rho tau, omega / rho)`` over points away from
    the edges; the discrepancy is normalized by the peak modulus of ``x``.
    """
    import scipy.signal

    rho = int(rho)
    if rho < 1:
        raise ValueError("rho must be a positive integer")
    wavelet = wavelet or WaveletSpec(2.0, 2.0)
    x = np.asarray(x, dtype=float)
    M = x.size
    grid = build_grid(wavelet, M, eta=0.1, D=4.0, p=5.0)
    pick = np.unique(np.linspace(1, len(grid) - 2, n_omegas).round().astype(int))
    omegas = grid.omegas[pick]
    wx = np.abs(_transform_columns(x, wavelet, omegas))
    if rho == 1:
        peak = float(wx.max())
        return ScalingReport(1, 0.0, peak, peak)
    # resample on the symmetric extension so the stretch is consistent with the mirror boundary
    ext = np.concatenate([x, x[::-1]])
    y = scipy.signal.resample(ext, rho * ext.size)[:rho * M]
    wy = np.abs(_transform_columns(y, wavelet, omegas / rho))
    half = footprint(wavelet, wavelet.omega_peak / omegas) / 2
    n = np.arange(M)[:, None]
    interior = (n >= half) & (M - 1 - n >= half)
    diff = np.abs(wx - wy[::rho, :][:M])
    peak = float(wx.max())
    return ScalingReport(rho, float(diff[interior].max() / peak), peak, float(wy.max()))
