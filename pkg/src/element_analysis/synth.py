"""Synthetic test signals: Morse element trains, white noise and red noise."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .morse import ElementSpec, WaveletSpec, time_wavelet

__all__ = ["EventTrain", "element_series", "paper_synthetic", "white_noise", "red_noise",
           "element_footprint", "PAPER_LENGTH", "PAPER_GAP"]

PAPER_LENGTH = 12000
PAPER_GAP = 200
_PAPER_PERIODS = 100.0 * 10.0 ** (0.2 * np.arange(6))


@dataclass
class EventTrain:
    """Planted events ``x(t) = sum_n Re{c_n psi_{mu,gamma}((t - t_n) / rho_n)}``."""

    times: np.ndarray
    rhos: np.ndarray
    coeffs: np.ndarray
    element: ElementSpec
    length: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.rhos = np.asarray(self.rhos, dtype=float)
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if not (self.times.shape == self.rhos.shape == self.coeffs.shape):
            raise ValueError("times, rhos and coeffs must have the same length")
        if np.any(self.rhos <= 0):
            raise ValueError("element scales must be positive")
        if np.any(self.omega_rho >= np.pi):
            raise ValueError("element frequencies must lie below the Nyquist frequency")

    def __len__(self) -> int:
        return self.times.size

    @property
    def omega_rho(self) -> np.ndarray:
        return self.element.omega_peak / self.rhos

    def signal(self) -> np.ndarray:
        return element_series(self.times, self.rhos, self.coeffs, self.element, self.length)

    def to_dict(self) -> dict:
        return {
            "element": {"mu": self.element.mu, "gamma": self.element.gamma},
            "length": int(self.length),
            "events": [
                {"t": float(t), "rho": float(r), "omega_rho": float(w),
                 "abs_c": float(abs(c)), "phase": float(np.angle(c))}
                for t, r, w, c in zip(self.times, self.rhos, self.omega_rho, self.coeffs)
            ],
            **self.meta,
        }


def element_footprint(element: ElementSpec, rho) -> np.ndarray:
    """Duration of a scale-``rho`` element: its footprint, or for ``mu = 0`` the
    comparable interval ``2 sqrt(2) pi rho / omega_{0,gamma}``."""
    rho = np.asarray(rho, dtype=float)
    if element.mu > 0:
        return 2 * math.sqrt(2) * element.p_time_bandcenter * rho / element.omega_peak
    return 2 * math.sqrt(2) * math.pi * rho / element.omega_peak


def element_series(times, rhos, coeffs, element: ElementSpec, length: int,
                   n_footprints: float | None = None) -> np.ndarray:
    """Sum of rescaled, phase-rotated element functions sampled at ``0..length-1``.

    With ``n_footprints`` each element is evaluated only within that many
    element durations of its centre.  Analytic elements decay only
    algebraically, like ``|t|**-(mu+1)``, so truncation leaves a small tail
    error; ``None`` evaluates every element at every sample.
    """
    out = np.zeros(int(length))
    n = np.arange(int(length), dtype=float)
    spec = element.spec
    for t0, rho, c in zip(np.atleast_1d(times), np.atleast_1d(rhos), np.atleast_1d(coeffs)):
        if n_footprints is None:
            lo, hi = 0, int(length)
        else:
            half = float(n_footprints * element_footprint(element, rho))
            lo = max(0, int(math.floor(t0 - half)))
            hi = min(int(length), int(math.ceil(t0 + half)) + 1)
        if hi <= lo:
            continue
        out[lo:hi] += np.real(c * time_wavelet(spec, (n[lo:hi] - t0) / rho))
    return out


def paper_synthetic(gap: float = PAPER_GAP, length: int = PAPER_LENGTH,
                    wavelet: WaveletSpec | None = None):
    """Six first-order Gaussian (mu=1, gamma=2) elements in a 12000-sample record.

    Periods ``2 pi / omega_rho`` run from 100 to 1000 in steps of 0.2 in
    log10, phases from 0 to pi/2 in steps of pi/10, and every element has
    ``|c psi(0)| = 2``.

    Adjacent events are ``gap`` samples apart measured between the ends of
    their transform supports.  The support of an event is taken as the
    element footprint plus the footprint of the analyzing wavelet (default
    beta=2, gamma=2) at the scale where the event's maximum sits, which is
    the duration of their convolution.  The train is centred in the record.

    Returns
    -------
    x_clean : ndarray
    truth : EventTrain
    """
    from .morse import footprint, zeta_max

    wavelet = wavelet or WaveletSpec(2.0, 2.0)
    element = ElementSpec(1.0, 2.0)
    omega_rho = 2 * np.pi / _PAPER_PERIODS
    rhos = element.omega_peak / omega_rho
    amp = 2.0 / float(np.real(time_wavelet(element.spec, [0.0])[0]))
    phases = np.arange(6) * np.pi / 10
    coeffs = amp * np.exp(1j * phases)
    L_elem = element_footprint(element, rhos)
    s_max = zeta_max(wavelet.beta, element.mu, wavelet.gamma)[0]
    half = (L_elem + footprint(wavelet, rhos * s_max)) / 2
    centres = np.concatenate([[0.0], np.cumsum(half[:-1] + gap + half[1:])])
    mid = (centres[0] - half[0] + centres[-1] + half[-1]) / 2
    times = np.round(centres - mid + length / 2)
    truth = EventTrain(times, rhos, coeffs, element, int(length),
                       meta={"gap": float(gap), "placement": "transform-support-gap"})
    return truth.signal(), truth


def white_noise(length: int, sigma: float = 1.0, seed: int = 0) -> np.ndarray:
    """Independent Gaussian samples with standard deviation ``sigma``."""
    rng = np.random.default_rng(seed)
    return sigma * rng.standard_normal(int(length))


def red_noise(length: int, seed: int = 0, return_amplitude: bool = False):
    """Cumulative sum of unit white noise, then zero mean and unit variance.

    With ``return_amplitude`` the spectral amplitude ``A`` of the result
    under ``S(omega) = A^2 omega^-2`` is returned as well; it is the inverse
    of the standard deviation of the raw cumulative sum.
    """
    rng = np.random.default_rng(seed)
    walk = np.cumsum(rng.standard_normal(int(length)))
    sd = walk.std()
    x = (walk - walk.mean()) / sd
    # remove rounding residue so the moments are exact to double precision
    x = x - x.mean()
    x = x / x.std()
    return (x, 1.0 / sd) if return_amplitude else x
