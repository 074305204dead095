"""Generalized Morse functions and the closed forms built on them.

The frequency-domain Morse function is

    Psi(omega) = a * omega**beta * exp(-omega**gamma),   omega > 0

with ``a`` chosen so that the peak value is 2 (or so that ``Psi(0) = 2`` when
``beta == 0``).  Everything here is a pure function of real parameters.
Time-domain values are obtained by Gauss-Legendre quadrature of the inverse
Fourier integral so they can be evaluated at arbitrary real times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

__all__ = [
    "WaveletSpec",
    "ElementSpec",
    "log_amplitude",
    "peak_frequency",
    "freq_wavelet",
    "time_wavelet",
    "moment",
    "cumulants",
    "footprint",
    "zeta",
    "zeta_max",
    "f_noise",
]

# Relative level (to the peak) at which the frequency-domain integrand is cut.
_CUTOFF = 1e-16
_GL_ORDER = 16
_CHUNK = 512


def log_amplitude(beta: float, gamma: float) -> float:
    """Natural log of the normalizing constant ``a_{beta,gamma}``."""
    if beta == 0:
        return math.log(2.0)
    return math.log(2.0) + (beta / gamma) * (1.0 + math.log(gamma) - math.log(beta))


def peak_frequency(beta: float, gamma: float) -> float:
    """Peak frequency, or the half-power frequency when ``beta == 0``."""
    if beta == 0:
        return math.log(2.0) ** (1.0 / gamma)
    return (beta / gamma) ** (1.0 / gamma)


@dataclass(frozen=True)
class WaveletSpec:
    """A (beta, gamma) Morse function with its derived constants."""

    beta: float
    gamma: float
    a: float = field(init=False, repr=False)
    omega_peak: float = field(init=False, repr=False)
    p_time_bandcenter: float = field(init=False, repr=False)

    def __post_init__(self):
        beta, gamma = float(self.beta), float(self.gamma)
        if not (beta >= 0 and math.isfinite(beta)):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if not (gamma > 0 and math.isfinite(gamma)):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "a", math.exp(log_amplitude(beta, gamma)))
        object.__setattr__(self, "omega_peak", peak_frequency(beta, gamma))
        object.__setattr__(self, "p_time_bandcenter", math.sqrt(beta * gamma))

    @property
    def is_wavelet(self) -> bool:
        return self.beta > 0


@dataclass(frozen=True)
class ElementSpec:
    """The (mu, gamma) element function composing the signal."""

    mu: float
    gamma: float

    def __post_init__(self):
        # validation shared with WaveletSpec
        spec = WaveletSpec(self.mu, self.gamma)
        object.__setattr__(self, "mu", spec.beta)
        object.__setattr__(self, "gamma", spec.gamma)

    @property
    def spec(self) -> WaveletSpec:
        return WaveletSpec(self.mu, self.gamma)

    @property
    def a(self) -> float:
        return self.spec.a

    @property
    def omega_peak(self) -> float:
        return self.spec.omega_peak

    @property
    def p_time_bandcenter(self) -> float:
        return self.spec.p_time_bandcenter


def freq_wavelet(spec: WaveletSpec, omega) -> np.ndarray:
    """Evaluate ``Psi_{beta,gamma}(omega)``; zero on negative frequencies."""
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(omega.shape)
    pos = omega > 0
    w = omega[pos]
    out[pos] = np.exp(math.log(spec.a) + spec.beta * np.log(w) - w**spec.gamma)
    if spec.beta == 0:
        out[omega == 0] = spec.a / 2
    return out


@lru_cache(maxsize=256)
def _omega_max(beta: float, gamma: float) -> float:
    # Psi(Omega) = 2 * _CUTOFF beyond the peak
    log_a = log_amplitude(beta, gamma)
    target = math.log(2.0 * _CUTOFF)

    def g(w):
        return log_a + (beta * math.log(w) if beta > 0 else 0.0) - w**gamma - target

    lo = max(peak_frequency(beta, gamma), 1e-12) if beta > 0 else 1e-12
    hi = max(2.0 * lo, 1.0)
    while g(hi) > 0:
        hi *= 2.0
    return brentq(g, lo, hi, xtol=1e-14, rtol=1e-14)


_CONTOUR_DECAY = 40.0  # e-folds of exp(i omega t) kept along the rotated ray


@lru_cache(maxsize=256)
def _contour_angle(gamma: float) -> float:
    # rotation keeping exp(-omega**gamma) decaying: gamma * theta < pi / 2
    return min(math.pi / (3 * gamma), math.pi / 3)


@lru_cache(maxsize=256)
def _contour_radius(beta: float, gamma: float) -> float:
    # radius beyond which |Psi| along the rotated ray is below the cutoff
    c = math.cos(gamma * _contour_angle(gamma))
    log_a = log_amplitude(beta, gamma)
    target = math.log(2.0 * _CUTOFF)

    def g(r):
        return log_a + (beta * math.log(r) if beta > 0 else 0.0) - c * r**gamma - target

    lo = max(peak_frequency(beta, gamma), 1e-12) if beta > 0 else 1e-12
    hi = max(2.0 * lo, 1.0)
    while g(hi) > 0:
        hi *= 2.0
    return brentq(g, lo, hi, xtol=1e-14, rtol=1e-12)


@lru_cache(maxsize=256)
def _unit_nodes(n_panels: int, graded: bool) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [0, 1]."""
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    if graded:
        # geometric refinement of the first panel for the omega**beta, omega**gamma kinks
        inner = edges[1] * 2.0 ** -np.arange(48, 0, -1)
        edges = np.concatenate([[0.0], inner, edges[1:]])
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    lo, hi = edges[:-1, None], edges[1:, None]
    return (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel(), (0.5 * (hi - lo) * w).ravel()


def _path(beta: float, gamma: float, t: np.ndarray):
    """Ray angle, radius and panel count of the integration path for each |t|."""
    omax = _omega_max(beta, gamma)
    theta = _contour_angle(gamma)
    rotate = omax * t / (2 * np.pi) > 12
    angle = np.where(rotate, theta, 0.0)
    radius = np.where(rotate,
                      np.minimum(_contour_radius(beta, gamma),
                                 _CONTOUR_DECAY / (np.maximum(t, 1e-300) * math.sin(theta))),
                      omax)
    phase = radius * t * np.cos(angle) + radius**gamma * np.sin(gamma * angle)
    panels = np.ceil(phase / (2 * np.pi)).astype(int) + 4
    return angle, radius, panels


def _integrate(beta: float, gamma: float, t, angle, radius, n_panels: int) -> np.ndarray:
    graded = not (float(beta).is_integer() and float(gamma).is_integer())
    u, w = _unit_nodes(n_panels, graded)
    ang = angle[:, None]
    log_r = np.log(radius)[:, None] + np.log(u)[None, :]
    omega = np.exp(log_r + 1j * ang)
    log_f = (log_amplitude(beta, gamma) + beta * (log_r + 1j * ang)
             - np.exp(gamma * (log_r + 1j * ang)) + 1j * omega * t[:, None])
    return (np.exp(log_f) @ w) * radius * np.exp(1j * angle) / (2 * np.pi)


def time_wavelet(spec: WaveletSpec, t) -> np.ndarray:
    """Time-domain Morse function ``psi_{beta,gamma}(t)`` at arbitrary real times.

    Evaluates the inverse Fourier integral of ``Psi`` by composite
    Gauss-Legendre quadrature.  For large ``|t|`` the path is rotated into the
    upper half plane, where ``exp(i omega t)`` decays, so the cost per point
    stays bounded.  Negative times use ``psi(-t) = conj(psi(t))``.
    """
    t = np.asarray(t, dtype=float)
    flat = np.abs(t.ravel())
    out = np.empty(flat.shape, dtype=complex)
    if flat.size:
        angle, radius, panels = _path(spec.beta, spec.gamma, flat)
        # panel counts rounded up to multiples of four so node sets are shared
        buckets = 4 * np.ceil(panels / 4).astype(int)
        for nb in np.unique(buckets):
            idx = np.flatnonzero(buckets == nb)
            for start in range(0, idx.size, _CHUNK):
                sub = idx[start:start + _CHUNK]
                out[sub] = _integrate(spec.beta, spec.gamma, flat[sub], angle[sub],
                                      radius[sub], int(nb))
        neg = t.ravel() < 0
        out[neg] = np.conj(out[neg])
    return out.reshape(t.shape)


def moment(n: float, spec: WaveletSpec) -> float:
    """Frequency-domain moment ``(1/2 pi) int omega**n Psi(omega) d omega``."""
    arg = (spec.beta + 1 + n) / spec.gamma
    if arg <= 0:
        raise ValueError(f"moment order {n} gives nonpositive gamma-function argument {arg}")
    return math.exp(math.log(spec.a) - math.log(2 * math.pi * spec.gamma) + gammaln(arg))


def cumulants(spec: WaveletSpec) -> tuple[float, float]:
    """First two time-domain cumulants (K1, K2) of the Morse function."""
    b, g = spec.beta, spec.gamma
    g1 = gammaln((b + 1) / g)
    k1 = math.exp(gammaln((b + 2) / g) - g1)
    k2 = math.exp(gammaln((b + 3) / g) - g1) - k1**2
    return k1, k2


def footprint(spec: WaveletSpec, s) -> float | np.ndarray:
    """Wavelet footprint ``L(s) = 2 sqrt(2) P s / omega_peak`` in samples."""
    if not spec.is_wavelet:
        raise ValueError("footprint is defined only for wavelets (beta > 0)")
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("scale must be positive")
    out = 2 * math.sqrt(2) * spec.p_time_bandcenter * s / spec.omega_peak
    return float(out) if out.ndim == 0 else out


def zeta(tau_t, s_t, beta: float, mu: float, gamma: float) -> np.ndarray:
    """Transform of a (mu, gamma) Morse function by a (beta, gamma) wavelet.

    Arguments are the time offset and scale normalized by the element scale.
    """
    if beta <= 0:
        raise ValueError("analyzing wavelet needs beta > 0")
    tau_t, s_t = np.broadcast_arrays(np.asarray(tau_t, dtype=float),
                                     np.asarray(s_t, dtype=float))
    if np.any(s_t <= 0):
        raise ValueError("normalized scale must be positive")
    stretch = (s_t**gamma + 1.0) ** (1.0 / gamma)
    log_coef = (log_amplitude(beta, gamma) + log_amplitude(mu, gamma)
                - log_amplitude(beta + mu, gamma))
    amp = np.exp(log_coef + beta * np.log(s_t) - (beta + mu + 1) * np.log(stretch))
    return amp * time_wavelet(WaveletSpec(beta + mu, gamma), tau_t / stretch)


def zeta_max(beta: float, mu: float, gamma: float) -> tuple[float, float, float]:
    """Location and value of the maximum of ``|zeta|``.

    Returns
    -------
    s_tilde_max : float
        Normalized scale of the maximum (attained at zero time offset).
    zeta_max : float
        The maximum value, real and positive.
    vartheta : float
        The scale weighting factor entering ``zeta_max``.
    """
    if not (beta > 0 and mu >= 0 and gamma > 0):
        raise ValueError("need beta > 0, mu >= 0, gamma > 0")
    ratio = beta / (mu + 1)
    s_max = ratio ** (1.0 / gamma)
    log_theta = (beta / gamma) * math.log(ratio) - ((beta + mu + 1) / gamma) * math.log(ratio + 1)
    value = math.exp(log_amplitude(beta, gamma) + log_amplitude(mu, gamma)
                     - math.log(2 * math.pi * gamma) + gammaln((beta + mu + 1) / gamma)
                     + log_theta)
    return s_max, value, math.exp(log_theta)


def f_noise(alpha: float, spec: WaveletSpec) -> float:
    """``(1/2 pi) int omega**(-2 alpha) Psi(omega)**2 d omega`` in closed form."""
    if not spec.beta > alpha - 0.5:
        raise ValueError(f"need beta > alpha - 1/2 for an integrable noise spectrum "
                         f"(beta={spec.beta}, alpha={alpha})")
    k = (2 * spec.beta - 2 * alpha + 1) / spec.gamma
    return math.exp(2 * math.log(spec.a) - math.log(2 * math.pi * spec.gamma)
                    + gammaln(k) - k * math.log(2.0))
