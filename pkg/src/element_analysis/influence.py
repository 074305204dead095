"""Regions of influence around transform maxima and the isolation filter.

Around an element of scale ``rho`` the transform modulus falls to ``lambda``
times its peak along a closed curve in the (time, scale) plane.  Using the
second-order cumulant expansion of the Morse function, the half-width of
that curve in normalized time is

    tau(s) = sqrt(2 (s^g + 1)^(2/g) / K2 * ln(s^b / (lambda theta (s^g + 1)^((b+m+1)/g))))

with ``b = beta``, ``m = mu``, ``g = gamma``, ``K2`` the second cumulant of
the (beta + mu, gamma) Morse function and ``theta`` the scale weighting
factor from :func:`element_analysis.morse.zeta_max`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .maxima import MaximumPoint, canonical_order
from .morse import WaveletSpec, cumulants, peak_frequency, zeta, zeta_max

__all__ = ["InfluenceRegion", "region_curve", "contains", "isolate", "level_log_argument",
           "region_accuracy"]


@dataclass(frozen=True)
class InfluenceRegion:
    """Approximate lambda-level curve of one maximum.

    ``s_tilde`` and ``tau_tilde`` hold the normalized half-width profile on
    increasing scales; ``curve`` is the same boundary as a closed polygon
    of ``(tau, omega_s)`` pairs in samples and rad/sample.
    """

    lam: float
    center_time: float
    rho: float
    s_range: tuple[float, float]
    bracket: tuple[float, float]
    s_tilde: np.ndarray
    tau_tilde: np.ndarray
    curve: np.ndarray
    omega_peak: float

    @property
    def empty(self) -> bool:
        return self.s_tilde.size == 0


def level_log_argument(s_tilde, lam: float, beta: float, mu: float, gamma: float):
    """Natural log inside the half-width formula; the curve is real where it is positive."""
    _, _, theta = zeta_max(beta, mu, gamma)
    s_tilde = np.asarray(s_tilde, dtype=float)
    return (beta * np.log(s_tilde) - math.log(lam * theta)
            - (beta + mu + 1) / gamma * np.log1p(s_tilde**gamma))


def _half_width(s_tilde, lam, beta, mu, gamma):
    _, K2 = cumulants(WaveletSpec(beta + mu, gamma))
    arg = level_log_argument(s_tilde, lam, beta, mu, gamma)
    with np.errstate(invalid="ignore"):
        return np.sqrt(2 * (s_tilde**gamma + 1) ** (2 / gamma) / K2 * arg)


def region_curve(lam: float, beta: float, mu: float, gamma: float, rho_hat: float,
                 t_hat: float, n_points: int = 256) -> InfluenceRegion:
    """Region of influence of a maximum at ``t_hat`` from an element of scale ``rho_hat``.

    Scales are sampled log-uniformly on the bracket
    ``[(lambda theta)^(1/beta), (lambda theta)^(-1/(mu+1))]`` that contains
    the real-valued part of the curve; samples where the half-width is
    imaginary are dropped and the two exact crossing scales are added so
    the curve closes at zero half-width.
    """
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    if not beta > 0 or not mu >= 0:
        raise ValueError("need beta > 0 and mu >= 0")
    n_points = max(int(n_points), 64)
    s_max, _, theta = zeta_max(beta, mu, gamma)
    lo_b = (lam * theta) ** (1 / beta)
    hi_b = (1 / (lam * theta)) ** (1 / (mu + 1))
    s = np.exp(np.linspace(math.log(lo_b), math.log(hi_b), n_points))
    arg = level_log_argument(s, lam, beta, mu, gamma)
    real = arg > 0

    def h(x):
        return float(level_log_argument(x, lam, beta, mu, gamma))

    if not real.any() and h(s_max) <= 0:
        s_t = np.empty(0)
        tau_t = np.empty(0)
        s_range = (float("nan"), float("nan"))
    else:
        # the log argument is unimodal in log s with its peak at s_max
        s_a = brentq(h, lo_b, s_max, xtol=1e-14, rtol=1e-12) if h(lo_b) < 0 else lo_b
        s_b = brentq(h, s_max, hi_b, xtol=1e-14, rtol=1e-12) if h(hi_b) < 0 else hi_b
        keep = real & (s > s_a) & (s < s_b)
        s_t = np.concatenate([[s_a], s[keep], [s_b]])
        tau_t = _half_width(s_t, lam, beta, mu, gamma)
        tau_t = np.nan_to_num(tau_t, nan=0.0)
        tau_t[[0, -1]] = 0.0
        s_range = (float(s_a), float(s_b))
    wp = peak_frequency(beta, gamma)
    omega = wp / (rho_hat * s_t)
    upper = np.column_stack([t_hat + rho_hat * tau_t, omega])
    lower = np.column_stack([t_hat - rho_hat * tau_t[::-1], omega[::-1]])
    curve = np.vstack([upper, lower]) if s_t.size else np.empty((0, 2))
    return InfluenceRegion(float(lam), float(t_hat), float(rho_hat), s_range,
                           (float(lo_b), float(hi_b)), s_t, tau_t, curve, wp)


def contains(region: InfluenceRegion, tau: float, omega_s: float) -> bool:
    """Strict interior test for a point given in samples and rad/sample."""
    if region.empty:
        return False
    s_t = region.omega_peak / omega_s / region.rho
    lo, hi = region.s_range
    if not lo < s_t < hi:
        return False
    tau_t = abs(tau - region.center_time) / region.rho
    width = np.interp(math.log(s_t), np.log(region.s_tilde), region.tau_tilde)
    # points on the stored polyline round-trip to within a few ulps of the
    # boundary; the margin keeps them outside
    return bool(tau_t < width * (1 - 1e-9) - 1e-12)


def isolate(points: list[MaximumPoint], lam: float, beta: float, mu: float, gamma: float,
            n_points: int = 256) -> list[MaximumPoint]:
    """Clear ``isolated`` on maxima whose own region holds a larger maximum.

    Only points that are not edge-flagged and are still significant take
    part, as candidates and as shielding neighbours.  Points are visited in
    order of decreasing magnitude; of two equal magnitudes the earlier time
    counts as the larger.  Returns the points in canonical order.
    """
    ordered = canonical_order(points)
    active = [p for p in ordered if not p.edge and p.significant]
    s_max = zeta_max(beta, mu, gamma)[0]
    wp = peak_frequency(beta, gamma)
    for k, p in enumerate(active):
        if k == 0:
            continue
        rho_hat = wp / p.omega_s / s_max
        region = region_curve(lam, beta, mu, gamma, rho_hat, p.t_index, n_points)
        for q in active[:k]:
            if contains(region, q.t_index, q.omega_s):
                p.reject("isolated", "not-isolated")
                break
    return ordered


# ----------------------------------------------------------------- accuracy check


def region_accuracy(lam: float, beta: float, mu: float, gamma: float, n_rays: int = 72) -> float:
    """Mean relative radial gap between the closed-form curve and the exact level set.

    Rays leave the peak ``(tau, ln s) = (0, ln s_max)`` in a plane whose axes
    are scaled by the approximate curve's extents.  Along each ray the
    radius where ``|zeta| = lambda zeta_max`` (evaluated exactly) and the
    radius where the cumulant approximation reaches the same level are
    found by bisection; the mean of ``|r_approx - r_exact| / r_exact`` is
    returned.  Ratios along a single ray do not depend on the axis scaling.
    """
    s_max, zmax, theta = zeta_max(beta, mu, gamma)
    _, K2 = cumulants(WaveletSpec(beta + mu, gamma))
    region = region_curve(lam, beta, mu, gamma, 1.0, 0.0)
    if region.empty:
        raise ValueError("empty region")
    half_tau = float(_half_width(np.array([s_max]), lam, beta, mu, gamma)[0])
    ls0 = math.log(s_max)
    half_ls = max(ls0 - math.log(region.s_range[0]), math.log(region.s_range[1]) - ls0)
    ang = (np.arange(n_rays) + 0.5) * 2 * np.pi / n_rays
    dt, dl = np.cos(ang) * half_tau, np.sin(ang) * half_ls

    def exact(r):
        return np.abs(zeta(r * dt, np.exp(ls0 + r * dl), beta, mu, gamma)) / zmax - lam

    def approx(r):
        st = np.exp(ls0 + r * dl)
        tau = r * dt
        rg = 1 + st**gamma
        log_f = (beta * np.log(st) - (beta + mu + 1) / gamma * np.log(rg)
                 - 0.5 * tau**2 * K2 / rg ** (2 / gamma))
        return np.exp(log_f) / theta - lam

    def first_crossing(fun):
        # march outward to bracket the first sign change, then bisect
        r_grid = np.linspace(0.0, 4.0, 161)
        vals = np.array([fun(np.full(n_rays, r)) for r in r_grid])
        idx = np.argmax(vals < 0, axis=0)
        if np.any(vals[idx, np.arange(n_rays)] >= 0):
            raise ValueError("level set not closed within the search radius")
        lo, hi = r_grid[idx - 1], r_grid[idx]
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            pos = fun(mid) > 0
            lo, hi = np.where(pos, mid, lo), np.where(pos, hi, mid)
        return 0.5 * (lo + hi)

    r_exact = first_crossing(exact)
    r_approx = first_crossing(approx)
    return float(np.mean(np.abs(r_approx - r_exact) / r_exact))
