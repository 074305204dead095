"""Power-law noise: wavelet spectrum, transform covariance, and maxima statistics.

The noise spectrum is ``S(omega) = A**2 * omega**(-2 alpha)``.  Its wavelet
transform at one point and the four grid neighbours forms a complex Gaussian
5-vector whose covariance ``Sigma`` is known in closed form.  Simulating that
vector replaces transforming long noise series when estimating how often
noise alone produces a transform maximum of a given normalized size.

Two estimators are available for the per-scale rate tables:

``"direct"``
    Draw ``y = L eps`` and keep draws where ``|y1|`` strictly exceeds the
    other four moduli, histogramming ``|y1|``.
``"conditional"``
    Condition on ``y1 = w`` (real, by circular symmetry).  The neighbours
    are then ``c w + e`` with ``e`` complex Gaussian, and ``y1`` is the
    largest exactly when ``w`` falls in a per-draw interval found from one
    quadratic per neighbour.  Integrating the Rayleigh density of ``|y1|``
    over that interval and averaging over draws gives survival values that
    are smooth in ``w`` and resolve far deeper tails than direct counting.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erfc

from .cwt import FrequencyGrid, _transform_columns, build_grid
from .errors import ConfigurationError, MonteCarloFloorError, NumericalError
from .morse import WaveletSpec, f_noise, footprint, time_wavelet

__all__ = [
    "NoiseModel",
    "RateTable",
    "wavelet_spectrum",
    "xi_covariance",
    "sigma_matrix",
    "simulate_maxima",
    "direct_maxima_oracle",
    "threshold_for_rate",
    "estimate_sigma_eps",
    "estimate_amplitude",
    "survival_at",
    "save_tables",
    "load_tables",
    "RateTableCache",
]

SCHEMA = "ratetable/1"
_PSD_FLOOR = -1e-10
_DRAW_CHUNK = 1 << 18

# the five (time offset, scale factor) pairs of the neighbour vector
# importance sampling of the derivative direction: proposal width in units of the
# curvature spread, and the share of draws taken from the untouched distribution
_IS_WIDTH = 4.0
_IS_DEFENSIVE = 0.1

_OFFSETS = np.array([0.0, 1.0, -1.0, 0.0, 0.0])


@dataclass(frozen=True)
class NoiseModel:
    """Stationary Gaussian noise with spectrum ``A**2 omega**(-2 alpha)``."""

    alpha: float = 0.0
    A: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")
        if not self.A > 0:
            raise ConfigurationError(f"noise amplitude must be > 0, got {self.A}")

    @classmethod
    def white(cls, sigma_eps: float = 1.0) -> "NoiseModel":
        return cls(0.0, float(sigma_eps))

    @property
    def sigma_eps(self) -> float:
        """White-noise standard deviation; equals ``A`` and is defined only for alpha = 0."""
        if self.alpha != 0:
            raise ConfigurationError("sigma_eps is defined only for white noise (alpha = 0)")
        return self.A


@dataclass
class RateTable:
    """Per-scale distribution of noise-only maxima, normalized per footprint.

    ``density`` has one entry per histogram bin plus a final overflow entry
    for magnitudes beyond the last edge, so ``density.sum() == survival[0]``.
    ``survival[k]`` is the expected count per footprint of maxima with
    normalized magnitude above ``bin_edges[k]``.
    """

    scale_index: int
    bin_edges: np.ndarray
    density: np.ndarray
    survival: np.ndarray
    n_samples: int
    seed: int
    scale: float = float("nan")
    footprint: float = float("nan")
    survival_se: np.ndarray | None = None
    mean_magnitude: float = float("nan")
    n_maxima: float = float("nan")
    method: str = "direct"

    @property
    def total_rate(self) -> float:
        return float(self.survival[0])

    def to_dict(self) -> dict:
        d = {
            "scale_index": int(self.scale_index),
            "bins": self.bin_edges.tolist(),
            "density": self.density.tolist(),
            "survival": self.survival.tolist(),
            "n_samples": int(self.n_samples),
            "seed": int(self.seed),
            "scale": self.scale,
            "footprint": self.footprint,
            "mean_magnitude": self.mean_magnitude,
            "n_maxima": self.n_maxima,
            "method": self.method,
        }
        if self.survival_se is not None:
            d["survival_se"] = self.survival_se.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RateTable":
        se = d.get("survival_se")
        return cls(int(d["scale_index"]), np.asarray(d["bins"], float),
                   np.asarray(d["density"], float), np.asarray(d["survival"], float),
                   int(d["n_samples"]), int(d["seed"]), float(d.get("scale", "nan")),
                   float(d.get("footprint", "nan")),
                   None if se is None else np.asarray(se, float),
                   float(d.get("mean_magnitude", "nan")), float(d.get("n_maxima", "nan")),
                   d.get("method", "direct"))


def _check_integrable(model: NoiseModel, wavelet: WaveletSpec) -> None:
    if not wavelet.beta > model.alpha - 0.5:
        raise ConfigurationError(
            f"need beta > alpha - 1/2 for a finite wavelet spectrum "
            f"(beta={wavelet.beta}, alpha={model.alpha})")


def wavelet_spectrum(model: NoiseModel, wavelet: WaveletSpec, s):
    """Expected squared modulus of the noise transform at scale ``s``."""
    _check_integrable(model, wavelet)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("scales must be positive")
    out = model.A**2 * f_noise(model.alpha, wavelet) * s ** (2 * model.alpha - 1)
    return float(out) if out.ndim == 0 else out


def xi_covariance(model: NoiseModel, wavelet: WaveletSpec, u, s, r):
    """Covariance ``E{w(tau, s) w*(tau + u, r s)}`` of the noise transform."""
    _check_integrable(model, wavelet)
    u, s, r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (u, s, r)))
    if np.any(s <= 0) or np.any(r <= 0):
        raise ValueError("s and r must be positive")
    b, g, al = wavelet.beta, wavelet.gamma, model.alpha
    order = 2 * b - 2 * al
    inner = WaveletSpec(order, g)
    rg = (1 + r**g) ** (1 / g)
    log_coef = (2 * math.log(wavelet.a) - math.log(inner.a) + b * np.log(r)
                - (order + 1) * np.log(rg))
    sig2 = wavelet_spectrum(model, wavelet, s) / f_noise(al, wavelet)
    psi = np.conj(time_wavelet(inner, u / (s * rg)))
    out = sig2 * np.exp(log_coef) * psi
    return complex(out) if out.ndim == 0 else out


def sigma_matrix(model: NoiseModel, wavelet: WaveletSpec, s: float, r: float) -> np.ndarray:
    """Normalized covariance of the transform at a point and its four neighbours.

    Vector order: ``(tau, s), (tau+1, s), (tau-1, s), (tau, r s), (tau, s/r)``.
    Entry ``[i, j]`` is ``E{x_i x_j^*} / sigma^2(s)``.  Small negative
    eigenvalues from rounding are clipped to zero.
    """
    scales = s * np.array([1.0, 1.0, 1.0, r, 1.0 / r])
    i, j = np.meshgrid(np.arange(5), np.arange(5), indexing="ij")
    u = _OFFSETS[j] - _OFFSETS[i]
    S = xi_covariance(model, wavelet, u, scales[i], scales[j] / scales[i])
    S = S / wavelet_spectrum(model, wavelet, s)
    S = 0.5 * (S + S.conj().T)
    lam, V = np.linalg.eigh(S)
    if lam.min() < _PSD_FLOOR * max(1.0, lam.max()):
        raise NumericalError(
            f"covariance matrix not positive semidefinite (min eigenvalue {lam.min():.3g}) "
            f"at s={s}, r={r}, alpha={model.alpha}, beta={wavelet.beta}, gamma={wavelet.gamma}")
    if lam.min() < 0:
        S = (V * np.clip(lam, 0, None)) @ V.conj().T
        S = 0.5 * (S + S.conj().T)
    return S


def _cholesky(S: np.ndarray) -> np.ndarray:
    scale = float(np.real(np.trace(S))) / S.shape[0]
    for jitter in (0.0, 1e-14, 1e-12, 1e-10):
        try:
            return np.linalg.cholesky(S + jitter * scale * np.eye(S.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise NumericalError("Cholesky factorization failed after eigenvalue clipping")


def _sqrt_psd(S: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(0.5 * (S + S.conj().T))
    return V * np.sqrt(np.clip(lam, 0, None))


def _circular(rng: np.random.Generator, shape) -> np.ndarray:
    # real and imaginary parts N(0, 1/2) so that E|eps|^2 = 1
    z = rng.standard_normal(shape + (2,)) * math.sqrt(0.5)
    return z[..., 0] + 1j * z[..., 1]


def _direct_table(S, L_fp, n, rng, edges, seed, index, scale):
    """Histogram of |y1| over draws where y1 is the strict modulus maximum."""
    chol = _cholesky(S)
    counts = np.zeros(edges.size, dtype=np.int64)  # bins plus overflow
    total = 0
    mag_sum = 0.0
    done = 0
    while done < n:
        m = min(_DRAW_CHUNK, n - done)
        y = np.abs(_circular(rng, (m, 5)) @ chol.T)
        is_max = np.all(y[:, :1] > y[:, 1:], axis=1)
        w = y[is_max, 0]
        total += w.size
        mag_sum += float(w.sum())
        idx = np.searchsorted(edges, w, side="right") - 1
        counts += np.bincount(np.minimum(idx, edges.size - 1), minlength=edges.size)
        done += m
    density = counts * (L_fp / n)
    survival = np.cumsum(density[::-1])[::-1]
    # Poisson standard error of the count above each edge
    above = np.cumsum(counts[::-1])[::-1]
    se = np.sqrt(above) * (L_fp / n)
    mean = mag_sum / total if total else float("nan")
    return RateTable(index, edges, density, survival, n, seed, scale, L_fp, se, mean,
                     float(total), "direct")


def _intervals(c: np.ndarray, e: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Range ``lo < w < hi`` on which ``|c w + e| < w``, per draw and neighbour.

    The condition is ``a w^2 - 2 b w - |e|^2 > 0`` with ``a = 1 - |c|^2`` and
    ``b = Re(conj(c) e)``.  For ``|c| < 1`` it holds above the positive root;
    for ``|c| > 1`` (a neighbour with larger variance) it holds between two
    positive roots, or nowhere.
    """
    a = 1.0 - np.abs(c) ** 2
    b = np.real(np.conj(c) * e)
    e2 = np.abs(e) ** 2
    disc = b * b + a * e2
    q = np.sqrt(np.clip(disc, 0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        # algebraically equal root forms, chosen to avoid cancellation
        up_pos = np.where(b >= 0, (b + q) / a, e2 / (q - b))
        big = (np.abs(b) + q) / np.abs(a)
        small = e2 / (np.abs(b) + q)
    opening = a > 0
    lo = np.where(opening, up_pos, small)
    hi = np.where(opening, np.inf, big)
    empty = ~opening & ((disc <= 0) | (b >= 0))
    lo = np.where(empty, np.inf, lo)
    hi = np.where(empty, -np.inf, hi)
    return np.nan_to_num(lo, nan=np.inf), np.nan_to_num(hi, nan=-np.inf)


def _tail_first_moment(x: np.ndarray) -> np.ndarray:
    # integral from x to infinity of v * 2 v exp(-v^2) dv
    with np.errstate(over="ignore", invalid="ignore"):
        out = x * np.exp(-x * x) + 0.5 * math.sqrt(math.pi) * erfc(x)
    return np.where(np.isinf(x), 0.0, out)


def _derivative_direction(c: np.ndarray, root: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Real direction of the time-derivative component of the residuals.

    With ``b_k = Re(conj(c_k) e_k)`` for the two time neighbours, the
    antisymmetric part ``(b_+ - b_-) / 2`` acts like a time derivative and
    the symmetric part like a curvature.  Returns the coefficient vector of
    the derivative part in terms of the 8 real standard normals behind the
    residuals, its standard deviation, and that of the curvature part.
    """
    def coeffs(sign):
        g = np.zeros(4, dtype=complex)
        g[0], g[1] = c[0] / 2, sign * c[1] / 2
        a = root.conj().T @ g
        return np.concatenate([a.real, a.imag]) / math.sqrt(2)

    v = coeffs(-1.0)
    return v, float(np.linalg.norm(v)), float(np.linalg.norm(coeffs(1.0)))


def _conditional_table(S, L_fp, n, rng, edges, seed, index, scale):
    """Rate table from the conditional (Rao-Blackwellized) estimator.

    Given ``y1 = w`` the draw is a maximum when ``w`` lies in ``[lo, hi]``, so
    each draw contributes ``exp(-max(x, lo)^2) - exp(-hi^2)`` to the
    per-point survival at ``x``; averaging over draws gives the estimate.

    At large scales the two time neighbours are almost copies of the centre
    and a point is a maximum only when the derivative-like part of their
    residuals is small compared with the curvature-like part.  That part is
    drawn from a defensive mixture concentrated on the curvature spread and
    each draw is reweighted by the density ratio, which keeps the weights
    below ``1 / _IS_DEFENSIVE``.
    """
    c = S[1:, 0] / S[0, 0].real
    R = S[1:, 1:] - np.outer(S[1:, 0], S[0, 1:]) / S[0, 0].real
    root = _sqrt_psd(R)
    v, sd_d, sd_h = _derivative_direction(c, root)
    tau = min(sd_d, _IS_WIDTH * sd_h)
    use_is = tau < sd_d and sd_d > 0
    acc = np.zeros(edges.size)
    acc2 = np.zeros(edges.size)
    moment = 0.0
    done = 0
    while done < n:
        m = min(_DRAW_CHUNK // 8, n - done)
        xi = rng.standard_normal((m, 8))
        if use_is:
            narrow = rng.random(m) >= _IS_DEFENSIVE
            d = rng.standard_normal(m) * np.where(narrow, tau, sd_d)
            xi += ((d - xi @ v) / sd_d**2)[:, None] * v[None, :]
            # target density over the mixture density, constants cancel
            q = ((1 - _IS_DEFENSIVE) / tau * np.exp(-0.5 * (d / tau) ** 2)
                 + _IS_DEFENSIVE / sd_d * np.exp(-0.5 * (d / sd_d) ** 2))
            wt = np.exp(-0.5 * (d / sd_d) ** 2) / sd_d / q
        else:
            wt = np.ones(m)
        z = (xi[:, :4] + 1j * xi[:, 4:]) * math.sqrt(0.5)
        e = z @ root.T
        lo, hi = _intervals(c[None, :], e)
        lo, hi = lo.max(axis=1), hi.min(axis=1)
        ok = lo < hi
        lo, hi, wt = lo[ok], hi[ok], wt[ok]
        start = np.maximum(edges[None, :], lo[:, None])
        with np.errstate(over="ignore"):
            contrib = np.where(start < hi[:, None],
                               np.exp(-start**2) - np.exp(-hi[:, None] ** 2), 0.0)
        contrib *= wt[:, None]
        acc += contrib.sum(axis=0)
        acc2 += (contrib**2).sum(axis=0)
        moment += float(np.sum(wt * (_tail_first_moment(lo) - _tail_first_moment(hi))))
        done += m
    per_point = acc / n
    se_point = np.sqrt(np.clip(acc2 / n - per_point**2, 0, None) / n)
    survival = per_point * L_fp
    density = np.append(-np.diff(survival), survival[-1])
    total = per_point[0]
    mean = moment / n / total if total > 0 else float("nan")
    return RateTable(index, edges, density, survival, n, seed, scale, L_fp, se_point * L_fp,
                     mean, float("nan"), "conditional")


def _scale_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(index)])


def simulate_maxima(model: NoiseModel, wavelet: WaveletSpec, grid: FrequencyGrid,
                    n_realizations: int, seed: int, *, method: str = "direct",
                    n_bins: int = 100, w_max: float = 3.0, scale_indices=None,
                    threads: int = 1) -> list[RateTable]:
    """Simulate noise-only maxima statistics at each interior grid scale.

    Parameters
    ----------
    n_realizations : int
        Number of simulated 5-vectors per scale.
    seed : int
        Master seed; scale ``j`` draws from ``SeedSequence([seed, j])`` so
        results do not depend on which scales are simulated or in what order.
    method : {"direct", "conditional"}
    n_bins, w_max : histogram of ``n_bins`` bins on ``[0, w_max]`` plus overflow.
    scale_indices : iterable of int, optional
        Defaults to every scale except the first and the last.
    threads : int
        Worker threads; 0 uses one per CPU.
    """
    if method not in ("direct", "conditional"):
        raise ConfigurationError(f"unknown simulation method {method!r}")
    n_realizations = int(n_realizations)
    if n_realizations < 1:
        raise ConfigurationError("n_realizations must be positive")
    _check_integrable(model, wavelet)
    J = len(grid)
    if scale_indices is None:
        scale_indices = range(1, J - 1) if J >= 3 else range(J)
    scale_indices = list(scale_indices)
    edges = np.linspace(0.0, w_max, n_bins + 1)
    scales = grid.scales(wavelet)
    ratio = grid.r if np.isfinite(grid.r) else float(grid.omegas[0] / grid.omegas[1])
    build = _direct_table if method == "direct" else _conditional_table

    def one(j):
        s = float(scales[j])
        S = sigma_matrix(model, wavelet, s, ratio)
        rng = np.random.default_rng(_scale_seed(seed, j))
        return build(S, float(footprint(wavelet, s)), n_realizations, rng, edges, seed, j, s)

    if threads == 1 or len(scale_indices) <= 1:
        return [one(j) for j in scale_indices]
    import os
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, scale_indices))


def _noise_segment(model: NoiseModel, length: int, rng: np.random.Generator):
    """One noise segment and the spectral amplitude that describes it."""
    white = rng.standard_normal(length)
    if model.alpha == 0:
        return model.A * white, model.A
    if model.alpha == 1:
        walk = np.cumsum(white)
        sd = walk.std()
        return (walk - walk.mean()) / sd, 1.0 / sd
    raise ConfigurationError("direct noise generation supports alpha = 0 or alpha = 1 only")


def direct_maxima_oracle(model: NoiseModel, wavelet: WaveletSpec, band_count: int,
                         length: int, seed: int, *, grid: FrequencyGrid | None = None,
                         first_band: int = 0, segment: int = 1 << 20,
                         n_bins: int = 100, w_max: float = 3.0) -> RateTable:
    """Maxima statistics from explicitly transforming a long noise series.

    The series is generated in independent segments of ``segment`` samples,
    each transformed at ``band_count`` consecutive grid scales starting at
    ``first_band``.  Maxima are sought in the middle band at points more than
    half a footprint from the segment ends, and their moduli are normalized
    by the predicted noise level ``sigma(s)``.
    """
    if band_count < 3:
        raise ConfigurationError("band_count must be at least 3")
    if grid is None:
        grid = build_grid(wavelet, 12000, eta=0.05, D=4.0, p=3.0)
    bands = np.arange(first_band, first_band + band_count)
    if bands[-1] >= len(grid):
        raise ConfigurationError("requested bands exceed the grid")
    mid = band_count // 2
    omegas = grid.omegas[bands]
    s = float(grid.scales(wavelet)[bands[mid]])
    L_fp = float(footprint(wavelet, s))
    margin = int(math.ceil(footprint(wavelet, grid.scales(wavelet)[bands[-1]]) / 2)) + 1
    edges = np.linspace(0.0, w_max, n_bins + 1)
    counts = np.zeros(edges.size, dtype=np.int64)
    mag_sum = 0.0
    n_points = 0
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xD1]))
    remaining = int(length)
    while remaining > 0:
        m = min(segment, remaining)
        remaining -= m
        if m <= 2 * margin + 2:
            break
        x, amp = _noise_segment(model, m, rng)
        sigma = math.sqrt(wavelet_spectrum(NoiseModel(model.alpha, amp), wavelet, s))
        w = np.abs(_transform_columns(x, wavelet, omegas))
        c = w[margin:m - margin, mid]
        is_max = ((c > w[margin - 1:m - margin - 1, mid]) & (c > w[margin + 1:m - margin + 1, mid])
                  & (c > w[margin:m - margin, mid - 1]) & (c > w[margin:m - margin, mid + 1]))
        n_points += c.size
        if not np.any(w):
            continue
        vals = c[is_max] / sigma
        mag_sum += float(vals.sum())
        idx = np.searchsorted(edges, vals, side="right") - 1
        counts += np.bincount(np.minimum(idx, edges.size - 1), minlength=edges.size)
    n_points = max(n_points, 1)
    density = counts * (L_fp / n_points)
    survival = np.cumsum(density[::-1])[::-1]
    se = np.sqrt(np.cumsum(counts[::-1])[::-1]) * (L_fp / n_points)
    total = int(counts.sum())
    mean = mag_sum / total if total else float("nan")
    return RateTable(int(bands[mid]), edges, density, survival, n_points, int(seed), s, L_fp,
                     se, mean, float(total), "transform")


def survival_at(table: RateTable, w) -> np.ndarray:
    """Per-footprint survival at magnitudes ``w`` by linear interpolation."""
    return np.interp(w, table.bin_edges, table.survival[:table.bin_edges.size])


def _invert(table: RateTable, target: float) -> float:
    edges, surv = table.bin_edges, table.survival[:table.bin_edges.size]
    if target >= surv[0]:
        return 0.0
    # one simulated maximum is the finest step a counting table can resolve
    floor = table.footprint / table.n_samples if table.method != "conditional" else 0.0
    if target < surv[-1] or target < floor:
        raise MonteCarloFloorError(
            f"rate {target:.3g} per footprint at scale index {table.scale_index} is below what "
            f"this table resolves (last edge {edges[-1]:.3g}, survival there {surv[-1]:.3g}); "
            f"increase n_realizations, widen the histogram range, or use the conditional method")
    k = int(np.flatnonzero(surv <= target)[0])
    lo, hi = surv[k - 1], surv[k]
    frac = 0.0 if lo == hi else (lo - target) / (lo - hi)
    return float(edges[k - 1] + frac * (edges[k] - edges[k - 1]))


def threshold_for_rate(tables: list[RateTable], rate: float, M: int | None = None,
                       n_scales: int | None = None) -> np.ndarray:
    """Per-scale cutoffs in normalized magnitude for a false-detection rate.

    Parameters
    ----------
    tables : list of RateTable
        One table per simulated scale, identified by ``scale_index``.
    rate : float
        Expected false detections per scale.  With ``M`` given this is per
        series of length ``M`` (so 1/1000 means one per thousand series);
        without it the rate is per footprint.
    n_scales : int, optional
        Grid size.  Scales without a table copy the cutoff of the nearest
        simulated scale.
    """
    if not rate > 0:
        raise ConfigurationError("rate must be positive")
    if not tables:
        raise ConfigurationError("no rate tables given")
    by_index = {t.scale_index: t for t in tables}
    known = np.array(sorted(by_index))
    J = int(n_scales) if n_scales is not None else int(known.max()) + 1
    cut = {}
    for j, t in by_index.items():
        target = rate if M is None else rate * t.footprint / M
        cut[j] = _invert(t, target)
    out = np.empty(J)
    for j in range(J):
        nearest = known[np.argmin(np.abs(known - j))]
        out[j] = cut[int(nearest)]
    return out


def estimate_sigma_eps(plane) -> float:
    """White-noise standard deviation from the highest-frequency band.

    Inverts ``sigma^2 = sigma_eps^2 f s^-1`` using the mean squared modulus
    over points of the first scale that are not edge-contaminated.
    """
    return estimate_amplitude(plane, 0.0)


def estimate_amplitude(plane, alpha: float = 0.0, band: int = 0) -> float:
    """Spectral amplitude ``A`` from the mean squared modulus of one band."""
    keep = ~plane.edge_mask[:, band]
    if not keep.any():
        raise ValueError("no usable (non-edge) samples in the highest-frequency band")
    power = float(np.mean(np.abs(plane.values[keep, band]) ** 2))
    s = float(plane.scales[band])
    return math.sqrt(power / wavelet_spectrum(NoiseModel(alpha, 1.0), plane.wavelet, s))


# --------------------------------------------------------------------------- cache


def cache_key(model: NoiseModel, wavelet: WaveletSpec, grid: FrequencyGrid, n: int, seed: int,
              method: str = "direct", n_bins: int = 100, w_max: float = 3.0) -> dict:
    return {"alpha": float(model.alpha), "beta": wavelet.beta, "gamma": wavelet.gamma,
            "r": float(grid.r), "grid_hash": grid.digest(), "n": int(n), "seed": int(seed),
            "method": method, "n_bins": int(n_bins), "w_max": float(w_max)}


def save_tables(path, key: dict, tables: list[RateTable]) -> None:
    doc = {"schema": SCHEMA, "key": key, "tables": [t.to_dict() for t in tables]}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_tables(path, key: dict | None = None) -> list[RateTable]:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"{path}: unsupported schema {doc.get('schema')!r}")
    if key is not None and doc.get("key") != key:
        raise ValueError(f"{path}: cache key mismatch, refusing to reuse")
    return [RateTable.from_dict(t) for t in doc["tables"]]


@dataclass
class RateTableCache:
    """Directory of rate-table files addressed by a hash of their key."""

    directory: Path
    hits: int = field(default=0, init=False)
    misses: int = field(default=0, init=False)

    def __post_init__(self):
        self.directory = Path(self.directory)

    def path_for(self, key: dict) -> Path:
        h = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:20]
        return self.directory / f"ratetable-{h}.json"

    def get_or_compute(self, key: dict, compute) -> list[RateTable]:
        path = self.path_for(key)
        if path.exists():
            self.hits += 1
            return load_tables(path, key)
        self.misses += 1
        tables = compute()
        self.directory.mkdir(parents=True, exist_ok=True)
        save_tables(path, key, tables)
        return tables
