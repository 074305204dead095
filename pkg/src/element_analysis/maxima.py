"""Transform maxima: detection on the grid, refinement in scale, data-quality flags."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cwt import TransformPlane
from .morse import footprint

__all__ = ["MaximumPoint", "find_maxima", "refine", "missing_fraction", "apply_missing_rule",
           "canonical_order"]


@dataclass
class MaximumPoint:
    """A transform maximum, refined in scale.

    Attributes
    ----------
    t_index : int
        Sample index of the maximum (not refined in time).
    scale_index : int
        Grid column the maximum was found in.
    omega_s : float
        Interpolated scale frequency, rad/sample.
    w_value : complex
        Interpolated transform value; its phase is that of the grid point.
    magnitude : float
        ``abs(w_value)``.
    norm_magnitude : float
        Magnitude divided by the noise level at ``omega_s``; ``nan`` until
        normalized.
    missing_fraction : float
        Share of the footprint window that is interpolated or out of range.
    edge, significant, isolated : bool
        Filter flags.  ``significant`` and ``isolated`` start true and are
        cleared by the filters, with the reason appended to ``reasons``.
    """

    t_index: int
    scale_index: int
    omega_s: float
    w_value: complex
    magnitude: float
    norm_magnitude: float = float("nan")
    missing_fraction: float = 0.0
    edge: bool = False
    significant: bool = True
    isolated: bool = True
    reasons: list[str] = field(default_factory=list)

    def reject(self, flag: str, reason: str) -> None:
        setattr(self, flag, False)
        if reason not in self.reasons:
            self.reasons.append(reason)

    @property
    def passed(self) -> bool:
        return not self.edge and self.significant and self.isolated


def refine(three_scale_moduli, three_omegas, center_value: complex) -> tuple[float, complex]:
    """Parabolic vertex of modulus versus log frequency through three scales.

    Returns the vertex frequency and the centre value rescaled to the
    vertex height.  The vertex is kept within the span of the three
    frequencies; a flat or convex triple returns the centre unchanged.
    """
    y = np.asarray(three_scale_moduli, dtype=float)
    om = np.asarray(three_omegas, dtype=float)
    x = np.log(om) - math.log(om[1])
    x0, x1, x2 = x
    y0, y1, y2 = y
    # Newton divided differences; the parabola is y1 + b (x - x1) + c (x - x1)^2
    d01 = (y1 - y0) / (x1 - x0)
    d12 = (y2 - y1) / (x2 - x1)
    c = (d12 - d01) / (x2 - x0)
    if not c < 0 or not np.all(np.isfinite(y)):
        return float(om[1]), complex(center_value)
    b = d01 + c * (x1 - x0)
    xv = x1 - b / (2 * c)
    xv = float(np.clip(xv, min(x0, x2), max(x0, x2)))
    height = y1 + b * (xv - x1) + c * (xv - x1) ** 2
    value = complex(center_value)
    mag = abs(value)
    scaled = value * (height / mag) if mag > 0 else complex(height)
    return float(om[1] * math.exp(xv)), scaled


def missing_fraction(t_index: float, L: float, missing_mask: np.ndarray) -> float:
    """Share of a footprint-wide window that is missing or beyond the series."""
    M = missing_mask.size
    lo = int(math.ceil(t_index - L / 2))
    hi = int(math.floor(t_index + L / 2))
    width = hi - lo + 1
    if width <= 0:
        return 0.0
    inside_lo, inside_hi = max(lo, 0), min(hi, M - 1)
    outside = width - max(0, inside_hi - inside_lo + 1)
    gaps = int(missing_mask[inside_lo:inside_hi + 1].sum()) if inside_hi >= inside_lo else 0
    return (outside + gaps) / width


def canonical_order(points: list[MaximumPoint]) -> list[MaximumPoint]:
    """Descending magnitude, then increasing time, then scale index."""
    return sorted(points, key=lambda p: (-p.magnitude, p.t_index, p.scale_index))


def find_maxima(plane: TransformPlane) -> list[MaximumPoint]:
    """Grid points whose modulus strictly exceeds all four neighbours.

    The first and last rows and columns are never candidates.  Each
    candidate is refined in scale, has its missing-data fraction computed
    over one footprint, and carries the edge flag of its grid point.
    """
    W = plane.values
    if W.shape[0] < 3 or W.shape[1] < 3:
        return []
    A = np.abs(W)
    c = A[1:-1, 1:-1]
    peak = ((c > A[:-2, 1:-1]) & (c > A[2:, 1:-1]) & (c > A[1:-1, :-2]) & (c > A[1:-1, 2:]))
    n_idx, j_idx = np.nonzero(peak)
    n_idx += 1
    j_idx += 1
    omegas = plane.grid.omegas
    missing = np.asarray(plane.missing_mask, dtype=bool)
    wp = plane.wavelet.omega_peak
    points = []
    for n, j in zip(n_idx.tolist(), j_idx.tolist()):
        om, w = refine(A[n, j - 1:j + 2], omegas[j - 1:j + 2], W[n, j])
        L = float(footprint(plane.wavelet, wp / om))
        points.append(MaximumPoint(
            t_index=n, scale_index=j, omega_s=om, w_value=w, magnitude=abs(w),
            missing_fraction=missing_fraction(n, L, missing),
            edge=bool(plane.edge_mask[n, j])))
    return canonical_order(points)


def apply_missing_rule(points: list[MaximumPoint], max_fraction: float) -> list[MaximumPoint]:
    """Clear ``significant`` on points whose footprint is too incomplete."""
    if not 0 <= max_fraction <= 1:
        raise ValueError("max_fraction must lie in [0, 1]")
    for p in points:
        if p.missing_fraction > max_fraction:
            p.reject("significant", "missing-data")
    return points
