"""Local point processes around a reference energy and their statistics.

Finite-box eigenvalues E_j are rescaled to lambda_j = n (sqrt(E_j) - sqrt(E0))
+ theta, optionally decorated with shape measures, and filtered to a window.
The additive shift theta is uniform on [0, pi) in the fast-decay regime and 0
otherwise.  Gap and subwindow-count statistics separate the three regimes:
rigid pi-lattice gaps, intermediate repulsion, and Poisson gaps of mean pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .shape import ShapeMeasure


@dataclass(frozen=True)
class DecoratedPointProcess:
    """Sorted rescaled points in a window, each optionally carrying a shape."""

    points: np.ndarray
    marks: Optional[Tuple[ShapeMeasure, ...]]
    window: Tuple[float, float]
    theta_shift: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        lo, hi = float(self.window[0]), float(self.window[1])
        if not lo < hi:
            raise ValueError("window must satisfy lo < hi")
        if pts.size and (np.any(np.diff(pts) <= 0) or pts[0] < lo or pts[-1] >= hi):
            raise ValueError("points must be strictly increasing inside the window")
        if self.marks is not None and len(self.marks) != pts.size:
            raise ValueError("marks must align with points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "window", (lo, hi))

    @property
    def size(self) -> int:
        return self.points.size


def energy_preimage(e0: float, n: float, window, theta: float = 0.0):
    """Energy interval [lo, hi) mapped onto the window by
    lambda = n (sqrt(E) - sqrt(e0)) + theta; lower end clamped at zero."""
    if not e0 > 0:
        raise ValueError("reference energy must be positive")
    if not n > 0:
        raise ValueError("system size must be positive")
    a, b = float(window[0]), float(window[1])
    if not a < b:
        raise ValueError("window must satisfy lo < hi")
    lo = max((a - theta) / n + math.sqrt(e0), 0.0)
    hi = max((b - theta) / n + math.sqrt(e0), 0.0)
    return lo * lo, hi * hi


def local_process(op_results, e0: float, n: float, window, alpha: float,
                  seed=None) -> DecoratedPointProcess:
    """Rescale (eigenvalues, marks) around e0 and keep the window [lo, hi).

    The caller must supply eigenvalues covering the window's energy preimage;
    alpha > 1/2 draws theta uniformly on [0, pi) from the seed, slower decay
    pins theta = 0.
    """
    eigenvalues, marks = op_results
    if not e0 > 0:
        raise ValueError("reference energy must be positive")
    if not n > 0:
        raise ValueError("system size must be positive")
    energies = np.asarray(eigenvalues, dtype=float)
    if np.any(energies < 0):
        raise ValueError("eigenvalues must be non-negative")
    if marks is not None and len(marks) != energies.size:
        raise ValueError("marks must align with eigenvalues")
    if alpha > 0.5:
        theta = float(np.random.default_rng(seed).uniform(0.0, math.pi))
    else:
        theta = 0.0
    lam = n * (np.sqrt(energies) - math.sqrt(e0)) + theta
    lo, hi = float(window[0]), float(window[1])
    keep = (lam >= lo) & (lam < hi)
    order = np.argsort(lam[keep], kind="stable")
    kept_marks = None
    if marks is not None:
        kept = [m for m, k in zip(marks, keep) if k]
        kept_marks = tuple(kept[i] for i in order)
    return DecoratedPointProcess(points=lam[keep][order], marks=kept_marks,
                                 window=(lo, hi), theta_shift=theta)


@dataclass(frozen=True)
class GapStatistics:
    """Consecutive-gap summary: mean, population sd, and the sorted gaps
    (the empirical gap distribution)."""

    mean: float
    sd: float
    gaps: np.ndarray


def gap_statistics(points) -> GapStatistics:
    pts = np.asarray(points, dtype=float)
    if pts.size < 2:
        raise ValueError("gap statistics need at least two points")
    gaps = np.sort(np.diff(pts))
    return GapStatistics(mean=float(gaps.mean()), sd=float(gaps.std()), gaps=gaps)


def counting_statistics(points, subwindow_length: float, num_subwindows: int,
                        origin: Optional[float] = None):
    """Counts over disjoint consecutive subwindows tiled from the origin
    (default: the first point).  Returns (mean, variance, dispersion) with the
    unbiased variance; dispersion = variance / mean is the Poisson diagnostic.

    With the default data-anchored origin the points must span the full
    tiling; an explicit origin asserts the caller's window covers it, and only
    the all-empty degenerate case is rejected.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ValueError("counting statistics need points")
    if not subwindow_length > 0:
        raise ValueError("subwindow_length must be positive")
    if num_subwindows < 2:
        raise ValueError("need at least two subwindows")
    start = float(pts[0]) if origin is None else float(origin)
    end = start + subwindow_length * num_subwindows
    if origin is None and end > pts[-1] + 1e-12 * max(1.0, abs(pts[-1])):
        raise ValueError("points do not cover the requested subwindows")
    edges = start + subwindow_length * np.arange(num_subwindows + 1)
    counts = np.diff(np.searchsorted(pts, edges, side="left"))
    mean = float(counts.mean())
    if mean == 0:
        raise ValueError("all subwindows are empty")
    var = float(counts.var(ddof=1))
    return mean, var, var / mean


def two_sample_ks(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be non-empty")
    return float(stats.ks_2samp(a, b).statistic)
