"""Eigenvector shape measures on the unit interval and their geometry.

A shape measure is a piecewise-constant probability density on (0, 1) with m
equal cells.  Two constructors produce one: from an eigenpair via the
oscillation-free combination |psi(nt)|^2 + (1/E) |psi'(nt)|^2, and from a
log-radius trace via e^{2r}.  The geometry helpers (distance to uniform,
localization center, window mass, tail slope) are what the regime
classification reads off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .operators import EigenPair

LOG_RATIO = "log_ratio"
LINEAR = "linear"

_MEAN_TOL = 1e-10
_SMOOTH_WINDOW = 5
_MIN_FIT_CELLS = 10


@dataclass(frozen=True)
class ShapeMeasure:
    """Probability measure on (0,1) stored as a mean-one density over m cells."""

    density: np.ndarray

    def __post_init__(self):
        dens = np.asarray(self.density, dtype=float)
        if dens.ndim != 1 or dens.size < 1:
            raise ValueError("density must be a non-empty 1-d array")
        if np.any(dens < 0) or not np.all(np.isfinite(dens)):
            raise ValueError("density must be finite and non-negative")
        if abs(dens.mean() - 1.0) > _MEAN_TOL:
            raise ValueError("density must average to one (unit total mass)")
        object.__setattr__(self, "density", dens)

    @property
    def cells(self) -> int:
        return self.density.size

    def cell_centers(self) -> np.ndarray:
        m = self.density.size
        return (np.arange(m) + 0.5) / m

    def cdf(self) -> np.ndarray:
        """Cumulative mass at the right edge of each cell; last entry is 1."""
        return np.cumsum(self.density) / self.density.size

    @classmethod
    def uniform(cls, m: int) -> "ShapeMeasure":
        if m < 1:
            raise ValueError("cell count must be positive")
        return cls(np.ones(m))


def _cell_average(weights: np.ndarray, m: int) -> np.ndarray:
    # weights live on the uniform interior grid i/M, i = 1..K, M = K + 1;
    # m <= K guarantees every cell receives at least one point
    k = weights.size
    cells = (np.arange(1, k + 1) * m) // (k + 1)
    counts = np.bincount(cells, minlength=m).astype(float)
    sums = np.bincount(cells, weights=weights, minlength=m)
    return sums / counts


def shape_from_eigenpair(pair: EigenPair, energy: float, n: float,
                         m: int) -> ShapeMeasure:
    """Shape of an eigenvector: density proportional to
    |psi(nt)|^2 + (1/E) |psi'(nt)|^2, cell-averaged onto m cells.

    psi' uses centered differences with the Dirichlet ghost zeros at both
    endpoints.  The derivative term removes the sin^2 oscillation, so the free
    eigenvectors come out flat.
    """
    if not energy > 0:
        raise ValueError("energy must be positive")
    psi = pair.vector
    if m < 1 or m > psi.size:
        raise ValueError("cell count must lie in [1, grid size]")
    h = n / (psi.size + 1)
    padded = np.concatenate(([0.0], psi, [0.0]))
    dpsi = (padded[2:] - padded[:-2]) / (2.0 * h)
    weights = psi * psi + dpsi * dpsi / energy
    total = weights.sum()
    if not total > 0:
        raise NumericalError("eigenvector carries no mass")
    density = _cell_average(weights, m)
    return ShapeMeasure(density / density.mean())


def shape_from_radius(rvalues, m: int) -> ShapeMeasure:
    """Shape of a log-radius trace on a uniform grid over (0,1):
    density proportional to e^{2r}, guarded against overflow by subtracting
    max(r) before exponentiating."""
    r = np.asarray(rvalues, dtype=float)
    if r.ndim != 1:
        raise ValueError("rvalues must be a 1-d array")
    if m < 1 or m > r.size:
        raise ValueError("cell count must lie in [1, sample count]")
    weights = np.exp(2.0 * (r - r.max()))
    density = _cell_average(weights, m)
    return ShapeMeasure(density / density.mean())


def localization_center(mu: ShapeMeasure) -> float:
    """Center of the cell maximizing the density smoothed over _SMOOTH_WINDOW
    cells (edge-truncated, center-weighted so a one-hot cell stays the unique
    maximum); ties go to the smallest index, so the uniform measure reports
    the first cell."""
    m = mu.cells
    w = min(_SMOOTH_WINDOW, m)
    half = w // 2
    kernel = (half + 1.0) - np.abs(np.arange(w) - half)
    smooth = (np.convolve(mu.density, kernel, mode="same")
              / np.convolve(np.ones(m), kernel, mode="same"))
    return (int(np.argmax(smooth)) + 0.5) / m


def cdf_distance(mu: ShapeMeasure, nu: ShapeMeasure) -> float:
    """sup over cell edges of |CDF_mu - CDF_nu|; a metric on a fixed grid."""
    if mu.cells != nu.cells:
        raise ValueError("measures live on different grids")
    return float(np.max(np.abs(mu.cdf() - nu.cdf())))


def concentration_mass(mu: ShapeMeasure, center: float, width: float) -> float:
    """Mass of (center - width/2, center + width/2) intersected with (0,1),
    counting boundary cells fractionally."""
    if not 0 < width < 1:
        raise ValueError("width must lie in (0, 1)")
    m = mu.cells
    lo = max(center - 0.5 * width, 0.0)
    hi = min(center + 0.5 * width, 1.0)
    if hi <= lo:
        return 0.0
    edges = np.arange(m + 1) / m
    overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo),
                      0.0, None)
    return float(np.dot(mu.density, overlap))


def tail_exponent(mu: ShapeMeasure, center: float, coordinate: str) -> float:
    """Least-squares slope of log density against distance from the center:
    |log(t/center)| in the LOG_RATIO coordinate (decaying-envelope model) or
    |t - center| in the LINEAR one (dc model).  The limiting value is -2 tau.
    """
    if not 0 < center < 1:
        raise ValueError("center must lie in (0, 1)")
    if coordinate not in (LOG_RATIO, LINEAR):
        raise ValueError(f"coordinate must be {LOG_RATIO!r} or {LINEAR!r}")
    t = mu.cell_centers()
    usable = mu.density > 0
    if int(usable.sum()) < _MIN_FIT_CELLS:
        raise ValueError("fewer than 10 cells carry mass; nothing to fit")
    if coordinate == LOG_RATIO:
        x = np.abs(np.log(t[usable] / center))
    else:
        x = np.abs(t[usable] - center)
    y = np.log(mu.density[usable])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
