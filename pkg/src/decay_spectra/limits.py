"""Samplers for the limiting objects: the renormalized-radius SDE, the
critical limit shape, the phase-family (Sine_beta-type) point process, and the
clock and Poisson references.

All randomness is seed-deterministic.  The radius SDE is sampled exactly in
the v = tau log t coordinate where it reads dv + dB_v.  The phase family
dTheta_t(c) = c dt + sqrt(tau) Re[(e^{2i Theta} - 1) dZ_t / sqrt(t)] shares
one complex Brownian stream across the whole lambda grid, which keeps
Theta_1(lambda) non-decreasing pathwise; points of the process are the lambda
solving Theta_1(lambda) in pi Z + U.  The split-step integrator applies the
drift, the exact flow of the rotation part, and the common shift in turn, so
every substep is monotone in theta and conditionally mean-zero: the intensity
1/pi is exact at any step size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from .errors import NumericalError
from .shape import LINEAR, LOG_RATIO, ShapeMeasure

_DEFAULT_T_MIN = 1e-4
_DEFAULT_LAMBDA_CELLS = 512
_MONOTONE_SLACK = 1e-9
_MAX_REFINEMENTS = 2
_TRUNCATION_WARN_MASS = 1e-3


@dataclass(frozen=True)
class SdePath:
    """One path of the renormalized radius on a time grid in (0, 1]."""

    times: np.ndarray
    values: np.ndarray
    tau: float
    seed: Optional[int] = None

    def __post_init__(self):
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must align")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("path values must be finite")


@dataclass(frozen=True)
class ThetaFamily:
    """Terminal phases Theta_1 over a lambda grid plus the counting level U."""

    lambda_grid: np.ndarray
    theta_at_1: np.ndarray
    uniform_u: float
    seed: Optional[int] = None

    def __post_init__(self):
        if self.lambda_grid.shape != self.theta_at_1.shape:
            raise ValueError("lambda grid and phases must align")
        if np.any(np.diff(self.theta_at_1) < 0):
            raise ValueError("terminal phases must be non-decreasing")
        if not 0 <= self.uniform_u < math.pi:
            raise ValueError("counting level must lie in [0, pi)")


def simulate_rtilde(tau: float, t_grid, seed=None) -> SdePath:
    """Exact sampling of the radius SDE on the given grid in (0, 1].

    In v = tau log t the equation is dv + dB_v, so each increment is
    Gaussian(dv, dv) independently; the path starts at v(t_0).
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise ValueError("t_grid must be a non-empty 1-d array")
    if not t[0] > 0:
        raise ValueError("the grid must start above the singular time 0")
    if t[-1] > 1.0 + 1e-12:
        raise ValueError("the grid must stay within (0, 1]")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    v = tau * np.log(t)
    dv = np.diff(v)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, np.sqrt(dv)) if dv.size else np.empty(0)
    values = np.concatenate(([v[0]], v[0] + np.cumsum(dv + noise)))
    return SdePath(times=t, values=values, tau=float(tau), seed=seed)


def _pinned_brownian(v: np.ndarray, rng) -> np.ndarray:
    """Two-sided Brownian motion pinned at the origin, evaluated on the
    increasing grid v (negative side walked outward from 0)."""
    z = np.empty_like(v)
    pos = v >= 0
    vp = v[pos]
    if vp.size:
        steps = np.diff(np.concatenate(([0.0], vp)))
        z[pos] = np.cumsum(rng.normal(0.0, np.sqrt(steps)))
    vn = v[~pos]
    if vn.size:
        steps = np.diff(np.concatenate(([0.0], -vn[::-1])))
        z[~pos] = np.cumsum(rng.normal(0.0, np.sqrt(steps)))[::-1]
    return z


def sample_limit_shape_critical(tau: float, m: int = 256,
                                variant: str = LOG_RATIO, seed=None,
                                t_min: float = _DEFAULT_T_MIN
                                ) -> Tuple[ShapeMeasure, float]:
    """One draw of the critical limit shape and its center U ~ unif(0,1).

    The density at the cell centers t is exp(2 Z_{v(t)} - 2 |v(t)|) with
    v(t) = tau log(t/U) (LOG_RATIO) or tau (t - U) (LINEAR) and Z a two-sided
    Brownian motion pinned at 0.  Warns when the mass lost below t_min is
    estimated above 1e-3 (small-tau regimes).
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if m < 32:
        raise ValueError("need at least 32 cells")
    if variant not in (LOG_RATIO, LINEAR):
        raise ValueError(f"variant must be {LOG_RATIO!r} or {LINEAR!r}")
    if not 0 < t_min < 1:
        raise ValueError("t_min must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    u = float(rng.uniform())
    while u == 0.0:  # open interval (0,1)
        u = float(rng.uniform())
    t = (np.arange(m) + 0.5) / m
    if variant == LOG_RATIO:
        v = tau * np.log(t / u)
        truncated = (t_min / u) ** (2.0 * tau)
    else:
        v = tau * (t - u)
        # density is bounded near 0 here, so the lost mass carries the
        # interval width as a factor
        truncated = tau * t_min * math.exp(-2.0 * tau * max(u - t_min, 0.0))
    if truncated > _TRUNCATION_WARN_MASS:
        warnings.warn(
            f"estimated mass {truncated:.2e} below t_min={t_min:g}; "
            "the truncated grid misrepresents this draw", RuntimeWarning)
    z = _pinned_brownian(v, rng)
    log_density = 2.0 * z - 2.0 * np.abs(v)
    density = np.exp(log_density - log_density.max())
    return ShapeMeasure(density / density.mean()), u


def default_phase_step(tau: float) -> float:
    """Log-time step keeping the total splitting error O(1e-2): the per-step
    weak error scales like tau * dv^2 over log(1/t_min)/dv steps."""
    return min(2e-3, 1e-2 / max(tau, 1.0))


def simulate_theta_family(tau: float, window, lambda_cells: int = _DEFAULT_LAMBDA_CELLS,
                          t_min: float = _DEFAULT_T_MIN, dv: Optional[float] = None,
                          seed=None) -> ThetaFamily:
    """Evolve the coupled phase family from Theta_{t_min}(lambda) = lambda t_min
    to t = 1 over a lambda grid spanning the window, with one shared complex
    Brownian stream.

    Each integrator substep is monotone in theta, so Theta_1(lambda) must come
    out non-decreasing; a violation beyond rounding slack triggers a step
    refinement (dv / 4, twice) and then a numeric-failure.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError("window must satisfy lo < hi")
    if lambda_cells < 2:
        raise ValueError("need at least two lambda cells")
    if not 0 < t_min < 1:
        raise ValueError("t_min must lie in (0, 1)")
    step = float(dv) if dv is not None else default_phase_step(tau)
    if not step > 0:
        raise ValueError("dv must be positive")
    lam = np.linspace(lo, hi, lambda_cells + 1)
    span = hi - lo
    for _ in range(_MAX_REFINEMENTS + 1):
        # fresh generator per attempt: U stays fixed, noise is redrawn on the
        # finer grid
        rng = np.random.default_rng(seed)
        u = float(rng.uniform(0.0, math.pi))
        n_steps = max(1, math.ceil(math.log(1.0 / t_min) / step))
        t_grid = t_min * np.exp(np.linspace(0.0, math.log(1.0 / t_min), n_steps + 1))
        t_grid[-1] = 1.0
        dt = np.diff(t_grid)
        db1 = rng.normal(0.0, np.sqrt(dt))
        db2 = rng.normal(0.0, np.sqrt(dt))
        theta = lam * t_min
        _kernels.phase_family_steps(theta, lam, float(tau), t_grid, db1, db2)
        drops = np.diff(theta)
        if not np.all(np.isfinite(theta)) or np.any(drops < -_MONOTONE_SLACK * (1.0 + span)):
            step /= 4.0
            continue
        theta = np.maximum.accumulate(theta)  # absorb rounding-level ties
        return ThetaFamily(lambda_grid=lam, theta_at_1=theta, uniform_u=u,
                           seed=seed)
    raise NumericalError("phase family stayed non-monotone after refinement")


def sample_sine_beta(tau: float, window, t_min: float = _DEFAULT_T_MIN,
                     lambda_cells: int = _DEFAULT_LAMBDA_CELLS,
                     seed=None, dv: Optional[float] = None) -> np.ndarray:
    """Points lambda in the window with Theta_1(lambda) in pi Z + U, located by
    monotone interpolation of the terminal phases; intensity is exactly 1/pi.
    """
    fam = simulate_theta_family(tau, window, lambda_cells=lambda_cells,
                                t_min=t_min, dv=dv, seed=seed)
    th = fam.theta_at_1
    k_lo = math.ceil((th[0] - fam.uniform_u) / math.pi)
    k_hi = math.floor((th[-1] - fam.uniform_u) / math.pi)
    if k_hi < k_lo:
        return np.empty(0)
    levels = math.pi * np.arange(k_lo, k_hi + 1) + fam.uniform_u
    return np.interp(levels, th, fam.lambda_grid)


def sample_clock(window, theta: Optional[float] = None, seed=None) -> np.ndarray:
    """The lattice pi Z + theta inside the window (endpoints included);
    theta ~ unif[0, pi) from the seed when not given."""
    lo, hi = float(window[0]), float(window[1])
    if not lo <= hi:
        raise ValueError("window must satisfy lo <= hi")
    if theta is None:
        theta = float(np.random.default_rng(seed).uniform(0.0, math.pi))
    if not 0 <= theta < math.pi:
        raise ValueError("theta must lie in [0, pi)")
    k_lo = math.ceil((lo - theta) / math.pi)
    k_hi = math.floor((hi - theta) / math.pi)
    if k_hi < k_lo:
        return np.empty(0)
    return math.pi * np.arange(k_lo, k_hi + 1) + theta


def sample_poisson_process(window, seed=None) -> np.ndarray:
    """Poisson points of intensity 1/pi on the window, sorted."""
    lo, hi = float(window[0]), float(window[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValueError("window must be finite with lo <= hi")
    rng = np.random.default_rng(seed)
    count = int(rng.poisson((hi - lo) / math.pi))
    return np.sort(rng.uniform(lo, hi, count))
