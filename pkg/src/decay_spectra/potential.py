"""Random decaying potentials V(t) = a(t) F(X_t) on the half-line.

a is a deterministic envelope, either (1 + t^2)^(-alpha/2) or the constant
n^(-alpha); F is a smooth mean-zero real trigonometric polynomial on the circle
of circumference 2*pi carrying the normalized measure dx/(2*pi); X is Brownian
motion on that circle with generator L = (1/2) d^2/dx^2.  The module also
carries the spectral data of L needed downstream: the resolvent g_kappa =
(L + 2i*kappa)^(-1) F, the pairing <F g_kappa>, and the Lyapunov-type exponent
tau(E) controlling all three spectral regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy import integrate

DECAYING = "decaying"
DC = "dc"

_TWO_PI = 2.0 * math.pi


class FourierFunction:
    """Trigonometric polynomial sum_k c_k e^{ikx} with zero mean (c_0 = 0)."""

    def __init__(self, coefficients: Mapping[int, complex], real: bool = True):
        cleaned = {}
        for k, c in coefficients.items():
            if not isinstance(k, (int, np.integer)):
                raise ValueError("frequencies must be integers")
            c = complex(c)
            if int(k) == 0:
                if c != 0:
                    raise ValueError("mean coefficient c_0 must vanish")
                continue
            if c != 0:
                cleaned[int(k)] = c
        if real:
            for k, c in cleaned.items():
                mate = cleaned.get(-k, 0j)
                if abs(mate - c.conjugate()) > 1e-12 * (1.0 + abs(c)):
                    raise ValueError("real-valued function requires c_{-k} = conj(c_k)")
        self.coefficients = dict(sorted(cleaned.items()))
        self.real = bool(real)
        self.max_frequency = max((abs(k) for k in cleaned), default=0)
        self._ks = np.array(sorted(cleaned), dtype=np.int64)
        self._cs = np.array([cleaned[k] for k in sorted(cleaned)], dtype=np.complex128)

    @classmethod
    def cosine(cls) -> "FourierFunction":
        """F(x) = cos x, the default potential shape."""
        return cls({1: 0.5, -1: 0.5})

    def evaluate(self, x):
        """Pointwise values at x (scalar or array); real output when the
        coefficients are conjugate-symmetric."""
        x = np.asarray(x, dtype=float)
        if self._ks.size == 0:
            out = np.zeros(x.shape, dtype=complex)
        else:
            out = np.exp(1j * np.multiply.outer(x, self._ks.astype(float))) @ self._cs
        return out.real if self.real else out

    __call__ = evaluate

    def __repr__(self):
        return f"FourierFunction({self.coefficients!r}, real={self.real})"


@dataclass(frozen=True)
class Envelope:
    """Deterministic envelope a(t): (1+t^2)^(-alpha/2) or the constant n^(-alpha)."""

    alpha: float
    variant: str = DECAYING
    dc_scale_n: Optional[float] = None

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be a finite non-negative real")
        if self.variant not in (DECAYING, DC):
            raise ValueError(f"variant must be {DECAYING!r} or {DC!r}")
        if self.variant == DC:
            if self.dc_scale_n is None or not self.dc_scale_n > 0:
                raise ValueError("dc variant requires a positive dc_scale_n")
        elif self.dc_scale_n is not None:
            raise ValueError("dc_scale_n only applies to the dc variant")


def evaluate_envelope(env: Envelope, t):
    """a(t) for t >= 0 (scalar or array)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("envelope is defined for t >= 0")
    if env.variant == DC:
        out = np.full(t.shape, env.dc_scale_n ** (-env.alpha))
    else:
        out = (1.0 + t * t) ** (-0.5 * env.alpha)
    return out if out.shape else float(out)


def envelope_sq_integral(env: Envelope, upper: float) -> float:
    """Integral of a(s)^2 over [0, upper]; closed form where available."""
    if not upper >= 0:
        raise ValueError("upper must be non-negative")
    if env.variant == DC:
        return upper * env.dc_scale_n ** (-2.0 * env.alpha)
    if env.alpha == 0.5:
        return math.asinh(upper)
    val, _ = integrate.quad(lambda s: (1.0 + s * s) ** (-env.alpha), 0.0, upper, limit=200)
    return val


@dataclass(frozen=True)
class TorusPath:
    """Brownian motion on the circle, sampled on a uniform grid and wrapped to [0, 2*pi)."""

    step: float
    positions: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size < 1:
            raise ValueError("positions must be a non-empty 1-d array")
        if np.any(pos < 0) or np.any(pos >= _TWO_PI):
            raise ValueError("positions must be wrapped to [0, 2*pi)")
        object.__setattr__(self, "positions", pos)


def sample_torus_path(total_time: float, step: float, seed=None) -> TorusPath:
    """Sample X on the grid {0, step, ..., ceil(total_time/step)*step}, X_0 = 0.

    Increments are N(0, step) before wrapping; the path is sampled exactly at
    the grid points with no sub-stepping.
    """
    if not total_time > 0:
        raise ValueError("total_time must be positive")
    if not 0 < step <= total_time:
        raise ValueError("step must lie in (0, total_time]")
    count = math.ceil(total_time / step - 1e-9)
    rng = np.random.default_rng(seed)
    increments = rng.normal(0.0, math.sqrt(step), count)
    positions = np.concatenate(([0.0], np.cumsum(increments))) % _TWO_PI
    return TorusPath(step=step, positions=positions, seed=seed)


@dataclass(frozen=True)
class SampledPotential:
    """V on the uniform grid {0, step, ..., length}; values[i] = a(i*step) F(X_{i*step})."""

    step: float
    values: np.ndarray
    length: float
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("values must hold at least two grid points")
        object.__setattr__(self, "values", vals)


def sample_potential(path: TorusPath, env: Envelope, f: FourierFunction,
                     length: float) -> SampledPotential:
    """Evaluate V(t) = a(t) F(X_t) on the path's grid restricted to [0, length]."""
    if not f.real:
        raise ValueError("potential requires a real-valued f")
    if not length > 0:
        raise ValueError("length must be positive")
    count = int(round(length / path.step))
    if count < 1 or abs(count * path.step - length) > 1e-6 * max(1.0, length):
        raise ValueError("path step must divide length to within 1e-6")
    if path.positions.size < count + 1:
        raise ValueError("path does not cover [0, length]")
    times = np.arange(count + 1) * path.step
    values = evaluate_envelope(env, times) * f.evaluate(path.positions[:count + 1])
    return SampledPotential(step=path.step, values=values, length=float(length),
                            seed=path.seed)


def resolvent_function(f: FourierFunction, kappa: float) -> FourierFunction:
    """g_kappa = (L + 2i*kappa)^(-1) f, coefficient-wise c_k / (-k^2/2 + 2i*kappa)."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    g = {k: c / (-0.5 * k * k + 2j * kappa) for k, c in f.coefficients.items()}
    return FourierFunction(g, real=False)


def pairing_mean(f: FourierFunction, kappa: float) -> complex:
    """<F g_kappa> = sum_k |c_k|^2 / (-k^2/2 + 2i*kappa); its real part is negative
    for nonzero f."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    total = 0j
    for k, c in f.coefficients.items():
        total += (c * c.conjugate()).real / (-0.5 * k * k + 2j * kappa)
    return total


def lyapunov_tau(f: FourierFunction, energy: float) -> float:
    """tau(E) = (1/8E) sum_k k^2 |c_k|^2 / (k^4/4 + 4E), the decay-rate exponent.

    Equals -Re<F g_kappa> / (4 kappa^2) at kappa = sqrt(E); strictly decreasing
    in E, divergent at 0+ and vanishing at infinity for nonzero f.
    """
    if not energy > 0:
        raise ValueError("energy must be positive")
    total = 0.0
    for k, c in f.coefficients.items():
        total += k * k * abs(c) ** 2 / (0.25 * k ** 4 + 4.0 * energy)
    return total / (8.0 * energy)
