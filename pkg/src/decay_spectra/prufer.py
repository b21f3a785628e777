"""Prufer representation (psi, psi'/kappa) = R (sin theta, cos theta) of the
shooting solution at energy E = kappa^2, integrated over a sampled potential.

Phase and log-radius obey
    theta' = kappa - (V/kappa) sin^2(theta)
    (log R)' = (V/(2 kappa)) sin(2 theta)
with theta_0 = 0 for the Dirichlet condition.  The integrator is an explicit
trapezoid (Heun) step locked to the potential grid, so the free case theta =
kappa t is reproduced exactly.  The floor of theta_n / pi counts eigenvalues
below E, which is the continuum cross-check for the matrix Sturm counts, and
theta_n(kappa) is monotone in kappa, which turns shooting into bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .potential import DC, Envelope, FourierFunction, SampledPotential
from .potential import envelope_sq_integral, lyapunov_tau


@dataclass(frozen=True)
class PrueferTrace:
    kappa: float
    times: np.ndarray
    theta: np.ndarray
    logr: np.ndarray


def integrate_prufer(pot: SampledPotential, kappa: float,
                     theta0: float = 0.0) -> PrueferTrace:
    """Phase and log-radius on the potential's grid over [0, length]."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    count = int(round(pot.length / pot.step))
    values = pot.values[:count + 1]
    theta, logr = _kernels.heun_phase_radius(values, pot.step,
                                             np.array([float(kappa)]), float(theta0))
    times = np.arange(count + 1) * pot.step
    return PrueferTrace(kappa=float(kappa), times=times,
                        theta=theta[:, 0], logr=logr[:, 0])


def final_phases(pot: SampledPotential, kappas, theta0: float = 0.0) -> np.ndarray:
    """theta at the right endpoint for a batch of kappa values (no trace storage)."""
    kappas = np.atleast_1d(np.asarray(kappas, dtype=float))
    if np.any(kappas <= 0):
        raise ValueError("kappa values must be positive")
    count = int(round(pot.length / pot.step))
    return _kernels.heun_final_phase(pot.values[:count + 1], pot.step, kappas,
                                     float(theta0))


def oscillation_count(trace: PrueferTrace) -> int:
    """floor(theta_n / pi): number of eigenvalues below kappa^2."""
    return int(math.floor(trace.theta[-1] / math.pi))


def shooting_eigenvalue(pot: SampledPotential, j: int, bracket) -> float:
    """E_j with theta_n(sqrt(E_j)) = j*pi, located by bisection in kappa over
    the energy bracket (lo, hi); requires the bracket to straddle the level."""
    if j < 1:
        raise ValueError("eigenvalue index j must be >= 1")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")
    target = j * math.pi
    k_lo, k_hi = math.sqrt(lo), math.sqrt(hi)
    phases = final_phases(pot, np.array([k_lo, k_hi]))
    if not phases[0] <= target <= phases[1]:
        raise ValueError("bracket does not straddle the requested level")
    while k_hi - k_lo > 1e-13 * k_hi:
        mid = 0.5 * (k_lo + k_hi)
        if final_phases(pot, np.array([mid]))[0] < target:
            k_lo = mid
        else:
            k_hi = mid
    mid = 0.5 * (k_lo + k_hi)
    return mid * mid


def renormalize_radius(trace: PrueferTrace, f: FourierFunction,
                       env: Envelope) -> np.ndarray:
    """r-tilde on the rescaled grid t in (0, 1]: the raw log-radius minus the
    accumulated drift tau(kappa^2) * integral_0^n a(s)^2 ds.

    Only the critical decaying envelope (alpha = 1/2) and the dc variant have
    a finite-drift rescaling of this form.
    """
    if env.variant != DC and env.alpha != 0.5:
        raise ValueError("renormalization applies to the critical (alpha = 1/2) "
                         "or dc envelope")
    length = float(trace.times[-1])
    drift = lyapunov_tau(f, trace.kappa ** 2) * envelope_sq_integral(env, length)
    return trace.logr[1:] - drift
