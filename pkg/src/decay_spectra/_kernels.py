"""Compiled inner loops (Sturm pivots, Heun phase integration, phase-family SDE steps).

Everything here is sequential in the grid index and vectorized over energies or
spectral parameters by an inner loop; callers own all validation and RNG.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi
_QUARTER_PI = 0.25 * math.pi


@njit(cache=True, error_model="numpy")
def sturm_counts(diag, offdiag_sq, energies):
    """Number of eigenvalues strictly below each energy, via signed LDL^T pivots."""
    n = diag.shape[0]
    m = energies.shape[0]
    counts = np.zeros(m, dtype=np.int64)
    for j in range(m):
        e = energies[j]
        cnt = 0
        d = diag[0] - e
        if d == 0.0:
            d = -1e-300  # zero pivot: count the tie below
        if d < 0.0:
            cnt += 1
        for i in range(1, n):
            d = diag[i] - e - offdiag_sq / d
            if d == 0.0:
                d = -1e-300
            if d < 0.0:
                cnt += 1
        counts[j] = cnt
    return counts


@njit(cache=True, error_model="numpy")
def heun_phase_radius(values, h, kappas, theta0):
    """Trapezoid-predictor integration of theta' = k - (V/k) sin^2(theta),
    (log r)' = (V/2k) sin(2 theta) over the sampled potential, one column per kappa.
    Returns (theta, logr) with shape (len(values), len(kappas))."""
    t_len = values.shape[0]
    k_len = kappas.shape[0]
    theta = np.empty((t_len, k_len))
    logr = np.empty((t_len, k_len))
    for k in range(k_len):
        theta[0, k] = theta0
        logr[0, k] = 0.0
    for i in range(t_len - 1):
        v0 = values[i]
        v1 = values[i + 1]
        for k in range(k_len):
            kap = kappas[k]
            th = theta[i, k]
            s = math.sin(th)
            dth0 = kap - (v0 / kap) * s * s
            dlr0 = (v0 / (2.0 * kap)) * math.sin(2.0 * th)
            tp = th + h * dth0
            s = math.sin(tp)
            dth1 = kap - (v1 / kap) * s * s
            dlr1 = (v1 / (2.0 * kap)) * math.sin(2.0 * tp)
            theta[i + 1, k] = th + 0.5 * h * (dth0 + dth1)
            logr[i + 1, k] = logr[i, k] + 0.5 * h * (dlr0 + dlr1)
    return theta, logr


@njit(cache=True, error_model="numpy")
def heun_final_phase(values, h, kappas, theta0):
    """Final Prufer phase only (no trace storage), one entry per kappa."""
    t_len = values.shape[0]
    k_len = kappas.shape[0]
    out = np.empty(k_len)
    for k in range(k_len):
        kap = kappas[k]
        th = theta0
        for i in range(t_len - 1):
            v0 = values[i]
            v1 = values[i + 1]
            s = math.sin(th)
            dth0 = kap - (v0 / kap) * s * s
            tp = th + h * dth0
            s = math.sin(tp)
            dth1 = kap - (v1 / kap) * s * s
            th = th + 0.5 * h * (dth0 + dth1)
        out[k] = th
    return out


@njit(cache=True, error_model="numpy")
def phase_family_steps(theta, lambdas, tau, t_grid, db1, db2):
    """Split-step evolution of the coupled phase family
    dTheta(c) = c dt + sqrt(tau) Re[(e^{2i Theta} - 1) dZ_t / sqrt(t)]
    with increments of Z = B1 + i B2 shared across the lambda grid.

    Substeps per increment: exact drift, exact flow of the rotation part
    d theta = A rho cos(2 theta + phi) (closed form via the half-angle map,
    monotone in theta for any step), then the theta-independent shift -A dB1.
    theta is updated in place and holds Theta at t_grid[-1] on return."""
    steps = t_grid.shape[0] - 1
    k_len = lambdas.shape[0]
    for i in range(steps):
        t = t_grid[i]
        dt = t_grid[i + 1] - t
        a = math.sqrt(tau / t)
        b1 = db1[i]
        b2 = db2[i]
        rho = math.hypot(b1, b2)
        phi = math.atan2(b2, b1)
        growth = math.exp(2.0 * a * rho)
        shift = a * b1
        for k in range(k_len):
            th = theta[k] + lambdas[k] * dt
            u = 2.0 * th + phi
            wrap = math.floor((u + _HALF_PI) / _TWO_PI)
            ang = 0.5 * (u - _TWO_PI * wrap) + _QUARTER_PI  # in [0, pi)
            w = math.tan(ang)
            if w == 0.0:
                w1 = 0.0  # unstable fixed point, avoid 0 * inf
            else:
                w1 = w * growth
            ang1 = math.atan(w1)
            if ang > _HALF_PI:
                ang1 += math.pi
            u1 = 2.0 * ang1 - _HALF_PI + _TWO_PI * wrap
            theta[k] = 0.5 * (u1 - phi) - shift
    return theta
