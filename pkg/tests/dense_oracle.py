"""Dense symmetric-matrix eigenvalue reference via cyclic Jacobi rotations.

Independent test oracle for the tridiagonal Sturm/bisection path; O(n^3) per
sweep, intended for sizes up to ~100.
"""

import numpy as np


def jacobi_spectrum(diagonal, offdiagonal, max_sweeps=40):
    diag = np.asarray(diagonal, dtype=float)
    n = diag.size
    a = np.diag(diag).astype(float)
    idx = np.arange(n - 1)
    a[idx, idx + 1] = offdiagonal
    a[idx + 1, idx] = offdiagonal
    base = float(np.sum(diag * diag)) + 1e-300
    for _ in range(max_sweeps):
        off = float(np.sum(a * a) - np.sum(np.diag(a) ** 2))
        if off <= 1e-26 * base:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q]) + 1e-300):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                if theta >= 0.0:
                    t = 1.0 / (theta + np.hypot(theta, 1.0))
                else:
                    t = 1.0 / (theta - np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
    return np.sort(np.diag(a))
