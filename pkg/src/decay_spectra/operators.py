"""Finite-box Dirichlet operator -d^2/dt^2 + V on [0, n] as a symmetric
tridiagonal matrix, with exact eigenvalue counting and window extraction.

Discretization: interior grid points i*h, i = 1..N with N = n/h - 1; diagonal
entries 2/h^2 + V(i*h), off-diagonal -1/h^2.  Counting uses signed LDL^T
pivots (Sturm sequence) with a standard zero-pivot guard, so window counts are
exact for the matrix; eigenvalues are isolated and refined by bisection on the
count function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import _kernels
from .errors import NumericalError
from .potential import SampledPotential

_BISECTION_REL_TOL = 1e-11  # relative to the matrix scale 2/h^2
_RESIDUAL_REL_TOL = 1e-8
_MAX_INVERSE_ITERATIONS = 48
_START_SEED = 0x5EED


@dataclass(frozen=True)
class TridiagonalOperator:
    diagonal: np.ndarray
    offdiagonal: float
    h: float
    length: float

    def __post_init__(self):
        diag = np.asarray(self.diagonal, dtype=float)
        if diag.ndim != 1 or diag.size < 1:
            raise ValueError("diagonal must be a non-empty 1-d array")
        object.__setattr__(self, "diagonal", diag)

    @property
    def size(self) -> int:
        return self.diagonal.size

    def scale(self) -> float:
        """Gershgorin-type bound on the spectral radius, used as the tolerance scale."""
        return float(np.max(np.abs(self.diagonal)) + 2.0 * abs(self.offdiagonal))


@dataclass(frozen=True)
class EigenPair:
    energy: float
    vector: np.ndarray  # normalized in the weight-h grid l^2 norm
    residual: float


def discretize(pot: SampledPotential) -> TridiagonalOperator:
    """Three-point Dirichlet discretization on the potential's own grid."""
    h = pot.step
    count = int(round(pot.length / h))
    if abs(count * h - pot.length) > 1e-6 * max(1.0, pot.length):
        raise ValueError("grid step must divide the box length to within 1e-6")
    if count < 2:
        raise ValueError("box must contain at least one interior grid point")
    if pot.values.size < count + 1:
        raise ValueError("potential does not cover the box")
    diagonal = 2.0 / (h * h) + pot.values[1:count]
    return TridiagonalOperator(diagonal=diagonal, offdiagonal=-1.0 / (h * h),
                               h=h, length=pot.length)


def free_operator(length: float, h: float) -> TridiagonalOperator:
    """Zero-potential operator, the closed-form reference case."""
    pot = SampledPotential(step=h, values=np.zeros(int(round(length / h)) + 1),
                           length=length)
    return discretize(pot)


def sturm_count(op: TridiagonalOperator, energy):
    """Number of eigenvalues strictly below energy (scalar in, int out;
    array in, int64 array out)."""
    offsq = op.offdiagonal * op.offdiagonal
    e = np.atleast_1d(np.asarray(energy, dtype=float))
    counts = _kernels.sturm_counts(op.diagonal, offsq, e)
    if np.isscalar(energy) or np.asarray(energy).ndim == 0:
        return int(counts[0])
    return counts


def eigenvalues_in_window(op: TridiagonalOperator, lo: float, hi: float,
                          tol: float | None = None) -> np.ndarray:
    """All eigenvalues in [lo, hi), each bracketed by bisection on the count
    function until the bracket is narrower than tol.

    An unresolvable cluster (bracket narrower than tol still holding several
    eigenvalues) is reported as the bracket midpoint with multiplicity.
    """
    if not lo < hi:
        raise ValueError("window must satisfy lo < hi")
    scale = 2.0 / (op.h * op.h)
    if tol is None:
        tol = _BISECTION_REL_TOL * scale
    if not tol > 0:
        raise ValueError("tol must be positive")
    offsq = op.offdiagonal * op.offdiagonal
    count_pair = _kernels.sturm_counts(op.diagonal, offsq,
                                       np.array([lo, hi], dtype=float))
    if count_pair[1] == count_pair[0]:
        return np.empty(0)

    resolved_lo: list[float] = []
    resolved_hi: list[float] = []
    multiplicity: list[int] = []
    work = [(float(lo), float(hi), int(count_pair[0]), int(count_pair[1]))]
    while work:
        mids = np.array([0.5 * (a + b) for a, b, _, _ in work])
        mid_counts = _kernels.sturm_counts(op.diagonal, offsq, mids)
        nxt = []
        for (a, b, ca, cb), mid, cm in zip(work, mids, mid_counts):
            for aa, bb, caa, cbb in ((a, float(mid), ca, int(cm)),
                                     (float(mid), b, int(cm), cb)):
                inside = cbb - caa
                if inside == 0:
                    continue
                if inside == 1 or bb - aa <= tol:
                    resolved_lo.append(aa)
                    resolved_hi.append(bb)
                    multiplicity.append(inside)
                else:
                    nxt.append((aa, bb, caa, cbb))
        work = nxt

    bra = np.array(resolved_lo)
    ket = np.array(resolved_hi)
    mult = np.array(multiplicity)
    counts_at_lo = _kernels.sturm_counts(op.diagonal, offsq, bra)
    # batched bisection: brackets with a single eigenvalue shrink below tol
    active = (ket - bra > tol) & (mult == 1)
    while np.any(active):
        mids = 0.5 * (bra[active] + ket[active])
        mid_counts = _kernels.sturm_counts(op.diagonal, offsq, mids)
        above = mid_counts == counts_at_lo[active]
        idx = np.flatnonzero(active)
        bra[idx[above]] = mids[above]
        ket[idx[~above]] = mids[~above]
        active = (ket - bra > tol) & (mult == 1)

    values = np.repeat(0.5 * (bra + ket), mult)
    return np.sort(values)


def _apply(op: TridiagonalOperator, x: np.ndarray) -> np.ndarray:
    y = op.diagonal * x
    y[:-1] += op.offdiagonal * x[1:]
    y[1:] += op.offdiagonal * x[:-1]
    return y


def eigenvector(op: TridiagonalOperator, energy: float, orthogonal_to=(),
                seed: int = _START_SEED,
                residual_tol: float = _RESIDUAL_REL_TOL) -> EigenPair:
    """Inverse iteration at the given energy from a deterministic seeded start,
    with an orthogonalization pass against previously found vectors for
    clustered eigenvalues.  The returned energy is the final Rayleigh quotient.

    residual_tol is relative to the matrix scale 2/h^2; tighten it when the
    eigenvector itself (not just the eigenvalue) must be accurate, e.g. for
    profile comparisons against closed forms.
    """
    if not residual_tol > 0:
        raise ValueError("residual_tol must be positive")
    size = op.size
    others = [np.asarray(v, dtype=float) for v in orthogonal_to]
    for v in others:
        if v.shape != (size,):
            raise ValueError("orthogonal_to vectors must match the operator size")
    scale = op.scale()
    shift = float(energy)
    banded = np.zeros((3, size))
    banded[0, 1:] = op.offdiagonal
    banded[2, :-1] = op.offdiagonal

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(size)
    residual = math.inf
    for attempt in range(3):
        banded[1, :] = op.diagonal - shift
        try:
            for _ in range(_MAX_INVERSE_ITERATIONS):
                y = solve_banded((1, 1), banded, x)
                for v in others:
                    y -= (v @ y) * v / (v @ v)
                norm = float(np.linalg.norm(y))
                if not np.isfinite(norm) or norm == 0.0:
                    raise np.linalg.LinAlgError("inverse iteration collapsed")
                y /= norm
                mu = float(y @ _apply(op, y))
                residual = float(np.linalg.norm(_apply(op, y) - mu * y)) / scale
                x = y
                if residual <= residual_tol:
                    break
        except (np.linalg.LinAlgError, ValueError):
            # exactly singular shift: nudge and restart
            shift = shift + scale * 1e-13 * (attempt + 1)
            continue
        break
    if residual > residual_tol:
        raise NumericalError(
            f"inverse iteration stalled at residual {residual:.3e}; "
            "energy is not near an isolated eigenvalue")
    # deterministic sign: largest-magnitude entry is positive
    peak = int(np.argmax(np.abs(x)))
    if x[peak] < 0:
        x = -x
    vector = x / math.sqrt(op.h)
    return EigenPair(energy=mu, vector=vector, residual=residual)
