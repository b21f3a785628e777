"""Operator-layer tests against closed forms and the dense Jacobi oracle.

Free-operator anchors (V = 0, N interior points, step h):
    eigenvalues  (2/h^2) (1 - cos(k pi / (N+1))),  k = 1..N
    eigenvectors sin(i k pi / (N+1)),              i = 1..N
"""

import math

import numpy as np
import pytest

from dense_oracle import jacobi_spectrum
from decay_spectra.errors import NumericalError
from decay_spectra.operators import (
    discretize,
    eigenvalues_in_window,
    eigenvector,
    free_operator,
    sturm_count,
)
from decay_spectra.potential import (
    Envelope,
    FourierFunction,
    SampledPotential,
    sample_potential,
    sample_torus_path,
)


def free_spectrum(op):
    k = np.arange(1, op.size + 1)
    return (2.0 / op.h**2) * (1.0 - np.cos(k * math.pi / (op.size + 1)))


def random_operator(seed, length=3.0, h=0.125, alpha=0.5):
    path = sample_torus_path(length, h, seed=seed)
    pot = sample_potential(path, Envelope(alpha=alpha), FourierFunction.cosine(), length)
    return discretize(pot)


class TestDiscretize:
    def test_grid_and_entries(self):
        path = sample_torus_path(2.0, 0.25, seed=9)
        pot = sample_potential(path, Envelope(alpha=1.0), FourierFunction.cosine(), 2.0)
        op = discretize(pot)
        assert op.size == 7
        assert op.offdiagonal == -16.0
        assert np.array_equal(op.diagonal, 32.0 + pot.values[1:8])

    def test_rejects_non_dividing_step(self):
        pot = SampledPotential(step=0.3, values=np.zeros(18), length=5.0)
        with pytest.raises(ValueError):
            discretize(pot)

    def test_rejects_empty_interior(self):
        pot = SampledPotential(step=1.0, values=np.zeros(2), length=1.0)
        with pytest.raises(ValueError):
            discretize(pot)


class TestSturmCount:
    def test_free_closed_form(self):
        op = free_operator(10.0, 0.25)
        exact = free_spectrum(op)
        rng = np.random.default_rng(3)
        for e in rng.uniform(-1.0, 40.0, 40):
            assert sturm_count(op, e) == int(np.sum(exact < e))

    def test_matches_jacobi_on_random_potential(self):
        for seed in (1, 2, 3):
            op = random_operator(seed)
            exact = jacobi_spectrum(op.diagonal, op.offdiagonal)
            rng = np.random.default_rng(seed + 100)
            for e in rng.uniform(-1.0, 300.0, 12):
                assert sturm_count(op, e) == int(np.sum(exact < e))

    def test_extremes_and_monotonicity(self):
        op = random_operator(7)
        lo = float(np.min(op.diagonal)) - 2.0 * abs(op.offdiagonal) - 1.0
        hi = float(np.max(op.diagonal)) + 2.0 * abs(op.offdiagonal) + 1.0
        assert sturm_count(op, lo) == 0
        assert sturm_count(op, hi) == op.size
        grid = np.linspace(lo, hi, 101)
        counts = sturm_count(op, grid)
        assert np.all(np.diff(counts) >= 0)

    def test_array_input(self):
        op = free_operator(5.0, 0.5)
        counts = sturm_count(op, np.array([0.0, 100.0]))
        assert counts.tolist() == [0, op.size]


class TestEigenvaluesInWindow:
    def test_free_closed_form(self):
        op = free_operator(12.0, 0.25)
        scale = 2.0 / op.h**2
        exact = free_spectrum(op)
        got = eigenvalues_in_window(op, 0.0, scale * 2.1)
        assert got.size == exact.size
        assert np.max(np.abs(got - exact)) < 1e-8 * scale

    def test_matches_jacobi_on_random_potential(self):
        op = random_operator(17, length=4.0, h=0.1)
        scale = 2.0 / op.h**2
        exact = jacobi_spectrum(op.diagonal, op.offdiagonal)
        lo, hi = 0.5, 60.0
        inside = exact[(exact >= lo) & (exact < hi)]
        got = eigenvalues_in_window(op, lo, hi)
        assert got.size == inside.size
        assert np.max(np.abs(got - inside)) < 1e-8 * scale

    def test_count_identity_exact(self):
        rng = np.random.default_rng(19)
        for seed in range(5):
            op = random_operator(seed + 40)
            lo, hi = np.sort(rng.uniform(0.0, 200.0, 2))
            if hi - lo < 1e-6:
                continue
            got = eigenvalues_in_window(op, lo, hi)
            assert got.size == sturm_count(op, hi) - sturm_count(op, lo)

    def test_window_union(self):
        op = random_operator(23)
        a, b, c = 0.0, 40.0, 150.0
        left = eigenvalues_in_window(op, a, b)
        right = eigenvalues_in_window(op, b, c)
        both = eigenvalues_in_window(op, a, c)
        assert left.size + right.size == both.size
        assert np.max(np.abs(np.concatenate([left, right]) - both)) < 1e-7

    def test_empty_window(self):
        op = free_operator(5.0, 0.5)
        assert eigenvalues_in_window(op, -2.0, -1.0).size == 0

    def test_invalid_window(self):
        op = free_operator(5.0, 0.5)
        with pytest.raises(ValueError):
            eigenvalues_in_window(op, 1.0, 1.0)


class TestEigenvector:
    def test_free_profiles(self):
        op = free_operator(10.0, 0.05)
        scale = 2.0 / op.h**2
        exact = free_spectrum(op)
        i = np.arange(1, op.size + 1)
        for k in (1, 4, 11):
            pair = eigenvector(op, exact[k - 1])
            profile = np.sin(i * k * math.pi / (op.size + 1))
            profile /= np.linalg.norm(profile)
            cosine = abs(profile @ pair.vector) / np.linalg.norm(pair.vector)
            assert cosine >= 1.0 - 1e-10
            assert abs(pair.energy - exact[k - 1]) < 2e-8 * scale
            assert pair.residual <= 1e-8

    def test_weight_h_normalization(self):
        op = random_operator(29)
        e = eigenvalues_in_window(op, 1.0, 100.0)[0]
        pair = eigenvector(op, e)
        assert abs(op.h * np.sum(pair.vector**2) - 1.0) < 1e-10

    def test_determinism(self):
        op = random_operator(31)
        e = eigenvalues_in_window(op, 1.0, 100.0)[0]
        a = eigenvector(op, e)
        b = eigenvector(op, e)
        assert np.array_equal(a.vector, b.vector)

    def test_far_from_spectrum_raises(self):
        op = free_operator(10.0, 0.25)
        exact = free_spectrum(op)
        midpoint = 0.5 * (exact[0] + exact[1])
        with pytest.raises(NumericalError):
            eigenvector(op, midpoint)

    def test_cluster_resolved_by_orthogonalization(self):
        # symmetric double well: ground pair split far below bisection tolerance,
        # so the window reports a multiplicity-2 midpoint and the second vector
        # must come from a deflated restart
        h, length = 0.25, 10.0
        times = np.arange(int(round(length / h)) + 1) * h
        values = np.where((times >= 4.0) & (times <= 6.0), 300.0, 0.0)
        op = discretize(SampledPotential(step=h, values=values, length=length))
        scale = 2.0 / h**2
        pair_vals = eigenvalues_in_window(op, 0.3, 1.0)
        assert pair_vals.size == 2
        assert pair_vals[1] - pair_vals[0] < 1e-9 * scale
        first = eigenvector(op, pair_vals[0])
        second = eigenvector(op, pair_vals[1], orthogonal_to=(first.vector,))
        overlap = op.h * abs(first.vector @ second.vector)
        assert overlap < 1e-6
        assert second.residual <= 1e-8
        exact = jacobi_spectrum(op.diagonal, op.offdiagonal)
        near = exact[(exact > 0.3) & (exact < 1.0)]
        assert near.size == 2
        got = np.sort([first.energy, second.energy])
        assert np.max(np.abs(got - near)) < 2e-8 * scale
