"""Frobenius distance, one-sided Jacobi SVD, and the trace norm."""

import numpy as np
import pytest

from mtlc.errors import ShapeError
from mtlc.numcore import (
    GradTape,
    Tensor,
    backward,
    frobenius_norm,
    frobenius_sq_distance,
    grad_check,
    jacobi_svd,
    trace_norm,
    trace_norm_penalty,
)


class TestFrobeniusSqDistance:
    def test_equal_inputs_zero(self):
        x = np.random.default_rng(0).normal(size=(3, 3))
        assert frobenius_sq_distance(Tensor(x), Tensor(x)).item() == 0.0

    def test_identity_vs_zero(self):
        d = frobenius_sq_distance(Tensor(np.eye(2)), Tensor(np.zeros((2, 2))))
        assert d.item() == 2.0

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        a, b = Tensor(rng.normal(size=(4, 2))), Tensor(rng.normal(size=(4, 2)))
        assert frobenius_sq_distance(a, b).item() == frobenius_sq_distance(b, a).item()

    def test_gradient_is_two_delta(self):
        rng = np.random.default_rng(2)
        a = Tensor(rng.normal(size=(2, 3)), requires_grad=True)
        b = Tensor(rng.normal(size=(2, 3)))
        with GradTape() as tape:
            loss = frobenius_sq_distance(a, b)
        backward(tape, loss)
        assert np.allclose(a.grad, 2 * (a.data - b.data))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            frobenius_sq_distance(Tensor(np.zeros((2, 2))), Tensor(np.zeros((2, 3))))


class TestJacobiSvd:
    @pytest.mark.parametrize("shape", [(4, 3), (3, 4), (5, 5), (1, 3), (6, 2)])
    def test_reconstruction_and_orthogonality(self, shape):
        for seed in range(10):
            a = np.random.default_rng(seed).normal(size=shape)
            u, s, vt = jacobi_svd(a)
            k = min(shape)
            assert u.shape == (shape[0], k) and vt.shape == (k, shape[1])
            assert np.abs(u @ np.diag(s) @ vt - a).max() < 1e-10
            assert np.abs(u.T @ u - np.eye(k)).max() < 1e-10
            assert np.abs(vt @ vt.T - np.eye(k)).max() < 1e-10
            assert (np.diff(s) <= 1e-12).all()  # descending

    def test_rank_deficient(self):
        a = np.outer([1.0, 2.0, 3.0], [4.0, 5.0])
        u, s, vt = jacobi_svd(a)
        assert np.abs(u @ np.diag(s) @ vt - a).max() < 1e-10
        assert s[1] < 1e-10

    def test_empty_rejected(self):
        with pytest.raises(ShapeError):
            jacobi_svd(np.zeros(3))


class TestTraceNorm:
    def test_diagonal_case(self):
        value, _ = trace_norm(np.diag([3.0, -2.0]))
        assert value == pytest.approx(5.0, abs=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_identity(self, k):
        value, sub = trace_norm(np.eye(k))
        assert value == pytest.approx(float(k), abs=1e-12)
        assert np.allclose(sub, np.eye(k))

    def test_matches_eigenvalue_oracle(self):
        # independent route: trace norm = sum of sqrt eigenvalues of W^T W
        for seed in range(100):
            w = np.random.default_rng(seed).normal(size=(4, 3))
            value, _ = trace_norm(w)
            oracle = np.sqrt(np.clip(np.linalg.eigvalsh(w.T @ w), 0.0, None)).sum()
            assert abs(value - oracle) < 1e-8

    def test_dominates_frobenius_norm(self):
        for seed in range(100):
            shape = np.random.default_rng(seed).integers(1, 6, size=2)
            w = np.random.default_rng(seed + 1000).normal(size=tuple(shape))
            value, _ = trace_norm(w)
            assert value >= frobenius_norm(w) - 1e-12

    def test_subgradient_vs_finite_differences(self):
        for seed in range(20):
            w = Tensor(np.random.default_rng(seed).uniform(-2, 2, size=(4, 3)))
            assert grad_check(lambda t: trace_norm_penalty(t), w) < 1e-5

    def test_penalty_joins_graph(self):
        w = Tensor(np.random.default_rng(5).normal(size=(3, 2)), requires_grad=True)
        with GradTape() as tape:
            loss = trace_norm_penalty(w)
        backward(tape, loss)
        _, sub = trace_norm(w.data)
        assert np.allclose(w.grad, sub)
