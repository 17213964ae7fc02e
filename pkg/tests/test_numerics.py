import numpy as np
import pytest

from trihybrid.numerics import (
    BracketError,
    SingularShiftError,
    all_eigenvalues,
    bisection,
    hermitian_max_eigpair,
    shifted_solve,
)


def random_hermitian(rng, n):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (x + x.conj().T)


class TestMaxEigpair:
    def test_diagonal(self):
        val, vec = hermitian_max_eigpair(np.diag([2.0, 1.0]))
        assert val == pytest.approx(2.0)
        np.testing.assert_allclose(np.abs(vec), [1.0, 0.0], atol=1e-12)
        assert vec[0].real > 0

    def test_rank_one(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        val, vec = hermitian_max_eigpair(np.outer(a, np.conj(a)))
        assert val == pytest.approx(np.linalg.norm(a) ** 2)
        overlap = abs(np.vdot(vec, a / np.linalg.norm(a)))
        assert overlap == pytest.approx(1.0, abs=1e-10)

    def test_matches_power_iteration(self):
        rng = np.random.default_rng(1)
        a = random_hermitian(rng, 8)
        a = a + 10 * np.eye(8)  # shift positive so power iteration converges
        val, vec = hermitian_max_eigpair(a)
        x = np.ones(8, dtype=complex)
        for _ in range(10_000):
            x = a @ x
            x /= np.linalg.norm(x)
        lam = float(np.real(np.vdot(x, a @ x)))
        assert val == pytest.approx(lam, abs=1e-8 * abs(lam))
        assert np.linalg.norm(a @ vec - val * vec) <= 1e-8 * np.linalg.norm(a)

    def test_deterministic_phase(self):
        rng = np.random.default_rng(2)
        a = random_hermitian(rng, 6)
        _, v1 = hermitian_max_eigpair(a)
        _, v2 = hermitian_max_eigpair(a.copy())
        np.testing.assert_array_equal(v1, v2)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            hermitian_max_eigpair(np.array([[np.nan, 0], [0, 1.0]]))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            hermitian_max_eigpair(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestAllEigenvalues:
    def test_identity(self):
        np.testing.assert_allclose(all_eigenvalues(np.eye(3)), [1, 1, 1])

    def test_diagonal_sorted(self):
        np.testing.assert_allclose(all_eigenvalues(np.diag([-1.0, 0.0, 5.0])), [-1, 0, 5])

    def test_trace_identity(self):
        rng = np.random.default_rng(3)
        a = random_hermitian(rng, 6)
        vals = all_eigenvalues(a)
        assert np.sum(vals) == pytest.approx(np.trace(a).real, rel=1e-8)

    def test_reconstruction(self):
        rng = np.random.default_rng(4)
        a = random_hermitian(rng, 7)
        vals, vecs = np.linalg.eigh(a)
        recon = (vecs * vals) @ vecs.conj().T
        assert np.linalg.norm(recon - a) <= 1e-8 * np.linalg.norm(a)


class TestShiftedSolve:
    def test_zero_matrix(self):
        rhs = np.array([0.0, 0.0, 1.0], dtype=complex)
        np.testing.assert_allclose(shifted_solve(np.zeros((3, 3)), -1.0, rhs), rhs)

    def test_diagonal(self):
        x = shifted_solve(np.diag([1.0, 2.0]), 3.0, np.array([1.0, 1.0]))
        np.testing.assert_allclose(x, [-0.5, -1.0])

    def test_residual_on_random_instance(self):
        rng = np.random.default_rng(5)
        a = random_hermitian(rng, 9)
        a = a @ a.conj().T + np.eye(9)  # SPD
        rhs = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        x = shifted_solve(a, -0.5, rhs)
        res = np.linalg.norm((a + 0.5 * np.eye(9)) @ x - rhs)
        assert res <= 1e-10 * np.linalg.norm(rhs)

    def test_linearity_in_rhs(self):
        rng = np.random.default_rng(6)
        a = random_hermitian(rng, 5)
        r1 = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        r2 = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        mu = 20.0
        combined = shifted_solve(a, mu, 2.0 * r1 - 1j * r2)
        parts = 2.0 * shifted_solve(a, mu, r1) - 1j * shifted_solve(a, mu, r2)
        np.testing.assert_allclose(combined, parts, atol=1e-10)

    def test_singular_shift(self):
        with pytest.raises(SingularShiftError):
            shifted_solve(np.diag([1.0, 2.0]), 2.0, np.array([1.0, 1.0]))


class TestBisection:
    def test_linear(self):
        assert bisection(lambda x: x, 0.0, 1.0, 0.5, 1e-12) == pytest.approx(0.5)

    def test_cubic(self):
        assert bisection(lambda x: x**3, 0.0, 3.0, 8.0, 1e-10) == pytest.approx(2.0)

    def test_bracket_expansion(self):
        # target sits beyond the initial interval; doubling reaches it
        root = bisection(lambda x: x, 0.0, 1.0, 100.0, 1e-10)
        assert root == pytest.approx(100.0)

    def test_unreachable_target(self):
        with pytest.raises(BracketError):
            bisection(lambda x: 1.0 / (1.0 + x**2), 0.0, 1.0, 2.0, 1e-10)

    def test_decreasing_function(self):
        root = bisection(lambda x: -x, 0.0, 2.0, -1.0, 1e-12)
        assert root == pytest.approx(1.0)
