import numpy as np
import pytest
from scipy.linalg import expm, fractional_matrix_power

from katonls.lanczos import KrylovError, LanczosRecurrence, matrix_function


def spd_matrix(n, seed=0, cond=50.0):
    r = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(r.standard_normal((n, n)))
    return Q @ np.diag(np.geomspace(1.0, cond, n)) @ Q.T


class TestRecurrence:
    def test_tridiagonal_matches_projection(self):
        A = spd_matrix(40)
        v = np.random.default_rng(1).standard_normal(40)
        rec = LanczosRecurrence(lambda x: A @ x, v)
        rec.extend(10)
        # rebuild the basis by replaying unit coefficient vectors
        Q = np.column_stack([rec.replay(np.eye(10)[j]) / rec.norm0 for j in range(10)])
        np.testing.assert_allclose(Q.T @ Q, np.eye(10), atol=1e-10)
        T = Q.T @ A @ Q
        np.testing.assert_allclose(np.diag(T), rec.alpha, atol=1e-10)
        np.testing.assert_allclose(np.diag(T, 1), rec.beta[:9], atol=1e-10)

    def test_exhausts_on_invariant_subspace(self):
        A = np.diag([1.0, 2.0, 3.0, 4.0])
        rec = LanczosRecurrence(lambda x: A @ x, np.array([1.0, 1.0, 0.0, 0.0]))
        rec.extend(4)
        assert rec.exhausted and rec.size == 2

    def test_zero_start(self):
        out, rec = matrix_function(lambda x: x, np.zeros(5), np.exp)
        assert rec.exhausted
        np.testing.assert_array_equal(out, 0)


class TestMatrixFunction:
    def test_exponential(self):
        A = spd_matrix(60, 2)
        v = np.random.default_rng(3).standard_normal(60)
        out, _ = matrix_function(lambda x: A @ x, v, lambda t: np.exp(-0.3 * t))
        np.testing.assert_allclose(out, expm(-0.3 * A) @ v, rtol=1e-9, atol=1e-12)

    @pytest.mark.parametrize("p", [-0.5, -0.25, 0.75])
    def test_fractional_power(self, p):
        A = spd_matrix(60, 4)
        v = np.random.default_rng(5).standard_normal(60)
        out, _ = matrix_function(lambda x: A @ x, v, lambda t: t**p)
        want = np.real(fractional_matrix_power(A, p)) @ v
        np.testing.assert_allclose(out, want, rtol=1e-8)

    def test_complex_vectors(self):
        A = spd_matrix(30, 6)
        r = np.random.default_rng(7)
        v = r.standard_normal(30) + 1j * r.standard_normal(30)
        out, _ = matrix_function(lambda x: A @ x, v, np.sqrt)
        want = np.real(fractional_matrix_power(A, 0.5)) @ v
        np.testing.assert_allclose(out, want, rtol=1e-8)

    def test_dimension_cap(self):
        A = spd_matrix(200, 8, cond=1e8)
        v = np.random.default_rng(9).standard_normal(200)
        with pytest.raises(KrylovError):
            matrix_function(lambda x: A @ x, v, lambda t: t**-0.5, rtol=1e-15, max_dim=16)
