import numpy as np
import pytest
import scipy.sparse as sp

from ietidp import linalg
from ietidp.errors import DimensionMismatch, NotPositiveDefinite, SingularMatrix


def test_spd_identity():
    f = linalg.factor_spd(np.eye(3))
    assert np.allclose(f.solve(np.array([1.0, 2, 3])), [1, 2, 3])
    assert f.inertia == (3, 0, 0)


def test_spd_diagonal():
    f = linalg.factor_spd(sp.diags([1.0, 4.0]))
    assert np.allclose(f.solve(np.array([1.0, 4.0])), [1, 1])


def test_spd_two_by_two():
    f = linalg.factor_spd(np.array([[2.0, 1], [1, 2]]))
    assert np.allclose(f.solve(np.array([3.0, 3.0])), [1, 1], atol=1e-14)


def test_spd_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        linalg.factor_spd(np.array([[1.0, 0], [0, -1]]))
    with pytest.raises(NotPositiveDefinite):
        linalg.factor_spd(np.array([[1.0, 1], [1, 1]]))


@pytest.mark.parametrize("n", [5, 20, 50, 120])
def test_spd_random(n, rng):
    m = rng.standard_normal((n, n))
    a = m.T @ m + np.eye(n)
    x = rng.standard_normal(n)
    f = linalg.factor_spd(sp.csr_matrix(a))
    assert np.linalg.norm(f.solve(a @ x) - x) <= 1e-8 * np.linalg.norm(x)
    assert linalg.reconstruction_error(f, a) < 1e-10


def test_indefinite_swap():
    f = linalg.factor_symmetric_indefinite(np.array([[0.0, 1], [1, 0]]))
    assert np.allclose(f.solve(np.array([2.0, 5.0])), [5, 2])
    assert f.inertia == (1, 1, 0)


def test_indefinite_small_saddle():
    f = linalg.factor_symmetric_indefinite(np.array([[1.0, 1], [1, 0]]))
    assert np.allclose(f.solve(np.array([1.0, 1.0])), [1, 0])


def test_indefinite_identity_inertia():
    assert linalg.factor_symmetric_indefinite(np.eye(2)).inertia == (2, 0, 0)


def test_indefinite_singular():
    with pytest.raises(SingularMatrix):
        linalg.factor_symmetric_indefinite(np.array([[1.0, 1], [1, 1]]))


@pytest.mark.parametrize("n,m", [(10, 3), (40, 5), (150, 12)])
def test_saddle_inertia_equals_constraint_rank(n, m, rng):
    g = rng.standard_normal((n, n))
    a = sp.csr_matrix(g.T @ g + np.eye(n))
    c = sp.csr_matrix(rng.standard_normal((m, n)))
    big = sp.bmat([[a, c.T], [c, None]], format="csr")
    f = linalg.factor_symmetric_indefinite(big)
    assert f.inertia[1] == np.linalg.matrix_rank(c.toarray())
    b = rng.standard_normal(n + m)
    x = f.solve(b)
    assert np.linalg.norm(big @ x - b) <= 1e-8 * np.linalg.norm(b)


def test_saddle_floating_block():
    # A singular (constant kernel) but fixed by the constraint
    a = sp.csr_matrix(np.array([[1.0, -1, 0], [-1, 2, -1], [0, -1, 1]]))
    c = sp.csr_matrix(np.array([[1.0, 0, 0]]))
    f = linalg.factor_saddle(a, c)
    x = f.solve(np.array([0.0, 0, 1, 0]))
    assert np.allclose(x[:3], [0, 1, 2])


def test_spmv_examples():
    x = np.array([1.0, 1.0])
    assert np.allclose(linalg.spmv(sp.eye(2), x), x)
    assert np.allclose(linalg.spmv(sp.csr_matrix((2, 2)), x), 0)
    assert np.allclose(linalg.spmv(sp.csr_matrix([[1.0, 2], [3, 4]]), x), [3, 7])


def test_spmv_matches_dense(rng):
    for _ in range(5):
        m = sp.random(30, 20, density=0.2, random_state=rng)
        x = rng.standard_normal(20)
        assert np.allclose(linalg.spmv(m, x), m.toarray() @ x)


def test_vector_kernels():
    x, y = np.array([1.0, 2.0]), np.array([3.0, 4.0])
    assert linalg.dot(x, y) == 11
    assert np.allclose(linalg.axpy(2.0, x, y), [5, 8])
    assert linalg.norm2(y) == 5
    with pytest.raises(DimensionMismatch):
        linalg.dot(x, np.ones(3))
    with pytest.raises(DimensionMismatch):
        linalg.spmv(sp.eye(3), x)


def test_kronecker_sum_solver(rng):
    def spd(n):
        g = rng.standard_normal((n, n))
        return g.T @ g + n * np.eye(n)

    k1, m1, k2, m2 = spd(4), spd(4), spd(5), spd(5)
    a = np.kron(m2, k1) + np.kron(k2, m1)
    b = rng.standard_normal(20)
    s = linalg.KroneckerSumSolver(k1, m1, k2, m2)
    assert np.allclose(a @ s.solve(b), b)
