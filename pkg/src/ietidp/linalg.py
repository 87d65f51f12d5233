"""Small linear-algebra layer: symmetric factorizations and vector kernels.

Sparse matrices are plain ``scipy.sparse`` CSR matrices.  Factorizations wrap
SuperLU (sparse) or LAPACK (dense) and expose a uniform ``solve`` method plus
the inertia of the factorized matrix.

Two special solvers are provided as well:

* saddle-point systems ``[[A, C^T], [C, 0]]`` with few constraint rows are
  factorized through the equivalent augmented form
  ``[[A + g C^T C, C^T], [C, 0]]`` (exact, not a penalty), whose leading block is
  SPD even when ``A`` is only semidefinite;
* :class:`KroneckerSumSolver` diagonalizes matrices of the form
  ``kron(M2, K1) + kron(K2, M1)`` direction by direction (fast diagonalization).
"""

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, NotPositiveDefinite, SingularMatrix

DENSE_LIMIT = 64
PIVOT_TOL = 1e-12


def as_csr(m):
    """Return ``m`` as a CSR matrix with sorted indices and no explicit zeros."""
    m = sp.csr_matrix(m, dtype=float)
    m.eliminate_zeros()
    m.sort_indices()
    return m


def spmv(m, x):
    x = np.asarray(x, dtype=float)
    if m.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"matrix has {m.shape[1]} columns, vector has {x.shape[0]} entries")
    return m @ x


def dot(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    return float(x @ y)


def axpy(a, x, y):
    """Return ``a*x + y``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    return a * x + y


def norm2(x):
    return float(np.linalg.norm(np.asarray(x, float)))


def _check_square(m):
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {m.shape}")


class SymmetricFactorization:
    """Factorization of a symmetric matrix.

    ``solve(b)`` accepts a vector or a matrix of right-hand sides.  ``inertia``
    is the triple (positive, negative, zero) pivot counts.  ``perm`` is the
    symmetric permutation used by the factorization (identity for the dense
    Cholesky path).
    """

    def __init__(self, n, solve, inertia, perm=None, kind="", factors=None):
        self.n = n
        self._solve = solve
        self.inertia = tuple(int(i) for i in inertia)
        self.perm = np.arange(n) if perm is None else np.asarray(perm)
        self.kind = kind
        self.factors = factors

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionMismatch(f"rhs has {b.shape[0]} rows, factorization has {self.n}")
        if b.size == 0:
            return np.zeros_like(b)
        return self._solve(b)

    def __repr__(self):
        return f"SymmetricFactorization(n={self.n}, kind={self.kind!r}, inertia={self.inertia})"


def _dense(m):
    return m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)


def _splu_symmetric(m):
    """SuperLU without pivoting in symmetric mode: effectively an LDL^T factorization."""
    return spla.splu(
        sp.csc_matrix(m),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )


def _spd_dense(a):
    n = a.shape[0]
    scale = max(np.abs(np.diag(a)).max(initial=0.0), 0.0)
    try:
        c, low = sla.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    piv = np.diag(c) ** 2
    if n and (scale <= 0 or piv.min() <= PIVOT_TOL * scale):
        raise NotPositiveDefinite(f"pivot {piv.min():.3e} below tolerance")
    return SymmetricFactorization(
        n, lambda b: sla.cho_solve((c, low), b, check_finite=False), (n, 0, 0), kind="dense-cholesky", factors=(c,)
    )


def factor_spd(m):
    """Factorize a symmetric positive definite matrix.

    Raises :class:`NotPositiveDefinite` when a pivot is not larger than
    ``1e-12`` times the largest diagonal entry.
    """
    _check_square(m)
    n = m.shape[0]
    if n == 0:
        return SymmetricFactorization(0, lambda b: b, (0, 0, 0))
    if n < DENSE_LIMIT or not sp.issparse(m):
        return _spd_dense(_dense(m))
    m = sp.csc_matrix(m, dtype=float)
    scale = np.abs(m.diagonal()).max()
    if scale <= 0:
        raise NotPositiveDefinite("zero diagonal")
    try:
        lu = _splu_symmetric(m)
    except RuntimeError as exc:  # exactly singular pivot
        raise NotPositiveDefinite(str(exc)) from None
    piv = lu.U.diagonal()
    if piv.min() <= PIVOT_TOL * scale:
        raise NotPositiveDefinite(f"pivot {piv.min():.3e} below tolerance")

    def solve(b):
        return lu.solve(b)

    return SymmetricFactorization(n, solve, (n, 0, 0), perm=lu.perm_c, kind="sparse-ldlt", factors=lu)


def _block_inertia(d, tol):
    """Inertia of the block-diagonal factor returned by ``scipy.linalg.ldl``."""
    ev = np.linalg.eigvalsh(d)
    return int((ev > tol).sum()), int((ev < -tol).sum()), int((np.abs(ev) <= tol).sum())


def _indefinite_dense(a):
    n = a.shape[0]
    scale = np.abs(a).max(initial=0.0)
    lu, d, perm = sla.ldl(a, lower=True, check_finite=False)
    tol = PIVOT_TOL * max(scale, np.finfo(float).tiny)
    npos, nneg, nzero = _block_inertia(d, tol)
    if nzero or scale == 0:
        raise SingularMatrix("zero pivot in symmetric indefinite factorization")
    low = lu[perm]

    def solve(b):
        y = sla.solve_triangular(low, b[perm], lower=True, unit_diagonal=True, check_finite=False)
        z = np.linalg.solve(d, y)
        w = sla.solve_triangular(low.T, z, lower=False, unit_diagonal=True, check_finite=False)
        x = np.empty_like(w)
        x[perm] = w
        return x

    return SymmetricFactorization(n, solve, (npos, nneg, nzero), perm=perm, kind="dense-ldlt", factors=(lu, d, perm))


def _trailing_zero_block(m):
    """Size of the largest trailing principal block of ``m`` that is identically zero."""
    m = sp.csr_matrix(m)
    n = m.shape[0]
    coo = m.tocoo()
    nz = coo.data != 0
    r, c = coo.row[nz], coo.col[nz]
    # the trailing block starting at s is zero iff no nonzero (i, j) has min(i, j) >= s
    first = np.minimum(r, c).max(initial=-1) + 1
    return n - first


class SaddleFactorization(SymmetricFactorization):
    """Factorization of ``[[A, C^T], [C, 0]]`` via the exact augmented-Lagrangian form.

    The leading block ``A_g = A + g C^T C`` is SPD whenever the saddle system is
    nonsingular and ``A`` is positive semidefinite; the constraint block is
    handled by a dense Cholesky factorization of ``C A_g^{-1} C^T``.
    """

    def __init__(self, a, c, gamma=None):
        a = sp.csr_matrix(a, dtype=float)
        c = sp.csr_matrix(c, dtype=float)
        n, m = a.shape[0], c.shape[0]
        if c.shape[1] != n:
            raise DimensionMismatch(f"constraint matrix has {c.shape[1]} columns, expected {n}")
        if gamma is None:
            cc = np.asarray(c.multiply(c).sum(axis=0)).ravel()
            gamma = np.abs(a.diagonal()).max(initial=1.0) / max(cc.max(initial=1.0), 1e-300)
        self.gamma = float(gamma)
        a_g = a + self.gamma * (c.T @ c) if m else a
        try:
            self.leading = factor_spd(a_g.tocsc())
        except NotPositiveDefinite as exc:
            raise SingularMatrix(f"leading block not positive definite: {exc}") from None
        ct = c.T.toarray()
        self._ainv_ct = self.leading.solve(ct) if m else np.zeros((n, 0))
        self._c = c
        if m:
            schur = c @ self._ainv_ct
            schur = 0.5 * (schur + schur.T)
            try:
                self._schur = _spd_dense(schur)
            except NotPositiveDefinite:
                raise SingularMatrix("constraint rows are linearly dependent") from None
        self.n_primary = n
        self.n_constraints = m
        super().__init__(n + m, self._saddle_solve, (n, m, 0), kind="saddle-augmented")

    def _saddle_solve(self, b):
        n, m = self.n_primary, self.n_constraints
        f, g = b[:n], b[n:]
        if m == 0:
            return self.leading.solve(f)
        rhs = f + self.gamma * (self._c.T @ g)
        y = self.leading.solve(rhs)
        mu = self._schur.solve(self._c @ y - g)
        x = y - self._ainv_ct @ mu
        return np.concatenate([x, mu], axis=0)


def factor_saddle(a, c):
    """Factorize ``[[A, C^T], [C, 0]]`` given the blocks ``A`` and ``C``."""
    return SaddleFactorization(a, c)


def factor_symmetric_indefinite(m):
    """Factorize a symmetric (possibly indefinite) nonsingular matrix.

    Systems below 64 unknowns use dense Bunch-Kaufman ``LDL^T``.  Larger systems
    with a trailing zero block are treated as saddle-point systems; any other
    sparse matrix is factorized by SuperLU in symmetric mode and its inertia is
    read from the pivot signs.
    """
    _check_square(m)
    n = m.shape[0]
    if n == 0:
        return SymmetricFactorization(0, lambda b: b, (0, 0, 0))
    if n < DENSE_LIMIT or not sp.issparse(m):
        return _indefinite_dense(_dense(m))
    m = sp.csr_matrix(m, dtype=float)
    k = _trailing_zero_block(m)
    if 0 < k < n:
        s = n - k
        return SaddleFactorization(m[:s, :s], m[s:, :s])
    scale = np.abs(m.data).max(initial=0.0)
    try:
        lu = _splu_symmetric(m)
    except RuntimeError as exc:
        raise SingularMatrix(str(exc)) from None
    piv = lu.U.diagonal()
    if np.abs(piv).min() <= PIVOT_TOL * scale:
        raise SingularMatrix(f"pivot {np.abs(piv).min():.3e} below tolerance")
    inertia = (int((piv > 0).sum()), int((piv < 0).sum()), 0)
    return SymmetricFactorization(n, lu.solve, inertia, perm=lu.perm_c, kind="sparse-ldlt", factors=lu)


def reconstruction_error(fact, m):
    """Relative error of re-multiplying the factors against the (permuted) input."""
    a = _dense(m)
    if fact.kind == "dense-cholesky":
        (c,) = fact.factors
        low = np.tril(c)
        return np.abs(low @ low.T - a).max() / np.abs(a).max()
    if fact.kind == "dense-ldlt":
        lu, d, perm = fact.factors
        return np.abs(lu @ d @ lu.T - a).max() / np.abs(a).max()
    if fact.kind == "sparse-ldlt":
        lu = fact.factors
        pr = sp.csc_matrix((np.ones(lu.shape[0]), (lu.perm_r, np.arange(lu.shape[0]))))
        pc = sp.csc_matrix((np.ones(lu.shape[0]), (np.arange(lu.shape[0]), lu.perm_c)))
        diff = (lu.L @ lu.U - pr @ sp.csc_matrix(a) @ pc).toarray()
        return np.abs(diff).max() / np.abs(a).max()
    # generic: compare solves against identity columns
    x = fact.solve(np.eye(a.shape[0]))
    return np.abs(a @ x - np.eye(a.shape[0])).max()


class KroneckerSumSolver:
    """Direct solver for ``A = kron(M2, K1) + kron(K2, M1)`` on a tensor grid.

    Unknowns are ordered lexicographically with the first index running
    fastest (``i1 + n1*i2``).  ``M1`` and ``M2`` must be SPD; ``K1`` and ``K2``
    symmetric positive semidefinite.  The generalized eigenproblems
    ``K1 X1 = M1 X1 L1`` and ``K2 X2 = M2 X2 L2`` diagonalize ``A``:
    ``(X2 (x) X1)^T A (X2 (x) X1) = I (x) L1 + L2 (x) I``.

    If ``singular`` is true the smallest joint eigenvalue is treated as an
    exact zero (the constant kernel of a floating patch); :meth:`solve` then
    applies a generalized inverse and :attr:`kernel` holds the null vector.
    """

    def __init__(self, k1, m1, k2, m2, singular=False):
        k1, m1, k2, m2 = (_dense(x) for x in (k1, m1, k2, m2))
        self.n1, self.n2 = k1.shape[0], k2.shape[0]
        self.lam1, self.x1 = sla.eigh(k1, m1)
        self.lam2, self.x2 = sla.eigh(k2, m2)
        d = self.lam2[:, None] + self.lam1[None, :]
        self.singular = bool(singular)
        if singular:
            i2, i1 = np.unravel_index(np.argmin(np.abs(d)), d.shape)
            d[i2, i1] = np.inf
            self.kernel = np.kron(self.x2[:, i2], self.x1[:, i1])
        else:
            if d.min() <= PIVOT_TOL * np.abs(d).max():
                raise NotPositiveDefinite("Kronecker-sum matrix is singular")
            self.kernel = None
        self._dinv = 1.0 / d
        self.n = self.n1 * self.n2

    def _apply(self, b, scale):
        vec = b.ndim == 1
        t = b.reshape(self.n2, self.n1, -1)
        t = np.tensordot(self.x2.T, t, axes=(1, 0))
        t = np.matmul(self.x1.T[None], t)
        t = t * scale[:, :, None]
        t = np.tensordot(self.x2, t, axes=(1, 0))
        t = np.matmul(self.x1[None], t)
        out = t.reshape(self.n, -1)
        return out[:, 0] if vec else out

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionMismatch(f"rhs has {b.shape[0]} rows, solver has {self.n}")
        return self._apply(b, self._dinv)
