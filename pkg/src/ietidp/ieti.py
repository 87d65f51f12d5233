"""Dual-primal tearing and interconnecting: local saddle problems, primal basis,
coarse problem, the implicit reduced operator ``F`` and solution recovery.

With ``Btilde^(k)`` the dual constraint columns of patch ``k``, ``C^(k)`` its
vertex evaluation rows and ``Psi^(k)`` the energy-minimal primal basis::

    F = sum_k B^(k) Atilde^(k)^{-1} B^(k)^T + B_Pi A_Pi^{-1} B_Pi^T
    d = sum_k B^(k) Atilde^(k)^{-1} f^(k)   + B_Pi A_Pi^{-1} Psi^T f

where ``Atilde^(k)^{-1}`` denotes the first block of the solution of the local
saddle-point problem ``[[A, C^T], [C, 0]]`` with zero constraint data.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg
from .errors import DimensionMismatch, NotPositiveDefinite, SingularCoarse, SingularLocalSaddle, SingularMatrix

DENSE_PATCH_LIMIT = 400  # patches up to this size get explicit dense local operators


def _tensor_solver(system, interior):
    """Kronecker-sum solver on the kept (or interior) tensor grid, with local index map."""
    lay = system.layout
    sets = lay.tensor_index_sets(interior=interior)
    if system.kron is None or sets is None:
        return None
    r1, r2 = sets
    if r1.size == 0 or r2.size == 0:
        return None
    m2, k1, k2, m1 = (x.toarray() for x in system.kron)
    singular = (not interior) and lay.floating
    solver = linalg.KroneckerSumSolver(
        k1[np.ix_(r1, r1)], m1[np.ix_(r1, r1)], k2[np.ix_(r2, r2)], m2[np.ix_(r2, r2)], singular=singular
    )
    # position of every local dof inside the tensor sub-grid
    n1 = lay.n1
    lex = lay.kept[: lay.n_interior] if interior else lay.kept
    i1, i2 = lex % n1, lex // n1
    pos1 = np.full(n1, -1)
    pos1[r1] = np.arange(r1.size)
    pos2 = np.full(lay.n2, -1)
    pos2[r2] = np.arange(r2.size)
    sub = pos1[i1] + r1.size * pos2[i2]
    return solver, sub


class LocalSaddle:
    """Solver for ``[[A, C^T], [C, 0]] [x; mu] = [f; g]`` of one patch."""

    def __init__(self, system, c, patch=None, backend="auto"):
        self.patch = patch
        self.A = system.A
        self.C = sp.csr_matrix(c)
        self.n = system.n
        self.m = self.C.shape[0]
        self.floating = system.layout.floating
        t = _tensor_solver(system, interior=False) if backend in ("auto", "tensor") else None
        if backend == "tensor" and t is None:
            raise ValueError("tensor backend not available for this patch")
        if t is not None and (backend == "tensor" or self.n >= linalg.DENSE_LIMIT):
            self._init_tensor(*t)
        else:
            self._init_sparse()

    def _init_sparse(self):
        self.backend = "sparse"
        try:
            if self.m == 0:
                self._fact = linalg.factor_spd(self.A)
            else:
                big = sp.bmat([[self.A, self.C.T], [self.C, None]], format="csr")
                self._fact = linalg.factor_symmetric_indefinite(big)
        except (NotPositiveDefinite, SingularMatrix) as exc:
            raise SingularLocalSaddle(self.patch, f"({exc})") from None
        self.inertia = self._fact.inertia

    def _init_tensor(self, solver, sub):
        self.backend = "tensor"
        self._solver, self._sub = solver, sub
        n, m = self.n, self.m
        ct = self.C.T.toarray()
        self._gct = self._g(ct)
        if solver.kernel is not None:
            z = np.empty(n)
            z[:] = solver.kernel[sub]
            self._z = z
            cz = self.C @ z
            small = np.zeros((m + 1, m + 1))
            small[:m, :m] = self.C @ self._gct
            small[:m, m] = small[m, :m] = -cz
        else:
            self._z = None
            small = self.C @ self._gct
        small = 0.5 * (small + small.T)
        try:
            self._small = linalg.factor_symmetric_indefinite(small) if small.size else None
        except SingularMatrix:
            raise SingularLocalSaddle(self.patch, "(constraints do not fix the kernel)") from None
        if self._z is not None and m == 0:
            raise SingularLocalSaddle(self.patch, "(floating patch without primal constraints)")
        self.inertia = (n, m, 0)

    def _g(self, b):
        """Generalized inverse of A (tensor backend) applied in local ordering."""
        tmp = np.zeros((self._solver.n,) + b.shape[1:])
        tmp[self._sub] = b
        return self._solver.solve(tmp)[self._sub]

    def solve(self, f, g=None):
        """Return ``(x, mu)``; ``f`` may hold several right-hand sides as columns."""
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.n:
            raise DimensionMismatch(f"rhs has {f.shape[0]} rows, patch has {self.n} dofs")
        cols = f.shape[1:]
        if g is None:
            g = np.zeros((self.m,) + cols)
        if self.backend == "sparse":
            sol = self._fact.solve(np.concatenate([f, g], axis=0))
            return sol[: self.n], sol[self.n :]
        y = self._g(f)
        if self.m == 0:
            return y, np.zeros((0,) + cols)
        r1 = self.C @ y - g
        if self._z is None:
            mu = self._small.solve(r1)
            return y - self._gct @ mu, mu
        r2 = np.reshape(-(self._z @ f), (1,) + cols)
        sol = self._small.solve(np.concatenate([r1, r2], axis=0))
        mu, alpha = sol[: self.m], sol[self.m]
        return y - self._gct @ mu + np.multiply.outer(self._z, alpha), mu


class SkeletonSchur:
    """Schur complement of a reduced local system onto its boundary DOFs."""

    def __init__(self, system, backend="auto"):
        self.n_i = system.layout.n_interior
        self.n_g = system.n - self.n_i
        self.A_II, self.A_IG = system.A_II.tocsr(), system.A_IG.tocsr()
        self.A_GI, self.A_GG = system.A_GI.tocsr(), system.A_GG.tocsr()
        self.f = system.f
        self._tensor = None
        if self.n_i == 0:
            self.backend = "none"
            return
        t = _tensor_solver(system, interior=True) if backend in ("auto", "tensor") else None
        if t is not None and (backend == "tensor" or self.n_i >= linalg.DENSE_LIMIT):
            self.backend = "tensor"
            self._tensor = t
        else:
            self.backend = "sparse"
            self._fact = linalg.factor_spd(self.A_II)

    def solve_interior(self, b):
        if self.n_i == 0:
            return np.zeros_like(b)
        if self._tensor is not None:
            solver, sub = self._tensor
            tmp = np.zeros((solver.n,) + b.shape[1:])
            tmp[sub] = b
            return solver.solve(tmp)[sub]
        return self._fact.solve(b)

    def apply(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape[0] != self.n_g:
            raise DimensionMismatch(f"skeleton vector has {w.shape[0]} rows, expected {self.n_g}")
        out = self.A_GG @ w
        if self.n_i:
            out = out - self.A_GI @ self.solve_interior(self.A_IG @ w)
        return out

    def extend(self, w):
        """Discrete harmonic extension: full local vector with boundary values ``w``."""
        w = np.asarray(w, dtype=float)
        ui = -self.solve_interior(self.A_IG @ w) if self.n_i else np.zeros((0,) + w.shape[1:])
        return np.concatenate([ui, w], axis=0)

    def dense(self, idx=None):
        """Dense principal submatrix ``S[idx, idx]`` (boundary-local indices)."""
        idx = np.arange(self.n_g) if idx is None else np.asarray(idx, dtype=int)
        s = self.A_GG[idx][:, idx].toarray()
        if self.n_i and idx.size:
            rhs = self.A_IG[:, idx].toarray()
            s -= self.A_GI[idx] @ self.solve_interior(rhs)
        return 0.5 * (s + s.T)

    def condensed_rhs(self):
        fi, fg = self.f[: self.n_i], self.f[self.n_i :]
        return fg - self.A_GI @ self.solve_interior(fi) if self.n_i else fg.copy()


@dataclass
class PrimalBasis:
    psi: list  # per patch (n_k x n_pi_k)
    R: list  # per patch: global primal indices
    local_A: list  # per patch Psi^T A Psi
    A_pi: np.ndarray
    fact: object

    @property
    def n_primal(self):
        return self.A_pi.shape[0]

    def solve(self, b):
        if self.n_primal == 0:
            return np.zeros_like(b)
        return self.fact.solve(b)


def build_primal_basis(saddles, systems, cs):
    psi, local_a = [], []
    npi = cs.n_primal
    a_pi = np.zeros((npi, npi))
    for k, (s, sysk) in enumerate(zip(saddles, systems)):
        m = s.m
        x, _ = s.solve(np.zeros((s.n, m)), np.eye(m))
        psi.append(x)
        la = x.T @ (sysk.A @ x)
        la = 0.5 * (la + la.T)
        local_a.append(la)
        ids = cs.primal_ids[k]
        a_pi[np.ix_(ids, ids)] += la
    fact = None
    if npi:
        try:
            fact = linalg.factor_spd(a_pi)
        except NotPositiveDefinite as exc:
            raise SingularCoarse(f"coarse matrix not positive definite ({exc})") from None
    return PrimalBasis(psi, list(cs.primal_ids), local_a, a_pi, fact)


class IetiOperator:
    """Implicit reduced operator ``F`` and right-hand side ``d``."""

    def __init__(self, systems, cs, backend="auto", dense_patch_limit=DENSE_PATCH_LIMIT):
        self.systems = systems
        self.cs = cs
        self.n_lambda = cs.n_lambda
        self.saddles = [LocalSaddle(s, cs.C[k], k, backend) for k, s in enumerate(systems)]
        self.basis = build_primal_basis(self.saddles, systems, cs)
        self.rows, self.Bk = [], []
        self.G = []
        npi = cs.n_primal
        self.B_pi = np.zeros((self.n_lambda, npi))
        for k, s in enumerate(self.saddles):
            bk = cs.patch_block(k).tocsr()
            rows = np.unique(bk.tocoo().row)
            bk = bk[rows].tocsr()
            self.rows.append(rows)
            self.Bk.append(bk)
            if s.m:
                self.B_pi[np.ix_(rows, cs.primal_ids[k])] += bk @ self.basis.psi[k]
            if s.n <= dense_patch_limit and rows.size:
                x, _ = s.solve(bk.T.toarray())
                g = bk @ x
                self.G.append(0.5 * (g + g.T))
            else:
                self.G.append(None)
        self.n_applications = 0

    def apply(self, lam):
        """``F lam`` (``lam`` may have several columns)."""
        lam = np.asarray(lam, dtype=float)
        if lam.shape[0] != self.n_lambda:
            raise DimensionMismatch(f"multiplier vector has {lam.shape[0]} rows, expected {self.n_lambda}")
        self.n_applications += 1
        out = np.zeros_like(lam)
        for k, s in enumerate(self.saddles):
            rows = self.rows[k]
            if rows.size == 0:
                continue
            lk = lam[rows]
            if self.G[k] is not None:
                out[rows] += self.G[k] @ lk
            else:
                x, _ = s.solve(self.Bk[k].T @ lk)
                out[rows] += self.Bk[k] @ x
        if self.basis.n_primal:
            out += self.B_pi @ self.basis.solve(self.B_pi.T @ lam)
        return out

    __call__ = apply

    def primal_rhs(self):
        fp = np.zeros(self.basis.n_primal)
        for k, sysk in enumerate(self.systems):
            if self.saddles[k].m:
                fp[self.cs.primal_ids[k]] += self.basis.psi[k].T @ sysk.f
        return fp

    def rhs(self):
        d = np.zeros(self.n_lambda)
        for k, (s, sysk) in enumerate(zip(self.saddles, self.systems)):
            if self.rows[k].size:
                x, _ = s.solve(sysk.f)
                d[self.rows[k]] += self.Bk[k] @ x
        if self.basis.n_primal:
            d += self.B_pi @ self.basis.solve(self.primal_rhs())
        return d

    def reconstruct(self, lam):
        """Per-patch local coefficient vectors from the multipliers."""
        lam = np.asarray(lam, dtype=float)
        u_pi = self.basis.solve(self.primal_rhs() - self.B_pi.T @ lam) if self.basis.n_primal else np.zeros(0)
        out = []
        for k, (s, sysk) in enumerate(zip(self.saddles, self.systems)):
            rhs = sysk.f.copy()
            if self.rows[k].size:
                rhs -= self.Bk[k].T @ lam[self.rows[k]]
            x, _ = s.solve(rhs)
            if s.m:
                x = x + self.basis.psi[k] @ u_pi[self.cs.primal_ids[k]]
            out.append(x)
        return out

    def dense(self):
        """Explicit dense ``F`` (for tests on small problems)."""
        return self.apply(np.eye(self.n_lambda))
