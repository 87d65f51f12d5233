"""Patch-local Galerkin assembly, degree-of-freedom layout and Dirichlet elimination."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import splines
from .errors import SingularJacobian
from .geometry import SIDES, side_direction

QUAD_CHUNK = 2_000_000  # max number of local-matrix entries per vectorized chunk


def side_functions(n1, n2, side):
    """Lexicographic indices of the basis functions with nonzero trace on ``side``.

    Ordered by the edge index (increasing edge parameter).
    """
    if side == "S":
        return np.arange(n1)
    if side == "N":
        return np.arange(n1) + n1 * (n2 - 1)
    if side == "W":
        return n1 * np.arange(n2)
    if side == "E":
        return n1 - 1 + n1 * np.arange(n2)
    raise ValueError(side)


@dataclass
class DofLayout:
    """Interior-first ordering of the kept basis functions of one patch.

    ``kept[i]`` is the lexicographic index (``i1 + n1*i2``) of local DOF ``i``;
    the first ``n_interior`` local DOFs are the functions whose trace on the
    boundary of the unit square vanishes.  Functions touching a Dirichlet side,
    and corner functions at Dirichlet corners, are removed.
    """

    kv1: splines.KnotVector
    kv2: splines.KnotVector
    dirichlet_sides: frozenset = frozenset()
    dirichlet_corners: frozenset = frozenset()
    kept: np.ndarray = field(init=False)
    local_of_lex: np.ndarray = field(init=False)
    n_interior: int = field(init=False)
    removed: np.ndarray = field(init=False)

    def __post_init__(self):
        self.dirichlet_sides = frozenset(self.dirichlet_sides)
        self.dirichlet_corners = frozenset(self.dirichlet_corners)
        n1, n2 = self.kv1.n, self.kv2.n
        i1, i2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="xy")
        i1, i2 = i1.ravel(), i2.ravel()
        removed = np.zeros(n1 * n2, dtype=bool)
        for s in self.dirichlet_sides:
            removed[side_functions(n1, n2, s)] = True
        for c1, c2 in self.dirichlet_corners:
            removed[(n1 - 1) * c1 + n1 * (n2 - 1) * c2] = True
        interior = (i1 > 0) & (i1 < n1 - 1) & (i2 > 0) & (i2 < n2 - 1)
        lex = np.arange(n1 * n2)
        self.kept = np.concatenate([lex[interior & ~removed], lex[~interior & ~removed]])
        self.n_interior = int((interior & ~removed).sum())
        self.removed = removed
        self.local_of_lex = np.full(n1 * n2, -1)
        self.local_of_lex[self.kept] = np.arange(self.kept.size)

    @classmethod
    def for_patch(cls, topo, k):
        p = topo.patches[k]
        return cls(p.kv1, p.kv2, topo.dirichlet_sides[k], topo.dirichlet_corners(k))

    @property
    def n1(self):
        return self.kv1.n

    @property
    def n2(self):
        return self.kv2.n

    @property
    def n(self):
        return int(self.kept.size)

    @property
    def n_boundary(self):
        return self.n - self.n_interior

    @property
    def floating(self):
        return not self.dirichlet_sides and not self.dirichlet_corners

    def side_dofs(self, side):
        """``(edge_index, local_index)`` arrays of the kept functions on ``side``."""
        lex = side_functions(self.n1, self.n2, side)
        loc = self.local_of_lex[lex]
        keep = loc >= 0
        return np.nonzero(keep)[0], loc[keep]

    def tensor_index_sets(self, interior=False):
        """Per-direction index sets if the kept (or interior) set is a tensor grid, else None."""
        n1, n2 = self.n1, self.n2
        if interior:
            return np.arange(1, n1 - 1), np.arange(1, n2 - 1)
        if self.dirichlet_corners - self._corners_of_sides():
            return None
        d = self.dirichlet_sides
        r1 = np.arange(1 if "W" in d else 0, n1 - 1 if "E" in d else n1)
        r2 = np.arange(1 if "S" in d else 0, n2 - 1 if "N" in d else n2)
        return r1, r2

    def _corners_of_sides(self):
        out = set()
        for c1 in (0, 1):
            for c2 in (0, 1):
                if {"W" if c1 == 0 else "E", "S" if c2 == 0 else "N"} & self.dirichlet_sides:
                    out.add((c1, c2))
        return out

    def functions_at(self, xi1, xi2, tol=1e-14):
        """Local indices and values of kept functions nonzero at a parameter point."""
        f1, v1 = splines.basis_derivs(self.kv1, [xi1], 0)
        f2, v2 = splines.basis_derivs(self.kv2, [xi2], 0)
        p1, p2 = self.kv1.p, self.kv2.p
        i1 = f1[0] + np.arange(p1 + 1)
        i2 = f2[0] + np.arange(p2 + 1)
        vals = np.outer(v2[0, 0], v1[0, 0]).ravel()
        lex = (i1[None, :] + self.n1 * i2[:, None]).ravel()
        loc = self.local_of_lex[lex]
        keep = (np.abs(vals) > tol) & (loc >= 0)
        return loc[keep], vals[keep]

    def to_lex(self, u_local):
        """Scatter a local coefficient vector to the full lexicographic grid (zeros at removed)."""
        out = np.zeros(self.n1 * self.n2)
        out[self.kept] = u_local
        return out


@dataclass
class LocalSystem:
    """Stiffness matrix and load vector of one patch.

    Before Dirichlet elimination the ordering is lexicographic over all
    ``n1*n2`` functions; afterwards it is the layout's interior-first order.
    ``kron`` (if the geometry is separable) holds 1D factors with
    ``A_lex = kron(M2, K1) + kron(K2, M1)``.
    """

    A: sp.csr_matrix
    f: np.ndarray
    layout: DofLayout
    reduced: bool = False
    kron: tuple = None

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def n_interior(self):
        return self.layout.n_interior if self.reduced else 0

    def block(self, rows, cols):
        ni = self.layout.n_interior
        sl = {"I": slice(0, ni), "G": slice(ni, self.n)}
        return self.A[sl[rows], sl[cols]]

    @property
    def A_II(self):
        return self.block("I", "I")

    @property
    def A_IG(self):
        return self.block("I", "G")

    @property
    def A_GI(self):
        return self.block("G", "I")

    @property
    def A_GG(self):
        return self.block("G", "G")


def _rhs_callable(rhs):
    if rhs is None:
        return lambda x, y: np.zeros_like(x)
    if callable(rhs):
        return rhs
    c = float(rhs)
    return lambda x, y: np.full_like(x, c)


def _quadrature(patch, nq=None):
    """Per-direction Gauss data and basis values on all elements."""
    out = []
    for kv in (patch.kv1, patch.kv2):
        x, w = splines.gauss_points(kv, nq)
        first, vals = splines.basis_derivs(kv, x.ravel(), 2)
        ne, q = x.shape
        out.append((x, w, first.reshape(ne, q), vals.reshape(ne, q, 3, kv.p + 1)))
    return out


def _elem_chunks(ne2, per_elem2):
    step = max(1, QUAD_CHUNK // max(per_elem2, 1))
    for s in range(0, ne2, step):
        yield slice(s, min(ne2, s + step))


def assemble_stiffness_quadrature(patch):
    """Stiffness matrix by 2D element quadrature (lexicographic order, all functions)."""
    (x1, w1, f1, v1), (x2, w2, f2, v2) = _quadrature(patch)
    p1, p2 = patch.kv1.p, patch.kv2.p
    n1 = patch.kv1.n
    ne1, q1 = x1.shape
    ne2, q2 = x2.shape
    rows, cols, data = [], [], []
    for ch in _elem_chunks(ne2, ne1 * q1 * q2 * 4 * (p1 + 1) ** 2 * (p2 + 1) ** 2 // max(q1 * q2, 1)):
        X1 = x1[:, :, None, None]
        X2 = x2[None, None, ch, :]
        X1, X2 = np.broadcast_arrays(X1, X2)
        jac = patch.geometry.jacobian(X1, X2)  # (e1, q1, e2, q2, 2, 2)
        det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
        if np.abs(det).min() < 1e-14:
            raise SingularJacobian("|det J| below 1e-14 at a quadrature point")
        jtj = np.einsum("...ab,...ac->...bc", jac, jac)
        inv = np.linalg.inv(jtj) * np.abs(det)[..., None, None]
        wt = w1[:, :, None, None] * w2[None, None, ch, :] * patch.nu
        g = inv * wt[..., None, None]
        # basis: value and first derivative in each direction
        a0, a1 = v1[:, :, 0, :], v1[:, :, 1, :]  # (e1, q1, p1+1)
        b0, b1 = v2[ch, :, 0, :], v2[ch, :, 1, :]  # (e2, q2, p2+1)
        k = np.einsum("iqjr,iqa,iqc,jrb,jrd->ijbadc", g[..., 0, 0], a1, a1, b0, b0, optimize=True)
        k += np.einsum("iqjr,iqa,iqc,jrb,jrd->ijbadc", g[..., 1, 1], a0, a0, b1, b1, optimize=True)
        k += np.einsum("iqjr,iqa,iqc,jrb,jrd->ijbadc", g[..., 0, 1], a1, a0, b0, b1, optimize=True)
        k += np.einsum("iqjr,iqa,iqc,jrb,jrd->ijbadc", g[..., 1, 0], a0, a1, b1, b0, optimize=True)
        i1 = f1[:, 0][:, None] + np.arange(p1 + 1)  # (e1, a)
        i2 = f2[ch, 0][:, None] + np.arange(p2 + 1)  # (e2, b)
        lex = i1[:, None, None, :] + n1 * i2[None, :, :, None]  # (e1, e2, b, a)
        r = np.broadcast_to(lex[..., :, :, None, None], k.shape)
        c = np.broadcast_to(lex[..., None, None, :, :], k.shape)
        rows.append(r.ravel())
        cols.append(c.ravel())
        data.append(k.ravel())
    n = patch.ndofs
    a = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()
    a.sum_duplicates()
    return a


def separable_factors(patch):
    """1D factors ``(M2, K1, K2, M1)`` with ``A = kron(M2, K1) + kron(K2, M1)``, or None."""
    metric = patch.geometry.separable_metric()
    if metric is None:
        return None
    a1, b1, a2, b2 = metric
    k1 = patch.nu * splines.galerkin_1d(patch.kv1, 1, 1, a1)
    m1 = patch.nu * splines.galerkin_1d(patch.kv1, 0, 0, a2)
    m2 = splines.galerkin_1d(patch.kv2, 0, 0, b1)
    k2 = splines.galerkin_1d(patch.kv2, 1, 1, b2)
    return m2, k1, k2, m1


def assemble_load(patch, rhs):
    """Load vector ``int f phi_i dx`` by element quadrature (lexicographic order)."""
    f = _rhs_callable(rhs)
    (x1, w1, f1, v1), (x2, w2, f2, v2) = _quadrature(patch)
    p1, p2 = patch.kv1.p, patch.kv2.p
    n1 = patch.kv1.n
    X1, X2 = np.broadcast_arrays(x1[:, :, None, None], x2[None, None, :, :])
    jac = patch.geometry.jacobian(X1, X2)
    det = np.abs(jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0])
    xy = patch.geometry.eval(X1, X2)
    val = f(xy[..., 0], xy[..., 1]) * det * w1[:, :, None, None] * w2[None, None, :, :]
    loc = np.einsum("iqjr,iqa,jrb->ijba", val, v1[:, :, 0, :], v2[:, :, 0, :])
    i1 = f1[:, 0][:, None] + np.arange(p1 + 1)
    i2 = f2[:, 0][:, None] + np.arange(p2 + 1)
    lex = i1[:, None, None, :] + n1 * i2[None, :, :, None]
    return np.bincount(lex.ravel(), weights=loc.ravel(), minlength=patch.ndofs)


def assemble(patch, layout=None, rhs=1.0, method="auto"):
    """Assemble the full (lexicographic) stiffness matrix and load vector.

    ``method`` is ``"quadrature"`` (2D element loop), ``"separable"`` (Kronecker
    product of 1D matrices, only for maps with a separable metric) or ``"auto"``.
    Both use Gauss-Legendre quadrature with ``p+1`` points per span.
    """
    if layout is None:
        layout = DofLayout(patch.kv1, patch.kv2)
    kron = separable_factors(patch) if method in ("auto", "separable") else None
    if method == "separable" and kron is None:
        raise ValueError("geometry map is not separable")
    if kron is not None:
        m2, k1, k2, m1 = kron
        a = (sp.kron(m2, k1) + sp.kron(k2, m1)).tocsr()
    else:
        a = assemble_stiffness_quadrature(patch)
    a.sum_duplicates()
    a = 0.5 * (a + a.T)
    return LocalSystem(a.tocsr(), assemble_load(patch, rhs), layout, reduced=False, kron=kron)


def eliminate_dirichlet(system, layout=None):
    """Drop removed functions and permute to interior-first order."""
    layout = system.layout if layout is None else layout
    idx = layout.kept
    a = system.A[idx][:, idx].tocsr()
    a.sort_indices()
    return LocalSystem(a, system.f[idx], layout, reduced=True, kron=system.kron)


def assemble_reduced(patch, layout, rhs=1.0, method="auto"):
    return eliminate_dirichlet(assemble(patch, layout, rhs, method), layout)


def energy_quadrature(patch, u_lex, nq=None):
    """``int nu |grad u_h|^2`` by independent (higher-order) quadrature."""
    nq = patch.p + 3 if nq is None else nq
    (x1, w1, f1, v1), (x2, w2, f2, v2) = _quadrature(patch, nq)
    X1, X2 = np.broadcast_arrays(x1.reshape(-1)[:, None], x2.reshape(-1)[None, :])
    g = gradient(patch, u_lex, X1, X2)
    jac = patch.geometry.jacobian(X1, X2)
    det = np.abs(np.linalg.det(jac))
    w = w1.reshape(-1)[:, None] * w2.reshape(-1)[None, :]
    return float(patch.nu * np.sum((g**2).sum(-1) * det * w))


def _tensor_eval(patch, u_lex, xi1, xi2, d1, d2):
    xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, float), np.asarray(xi2, float))
    f1, v1 = splines.basis_derivs(patch.kv1, xi1.ravel(), max(d1, 2))
    f2, v2 = splines.basis_derivs(patch.kv2, xi2.ravel(), max(d2, 2))
    p1, p2 = patch.kv1.p, patch.kv2.p
    i1 = f1[:, None] + np.arange(p1 + 1)
    i2 = f2[:, None] + np.arange(p2 + 1)
    c = u_lex.reshape(patch.kv2.n, patch.kv1.n)[i2[:, :, None], i1[:, None, :]]
    return np.einsum("qa,qb,qba->q", v1[:, d1], v2[:, d2], c).reshape(xi1.shape)


def evaluate(patch, u_lex, xi1, xi2):
    return _tensor_eval(patch, u_lex, xi1, xi2, 0, 0)


def param_gradient(patch, u_lex, xi1, xi2):
    return np.stack([_tensor_eval(patch, u_lex, xi1, xi2, 1, 0), _tensor_eval(patch, u_lex, xi1, xi2, 0, 1)], -1)


def gradient(patch, u_lex, xi1, xi2):
    """Physical gradient ``J^{-T} grad_xi u``."""
    g = param_gradient(patch, u_lex, xi1, xi2)
    jac = patch.geometry.jacobian(xi1, xi2)
    return np.linalg.solve(np.swapaxes(jac, -1, -2), g[..., None])[..., 0]


def laplacian(patch, u_lex, xi1, xi2):
    """Physical Laplacian of ``u_h`` through the map Hessian."""
    hh = np.stack(
        [
            np.stack([_tensor_eval(patch, u_lex, xi1, xi2, 2, 0), _tensor_eval(patch, u_lex, xi1, xi2, 1, 1)], -1),
            np.stack([_tensor_eval(patch, u_lex, xi1, xi2, 1, 1), _tensor_eval(patch, u_lex, xi1, xi2, 0, 2)], -1),
        ],
        -1,
    )
    jac = patch.geometry.jacobian(xi1, xi2)
    grad = gradient(patch, u_lex, xi1, xi2)
    hg = patch.geometry.hessian(xi1, xi2)  # (..., m, b, c)
    corr = hh - np.einsum("...m,...mbc->...bc", grad, hg)
    jinv = np.linalg.inv(jac)
    hx = np.einsum("...ba,...bc,...cd->...ad", jinv, corr, jinv)
    return hx[..., 0, 0] + hx[..., 1, 1]


__all__ = [
    "SIDES",
    "DofLayout",
    "LocalSystem",
    "assemble",
    "assemble_reduced",
    "eliminate_dirichlet",
    "side_functions",
    "side_direction",
]
