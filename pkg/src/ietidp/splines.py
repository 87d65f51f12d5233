"""Univariate B-splines on open knot vectors.

Evaluation follows the Cox-de Boor recursion (vectorized over evaluation
points), knot insertion uses Boehm's single-knot recurrence.  All knot
comparisons use an absolute tolerance of ``1e-12``.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.sparse as sp

from .errors import InvalidKnotVector, InvalidSubinterval, NotNested, OutOfDomain

KNOT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Open knot vector of degree ``p`` on [0, 1]."""

    p: int
    knots: np.ndarray

    def __post_init__(self):
        k = np.array(self.knots, dtype=float)
        k.setflags(write=False)
        object.__setattr__(self, "knots", k)
        p = self.p
        if p < 1:
            raise InvalidKnotVector("degree must be at least 1")
        if k.ndim != 1 or k.size < 2 * p + 2:
            raise InvalidKnotVector(f"need at least {2 * p + 2} knots for degree {p}")
        if np.any(np.diff(k) < 0):
            raise InvalidKnotVector("knots must be nondecreasing")
        if np.abs(k[: p + 1]).max() > KNOT_TOL or np.abs(k[-p - 1 :] - 1).max() > KNOT_TOL:
            raise InvalidKnotVector("knot vector must be open on [0, 1]")
        n = k.size - p - 1
        idx = np.arange(1, n)
        if np.any(k[idx + p] - k[idx] <= KNOT_TOL):
            raise InvalidKnotVector("interior knot multiplicity exceeds p")

    @property
    def n(self):
        """Number of basis functions."""
        return self.knots.size - self.p - 1

    @property
    def breaks(self):
        """Distinct knot values."""
        return unique_knots(self.knots)

    @property
    def spans(self):
        b = self.breaks
        return np.column_stack([b[:-1], b[1:]])

    @property
    def h(self):
        """Grid size: the largest knot span."""
        return float(np.diff(self.breaks).max())

    @property
    def h_min(self):
        return float(np.diff(self.breaks).min())

    @property
    def n_elements(self):
        return self.breaks.size - 1

    def __eq__(self, other):
        return (
            isinstance(other, KnotVector)
            and self.p == other.p
            and self.knots.size == other.knots.size
            and np.abs(self.knots - other.knots).max() <= KNOT_TOL
        )

    def __hash__(self):
        return hash((self.p, tuple(np.round(self.knots, 12))))

    def __repr__(self):
        return f"KnotVector(p={self.p}, knots={np.array2string(self.knots, precision=6, separator=',')})"


def uniform(p, n_elements):
    """Open uniform knot vector with maximal smoothness."""
    inner = np.linspace(0.0, 1.0, n_elements + 1)[1:-1]
    return KnotVector(p, np.concatenate([np.zeros(p + 1), inner, np.ones(p + 1)]))


def unique_knots(knots):
    knots = np.asarray(knots, dtype=float)
    keep = np.concatenate([[True], np.diff(knots) > KNOT_TOL])
    return knots[keep]


def _check_points(x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < -KNOT_TOL) or np.any(x > 1 + KNOT_TOL):
        raise OutOfDomain(f"parameter outside [0, 1]: {x[(x < 0) | (x > 1)][:3]}")
    return np.clip(x, 0.0, 1.0)


def find_span(kv, x):
    """Knot span index ``s`` with ``knots[s] <= x < knots[s+1]`` (last span at x=1)."""
    k = kv.knots
    s = np.searchsorted(k, x, side="right") - 1
    return np.clip(s, kv.p, kv.n - 1)


def basis_derivs(kv, x, nd=0):
    """Nonzero basis functions and derivatives at many points.

    Returns ``(first, vals)`` where ``first[q]`` is the index of the first
    nonzero function at ``x[q]`` and ``vals[q, d, a]`` is the ``d``-th
    derivative of function ``first[q] + a``.
    """
    x = _check_points(x)
    p, u = kv.p, kv.knots
    npts = x.size
    span = find_span(kv, x)
    ndu = np.zeros((npts, p + 1, p + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((npts, p + 1))
    right = np.zeros((npts, p + 1))
    for j in range(1, p + 1):
        left[:, j] = x - u[span + 1 - j]
        right[:, j] = u[span + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved
    vals = np.zeros((npts, nd + 1, p + 1))
    vals[:, 0, :] = ndu[:, :, p]
    for r in range(p + 1):
        a = np.zeros((2, npts, p + 1))
        a[0, :, 0] = 1.0
        s1, s2 = 0, 1
        for k in range(1, min(nd, p) + 1):
            d = np.zeros(npts)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, :, 0] = a[s1, :, 0] / ndu[:, pk + 1, rk]
                d = a[s2, :, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, :, j] = (a[s1, :, j] - a[s1, :, j - 1]) / ndu[:, pk + 1, rk + j]
                d = d + a[s2, :, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[s2, :, k] = -a[s1, :, k - 1] / ndu[:, pk + 1, r]
                d = d + a[s2, :, k] * ndu[:, r, pk]
            vals[:, k, r] = d
            s1, s2 = s2, s1
    for k in range(1, min(nd, p) + 1):
        vals[:, k, :] *= factorial(p) / factorial(p - k)
    return span - p, vals


def eval_basis(kv, x):
    """Values of the p+1 basis functions that may be nonzero at scalar ``x``."""
    first, vals = basis_derivs(kv, [x], 0)
    return int(first[0]), vals[0, 0].copy()


def eval_derivs(kv, x, order=1):
    """Derivatives of given ``order`` (at most 2 is typical) at scalar ``x``."""
    first, vals = basis_derivs(kv, [x], order)
    return int(first[0]), vals[0, order].copy()


def collocation(kv, x, order=0):
    """Sparse matrix ``M[q, i] = d^order N_i(x_q)``."""
    x = np.atleast_1d(np.asarray(x, float))
    first, vals = basis_derivs(kv, x, order)
    p = kv.p
    rows = np.repeat(np.arange(x.size), p + 1)
    cols = (first[:, None] + np.arange(p + 1)[None, :]).ravel()
    return sp.csr_matrix((vals[:, order, :].ravel(), (rows, cols)), shape=(x.size, kv.n))


def evaluate(kv, coeffs, x, order=0):
    """Evaluate the spline with coefficients ``coeffs`` (or its derivative)."""
    return collocation(kv, x, order) @ np.asarray(coeffs, float)


def greville(kv):
    p, k = kv.p, kv.knots
    return np.array([k[i + 1 : i + p + 1].mean() for i in range(kv.n)])


def dyadic_refine(kv):
    """Insert the midpoint of every nonempty knot span once."""
    b = kv.breaks
    mids = 0.5 * (b[:-1] + b[1:])
    return KnotVector(kv.p, np.sort(np.concatenate([kv.knots, mids])))


def multiset_difference(fine, coarse):
    """Knots of ``fine`` not accounted for by ``coarse`` (multiset sense), or None."""
    extra = []
    i = j = 0
    fine, coarse = np.asarray(fine), np.asarray(coarse)
    while i < fine.size and j < coarse.size:
        if abs(fine[i] - coarse[j]) <= KNOT_TOL:
            i += 1
            j += 1
        elif fine[i] < coarse[j]:
            extra.append(fine[i])
            i += 1
        else:
            return None
    if j < coarse.size:
        return None
    extra.extend(fine[i:])
    return np.array(extra)


def contains(fine, coarse):
    """True if the spline space of ``coarse`` is a subspace of that of ``fine``."""
    return fine.p == coarse.p and multiset_difference(fine.knots, coarse.knots) is not None


def boehm_matrix(knots, p, new_knots):
    """Coefficient map for inserting ``new_knots`` one at a time.

    Works on raw knot arrays (multiplicity ``p + 1`` allowed), returning the
    refined knot array and the matrix ``T`` with ``c_fine = T @ c_coarse``.
    """
    u = np.array(knots, dtype=float)
    n = u.size - p - 1
    t = np.eye(n)
    for x in np.sort(np.asarray(new_knots, dtype=float)):
        k = int(np.searchsorted(u, x, side="right") - 1)
        k = min(max(k, p), u.size - p - 2)
        nn = u.size - p - 1
        step = np.zeros((nn + 1, nn))
        idx = np.arange(nn + 1)
        lo = idx <= k - p
        step[idx[lo], idx[lo]] = 1.0
        hi = idx >= k + 1
        step[idx[hi], idx[hi] - 1] = 1.0
        for i in range(k - p + 1, k + 1):
            alpha = (x - u[i]) / (u[i + p] - u[i])
            step[i, i] = alpha
            step[i, i - 1] = 1.0 - alpha
        t = step @ t
        u = np.insert(u, k + 1, x)
    return u, t


def insert_knots(coarse, fine):
    """Embedding matrix ``E`` (n_fine x n_coarse) of the coarse space into the fine one.

    Column ``j`` holds the fine-basis coefficients of coarse function ``j``.
    """
    if coarse.p != fine.p:
        raise NotNested("degrees differ")
    extra = multiset_difference(fine.knots, coarse.knots)
    if extra is None:
        raise NotNested("coarse knot multiset is not contained in the fine one")
    _, t = boehm_matrix(coarse.knots, coarse.p, extra)
    t[np.abs(t) < 1e-15] = 0.0
    return t


def restrict(kv, a, b):
    """Knot vector of the restriction of the spline space to [a, b], rescaled to [0, 1]."""
    if not (-KNOT_TOL <= a < b <= 1 + KNOT_TOL) or b - a <= KNOT_TOL:
        raise InvalidSubinterval(f"invalid subinterval [{a}, {b}]")
    k = kv.knots
    inner = k[(k > a + KNOT_TOL) & (k < b - KNOT_TOL)]
    p = kv.p
    new = np.concatenate([np.full(p + 1, a), inner, np.full(p + 1, b)])
    new = (new - a) / (b - a)
    new[: p + 1] = 0.0
    new[-p - 1 :] = 1.0
    return KnotVector(p, new)


def restriction_matrix(kv, a, b):
    """Matrix ``R`` with ``restricted_coeffs = R @ coeffs`` for splines on [a, b].

    Rows correspond to the basis of :func:`restrict` ``(kv, a, b)``; columns to
    ``kv``'s basis.
    """
    p = kv.p
    k = kv.knots
    ins = []
    for x in (a, b):
        mult = int(np.sum(np.abs(k - x) <= KNOT_TOL))
        ins.extend([x] * (p + 1 - mult))
    u, t = boehm_matrix(k, p, ins)
    n_full = u.size - p - 1
    sel = [i for i in range(n_full) if u[i] >= a - KNOT_TOL and u[i + p + 1] <= b + KNOT_TOL]
    r = t[sel]
    r[np.abs(r) < 1e-15] = 0.0
    return r


def reverse(kv):
    """Knot vector of the reflected parameterization ``x -> 1 - x``."""
    return KnotVector(kv.p, 1.0 - kv.knots[::-1])


def gauss_points(kv, nq=None):
    """Gauss-Legendre points and weights on every knot span.

    Returns arrays of shape (n_elements, nq).
    """
    nq = kv.p + 1 if nq is None else nq
    xg, wg = np.polynomial.legendre.leggauss(nq)
    sp_ = kv.spans
    a, b = sp_[:, :1], sp_[:, 1:]
    return 0.5 * (a + b) + 0.5 * (b - a) * xg[None, :], 0.5 * (b - a) * wg[None, :]


def galerkin_1d(kv, di, dj, weight=None, nq=None):
    """Sparse 1D matrix ``int w(x) N_i^(di)(x) N_j^(dj)(x) dx``."""
    x, w = gauss_points(kv, nq)
    x, w = x.ravel(), w.ravel()
    if weight is not None:
        w = w * weight(x)
    first, vals = basis_derivs(kv, x, max(di, dj))
    vi, vj = vals[:, di, :], vals[:, dj, :]
    p = kv.p
    local = np.einsum("q,qa,qb->qab", w, vi, vj)
    ids = first[:, None] + np.arange(p + 1)[None, :]
    rows = np.repeat(ids[:, :, None], p + 1, axis=2)
    cols = np.repeat(ids[:, None, :], p + 1, axis=1)
    m = sp.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())), shape=(kv.n, kv.n)).tocsr()
    m.sum_duplicates()
    return m
