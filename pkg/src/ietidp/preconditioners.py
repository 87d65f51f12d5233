"""Preconditioners for the reduced multiplier system.

* :class:`ScaledDirichlet` with selection scaling: ``M = B_G D S D B_G^T``
  where ``D`` keeps exactly the refined-side DOFs that carry a single
  constraint (``I_Z``).
* :class:`Deluxe`: per interface ``(S_f^{-1} + P S_c^{-1} P^T)^{-1}`` built from
  the Schur complements restricted to the open edge on both sides.
"""

import numpy as np
import scipy.linalg as sla

from . import splines
from .assembly import side_functions
from .errors import DimensionMismatch, SingularEdgeBlock
from .ieti import DENSE_PATCH_LIMIT, SkeletonSchur


def build_schur(systems, backend="auto"):
    return [SkeletonSchur(s, backend) for s in systems]


def selection_scaling(cs, systems):
    """Per-patch 0/1 diagonal over the boundary DOFs (boundary-local indexing)."""
    d = [np.zeros(s.n - s.layout.n_interior) for s in systems]
    for k, loc in cs.I_Z:
        ni = systems[k].layout.n_interior
        d[k][loc - ni] = 1.0
    return d


class ScaledDirichlet:
    """Scaled Dirichlet preconditioner with selection scaling."""

    def __init__(self, cs, systems, schur=None, dense_patch_limit=DENSE_PATCH_LIMIT):
        self.cs = cs
        self.n_lambda = cs.n_lambda
        self.schur = build_schur(systems) if schur is None else schur
        self.D = selection_scaling(cs, systems)
        self._blocks = []
        for k, s in enumerate(systems):
            ni = s.layout.n_interior
            bg = cs.patch_block(k)[:, ni:].tocsr()
            sel = np.nonzero(self.D[k])[0]
            bsel = bg[:, sel].tocsc()
            rows = np.unique(bsel.tocoo().row)
            bsel = bsel[rows].tocsr()
            dense = self.schur[k].dense(sel) if (s.n <= dense_patch_limit or sel.size <= 64) and sel.size else None
            self._blocks.append((k, sel, rows, bsel, dense))

    def apply(self, mu):
        mu = np.asarray(mu, dtype=float)
        if mu.shape[0] != self.n_lambda:
            raise DimensionMismatch(f"multiplier vector has {mu.shape[0]} rows, expected {self.n_lambda}")
        out = np.zeros_like(mu)
        for k, sel, rows, bsel, dense in self._blocks:
            if rows.size == 0:
                continue
            v = bsel.T @ mu[rows]
            if dense is not None:
                z = dense @ v
            else:
                w = np.zeros((self.schur[k].n_g,) + mu.shape[1:])
                w[sel] = v
                z = self.schur[k].apply(w)[sel]
            out[rows] += bsel @ z
        return out

    __call__ = apply

    def dense(self):
        return self.apply(np.eye(self.n_lambda))


def _inv_spd(m, what):
    try:
        c = sla.cho_factor(m, lower=True)
    except np.linalg.LinAlgError:
        raise SingularEdgeBlock(f"{what} is not positive definite") from None
    return sla.cho_solve(c, np.eye(m.shape[0]))


class Deluxe:
    """Deluxe-type edge preconditioner."""

    def __init__(self, cs, couplings, systems, schur=None):
        self.cs = cs
        self.n_lambda = cs.n_lambda
        self.schur = build_schur(systems) if schur is None else schur
        self.blocks = []
        for ci, c in enumerate(couplings):
            rows = np.nonzero(cs.row_coupling == ci)[0]
            if rows.size == 0:
                continue
            lf, lc = systems[c.fine].layout, systems[c.coarse].layout
            f_loc = np.array([cs.dual_rows[r][2] for r in rows])
            f_edge = np.array([cs.dual_rows[r][3] for r in rows])
            c_lex = side_functions(lc.n1, lc.n2, c.coarse_side)
            c_loc = lc.local_of_lex[c_lex]
            ix = set(cs.vertex_dofs[c.coarse].tolist())
            cols = [
                j
                for j in range(c_lex.size)
                if c_loc[j] >= 0 and np.any(np.abs(c.E[:, j]) > 0) and int(c_loc[j]) not in ix
            ]
            cols = np.array(cols, dtype=int)
            s_f = self.schur[c.fine].dense(f_loc - lf.n_interior)
            s_f_inv = _inv_spd(s_f, f"fine edge block of interface {c.interface}")
            comb = s_f_inv
            if cols.size:
                s_c = self.schur[c.coarse].dense(c_loc[cols] - lc.n_interior)
                s_c_inv = _inv_spd(s_c, f"coarse edge block of interface {c.interface}")
                p = c.E[np.ix_(f_edge, cols)]
                comb = comb + p @ s_c_inv @ p.T
            comb = 0.5 * (comb + comb.T)
            block = _inv_spd(comb, f"combined block of interface {c.interface}")
            self.blocks.append((rows, 0.5 * (block + block.T)))

    def apply(self, mu):
        mu = np.asarray(mu, dtype=float)
        if mu.shape[0] != self.n_lambda:
            raise DimensionMismatch(f"multiplier vector has {mu.shape[0]} rows, expected {self.n_lambda}")
        out = np.zeros_like(mu)
        for rows, block in self.blocks:
            out[rows] += block @ mu[rows]
        return out

    __call__ = apply

    def dense(self):
        return self.apply(np.eye(self.n_lambda))


def make_preconditioner(kind, cs, couplings, systems, schur=None):
    if kind in (None, "none"):
        return None
    if kind == "selection":
        return ScaledDirichlet(cs, systems, schur)
    if kind == "deluxe":
        return Deluxe(cs, couplings, systems, schur)
    raise ValueError(f"unknown preconditioner {kind!r}")


def jump_operator(cs, systems, w):
    """``v = D B_G^T B_G w`` for per-patch boundary vectors ``w`` (boundary-local)."""
    d = selection_scaling(cs, systems)
    full = np.zeros(cs.B.shape[1])
    for k, s in enumerate(systems):
        ni = s.layout.n_interior
        full[cs.offsets[k] + ni : cs.offsets[k + 1]] = w[k]
    bw = cs.B @ full
    btb = cs.B.T @ bw
    out = []
    for k, s in enumerate(systems):
        ni = s.layout.n_interior
        out.append(d[k] * btb[cs.offsets[k] + ni : cs.offsets[k + 1]])
    return out


def trace_values(topo, layout, k, side, w_boundary, t):
    """Evaluate the trace on ``side`` of patch ``k`` of boundary coefficients at edge params ``t``."""
    full = np.zeros(layout.n)
    full[layout.n_interior :] = w_boundary
    lex = np.zeros(layout.n1 * layout.n2)
    lex[layout.kept] = full
    coeff = lex[side_functions(layout.n1, layout.n2, side)]
    return splines.evaluate(topo.patches[k].side_kv(side), coeff, t)


def jump_check(topo, couplings, cs, systems, w, npts=50):
    """Traces of ``v = D B_G^T B_G w`` and of the jumps of ``w`` on every interface.

    Returns a list of dicts with keys ``fine_v``, ``coarse_v`` (traces of v on
    both sides) and ``jump`` (``w_fine - w_coarse`` on the interface), all at
    ``npts`` points.
    """
    v = jump_operator(cs, systems, w)
    t = np.linspace(0, 1, npts)
    out = []
    for c in couplings:
        lf, lc = systems[c.fine].layout, systems[c.coarse].layout
        s = c.coarse_param(t)
        wf = trace_values(topo, lf, c.fine, c.fine_side, w[c.fine], t)
        wc = trace_values(topo, lc, c.coarse, c.coarse_side, w[c.coarse], s)
        out.append(
            {
                "coupling": c,
                "fine_v": trace_values(topo, lf, c.fine, c.fine_side, v[c.fine], t),
                "coarse_v": trace_values(topo, lc, c.coarse, c.coarse_side, v[c.coarse], s),
                "jump": wf - wc,
            }
        )
    return out, v
