"""Interface coupling for nested, possibly non-matching, patch interfaces.

For every interface one side is designated *fine* (its trace space contains
the other side's) and the other *coarse*.  Each fine trace function ``i``
yields the constraint ``u_i^fine - sum_j E_ij u_j^coarse = 0`` where ``E``
embeds the coarse trace space into the fine one.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import splines
from .errors import NotNested
from .geometry import side_direction, sides_at

ZERO_TOL = 1e-14


@dataclass
class InterfaceCoupling:
    """Oriented coupling data of one interface.

    ``coarse_param(t) = s0 + (s1 - s0) t`` maps the fine edge parameter to the
    coarse edge parameter.  ``E`` has one row per fine trace function and one
    column per coarse trace function (all functions of the side, including
    Dirichlet-removed ones).
    """

    interface: int
    fine: int
    fine_side: str
    coarse: int
    coarse_side: str
    s0: float
    s1: float
    fine_trace: splines.KnotVector
    coarse_trace: splines.KnotVector  # restricted to the shared segment, in fine orientation
    E: np.ndarray

    def coarse_param(self, t):
        return self.s0 + (self.s1 - self.s0) * np.asarray(t, float)

    @property
    def t_junction(self):
        return min(self.s0, self.s1) > 1e-12 or max(self.s0, self.s1) < 1 - 1e-12


def precedes(kv_a, kv_b, a, b, nu_a=None, nu_b=None, tie_break="coefficient"):
    """True if side ``a`` precedes side ``b`` (``a`` coarse, ``b`` refined).

    The side whose trace space contains the other is refined.  For equal
    spaces the lower patch index precedes (``tie_break="index"``); with
    ``tie_break="coefficient"`` a difference in diffusion coefficients decides
    first, making the lower-coefficient side the refined one.
    """
    a_in_b = splines.contains(kv_b, kv_a)
    b_in_a = splines.contains(kv_a, kv_b)
    if a_in_b and b_in_a:
        if tie_break == "coefficient" and nu_a is not None and nu_a != nu_b:
            return nu_a > nu_b
        return a < b
    if a_in_b:
        return True
    if b_in_a:
        return False
    raise NotNested(f"trace spaces of patches {a} and {b} are not nested")


def _side_trace(patch, side):
    return patch.side_kv(side)


def _coupling(topo, idx, fine, fine_side, coarse, coarse_side, s0, s1):
    pf, pc = topo.patches[fine], topo.patches[coarse]
    kv_f = _side_trace(pf, fine_side)
    kv_c = _side_trace(pc, coarse_side)
    lo, hi = min(s0, s1), max(s0, s1)
    r = splines.restriction_matrix(kv_c, lo, hi)
    kv_r = splines.restrict(kv_c, lo, hi)
    if s1 < s0:
        r = r[::-1]
        kv_r = splines.reverse(kv_r)
    e = splines.insert_knots(kv_r, kv_f) @ r
    e[np.abs(e) < ZERO_TOL] = 0.0
    return InterfaceCoupling(idx, fine, fine_side, coarse, coarse_side, s0, s1, kv_f, kv_r, e)


def order_interfaces(topo, tie_break="coefficient"):
    """Designate the refined side of every interface and build its embedding.

    For T-junction interfaces the side that is a full edge is the refined one;
    its trace space must contain the restriction of the other side's.
    """
    couplings = []
    for idx, itf in enumerate(topo.interfaces):
        pk, pl = topo.patches[itf.k], topo.patches[itf.l]
        kv_k = _side_trace(pk, itf.side_k)
        kv_l = splines.restrict(_side_trace(pl, itf.side_l), itf.a, itf.b)
        if itf.flipped:
            kv_l = splines.reverse(kv_l)
        s0, s1 = (itf.b, itf.a) if itf.flipped else (itf.a, itf.b)
        if itf.t_junction:
            if not splines.contains(kv_k, kv_l):
                raise NotNested(
                    f"T-junction interface between patches {itf.k} and {itf.l}: the full-edge side "
                    "does not refine the restricted trace of the other side"
                )
            coarse_first = True
        else:
            coarse_first = not precedes(kv_k, kv_l, itf.k, itf.l, pk.nu, pl.nu, tie_break)
        if coarse_first:  # l is coarse, k is fine
            couplings.append(_coupling(topo, idx, itf.k, itf.side_k, itf.l, itf.side_l, s0, s1))
        else:  # matching interface with k coarse; fine param t maps to k param
            t0, t1 = (1.0, 0.0) if itf.flipped else (0.0, 1.0)
            couplings.append(_coupling(topo, idx, itf.l, itf.side_l, itf.k, itf.side_k, t0, t1))
    couplings.sort(key=lambda c: (c.fine, c.interface))
    return couplings


@dataclass
class ConstraintSystem:
    """Jump constraints split into dual (Lagrange multiplier) and primal parts.

    Columns of ``B_full``/``B`` index the concatenation of all local (reduced,
    interior-first) DOF vectors; ``offsets[k]`` is the first column of patch k.
    """

    offsets: np.ndarray
    B_full: sp.csr_matrix
    full_rows: list  # (coupling index, fine patch, fine local dof, fine edge index)
    vertex_rows: np.ndarray  # boolean mask over full rows
    B: sp.csr_matrix
    dual_rows: list
    C: list  # per patch csr (n_primal_k x n_k)
    primal_ids: list  # per patch: global primal index of each row of C[k]
    primal_vertices: list  # vertex id of each global primal DOF
    vertex_dofs: list  # per patch: sorted local DOFs nonzero at some vertex (I_X)
    I_Z: list  # (patch, local dof)
    Z: dict  # (patch, local dof) -> dual row
    row_coupling: np.ndarray  # coupling index of each dual row

    @property
    def n_lambda(self):
        return self.B.shape[0]

    @property
    def n_primal(self):
        return len(self.primal_vertices)

    def patch_block(self, k, full=False):
        m = self.B_full if full else self.B
        return m[:, self.offsets[k] : self.offsets[k + 1]]

    def split(self, u):
        """Split a global vector into per-patch local vectors."""
        return [u[self.offsets[k] : self.offsets[k + 1]] for k in range(len(self.offsets) - 1)]


def build_constraints(topo, couplings, layouts):
    """Assemble the constraint rows and split them at the vertices."""
    npatch = topo.n_patches
    offsets = np.concatenate([[0], np.cumsum([lay.n for lay in layouts])])
    rows, cols, vals, meta = [], [], [], []
    r = 0
    for ci, c in enumerate(couplings):
        lf, lc = layouts[c.fine], layouts[c.coarse]
        f_edge, f_loc = lf.side_dofs(c.fine_side)
        c_lex_side = _side_lex(lc, c.coarse_side)
        c_loc = lc.local_of_lex[c_lex_side]
        for t, i in zip(f_edge, f_loc):
            rows.append(r)
            cols.append(offsets[c.fine] + i)
            vals.append(1.0)
            js = np.nonzero((np.abs(c.E[t]) > ZERO_TOL) & (c_loc >= 0))[0]
            rows.extend([r] * js.size)
            cols.extend(offsets[c.coarse] + c_loc[js])
            vals.extend(-c.E[t, js])
            meta.append((ci, c.fine, int(i), int(t)))
            r += 1
    ntot = int(offsets[-1])
    b_full = sp.csr_matrix((vals, (rows, cols)), shape=(r, ntot))
    b_full.sum_duplicates()
    b_full.sort_indices()

    # vertex-supported DOFs and primal rows
    vertex_dofs = []
    primal_index = {}
    primal_vertices = []
    for vid, v in enumerate(topo.vertices):
        if not v.dirichlet:
            primal_index[vid] = len(primal_vertices)
            primal_vertices.append(vid)
    C, primal_ids = [], []
    for k in range(npatch):
        lay = layouts[k]
        ix = set()
        crow, ccol, cval, ids = [], [], [], []
        for vid, x1, x2 in topo.patch_vertices(k):
            loc, val = lay.functions_at(x1, x2)
            ix.update(int(i) for i in loc)
            if vid in primal_index and loc.size:
                crow.extend([len(ids)] * loc.size)
                ccol.extend(loc)
                cval.extend(val)
                ids.append(primal_index[vid])
        C.append(sp.csr_matrix((cval, (crow, ccol)), shape=(len(ids), lay.n)))
        primal_ids.append(np.array(ids, dtype=int))
        vertex_dofs.append(np.array(sorted(ix), dtype=int))

    vsets = [set(v.tolist()) for v in vertex_dofs]
    vmask = np.array([loc in vsets[k] for (_, k, loc, _) in meta], dtype=bool)
    keep = np.nonzero(~vmask)[0]
    b = b_full[keep]
    dual_meta = [meta[i] for i in keep]

    plus = {}
    for row, (_, k, loc, _) in enumerate(dual_meta):
        plus.setdefault((k, loc), []).append(row)
    i_z = sorted(key for key, rws in plus.items() if len(rws) == 1)
    z = {key: plus[key][0] for key in i_z}
    row_coupling = np.array([m[0] for m in dual_meta], dtype=int)
    return ConstraintSystem(
        offsets, b_full, meta, vmask, b.tocsr(), dual_meta, C, primal_ids, primal_vertices, vertex_dofs, i_z, z,
        row_coupling,
    )


def _side_lex(layout, side):
    from .assembly import side_functions

    return side_functions(layout.n1, layout.n2, side)


def check_one_positive(b):
    """Every row has exactly one entry equal to +1 and no other positive entry."""
    b = sp.csr_matrix(b)
    for i in range(b.shape[0]):
        d = b.data[b.indptr[i] : b.indptr[i + 1]]
        if np.sum(d > 0) != 1 or not np.isclose(d[d > 0][0], 1.0, rtol=0, atol=1e-14):
            return False
    return True


def z_injective(cs):
    rows = list(cs.Z.values())
    return len(rows) == len(set(rows))


def schoenberg_whitney_edge(kv, params, tol=1e-14):
    """Greedy matching of sorted edge points to distinct basis functions.

    Returns a list of booleans, one per point (in the given order), telling
    whether the point received its own supporting function.
    """
    params = np.asarray(params, float)
    order = np.argsort(params, kind="stable")
    used = set()
    ok = np.zeros(params.size, dtype=bool)
    for q in order:
        first, vals = splines.eval_basis(kv, params[q])
        for a in np.nonzero(vals > tol)[0]:
            j = first + int(a)
            if j not in used:
                used.add(j)
                ok[q] = True
                break
    return ok.tolist()


@dataclass
class SWReport:
    ok: bool
    failures: list = field(default_factory=list)  # (patch, side, [vertex ids])
    vertex_ok: dict = field(default_factory=dict)


def check_schoenberg_whitney(topo):
    """Check, on every closed patch side, that primal vertices have distinct supports."""
    rep = SWReport(ok=True)
    for k, patch in enumerate(topo.patches):
        pv = [(vid, x1, x2) for vid, x1, x2 in topo.patch_vertices(k) if not topo.vertices[vid].dirichlet]
        for side in ("S", "E", "N", "W"):
            d = side_direction(side)
            on = [(vid, (x1, x2)[d]) for vid, x1, x2 in pv if side in sides_at(x1, x2)]
            if not on:
                continue
            res = schoenberg_whitney_edge(patch.side_kv(side), [t for _, t in on])
            for (vid, _), good in zip(on, res):
                rep.vertex_ok[vid] = rep.vertex_ok.get(vid, True) and good
            if not all(res):
                rep.ok = False
                rep.failures.append((k, side, [vid for (vid, _), g in zip(on, res) if not g]))
    return rep


def check_consistency(topo, couplings):
    """Couplings whose refined side has a strictly larger coefficient than the coarse side."""
    return [i for i, c in enumerate(couplings) if topo.patches[c.fine].nu > topo.patches[c.coarse].nu]
