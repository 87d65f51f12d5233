"""Monolithic reference solver used as a test oracle.

Continuity across interfaces is imposed by collocation: both traces are
evaluated at many points of every interface and required to agree.  Since the
trace spaces are nested, the difference of the traces lies in a spline space
of dimension below the number of points, so pointwise agreement is equivalent
to continuity.  The conforming space is the null space of the collocation
matrix (dense SVD), and the Galerkin system is solved directly on it.  This
shares no code with the embedding matrices or the interface ordering.
"""

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import splines
from .assembly import DofLayout, assemble_reduced, side_functions
from .geometry import build_topology


def _side_rows(patch, layout, side, t, offset, ntot):
    kv = patch.side_kv(side)
    first, vals = splines.basis_derivs(kv, t, 0)
    lex = side_functions(layout.n1, layout.n2, side)
    out = np.zeros((t.size, ntot))
    for a in range(kv.p + 1):
        idx = first + a
        loc = layout.local_of_lex[lex[idx]]
        ok = loc >= 0
        np.add.at(out, (np.nonzero(ok)[0], offset + loc[ok]), vals[ok, 0, a])
    return out


def continuity_matrix(topo, layouts, oversample=3):
    """Rows ``u_k(x) - u_l(x)`` at collocation points on every interface."""
    offsets = np.concatenate([[0], np.cumsum([lay.n for lay in layouts])])
    ntot = int(offsets[-1])
    blocks = []
    for itf in topo.interfaces:
        pk, pl = topo.patches[itf.k], topo.patches[itf.l]
        m = oversample * (pk.side_kv(itf.side_k).n + pl.side_kv(itf.side_l).n) + 3
        t = np.linspace(0.0, 1.0, m)
        rk = _side_rows(pk, layouts[itf.k], itf.side_k, t, offsets[itf.k], ntot)
        rl = _side_rows(pl, layouts[itf.l], itf.side_l, itf.map_k_to_l(t), offsets[itf.l], ntot)
        blocks.append(rk - rl)
    if not blocks:
        return np.zeros((0, ntot)), offsets
    return np.vstack(blocks), offsets


def monolithic_solve(patches, rhs=1.0, topo=None):
    """Conforming Galerkin solution; returns (topology, layouts, per-patch local vectors)."""
    topo = build_topology(patches) if topo is None else topo
    layouts = [DofLayout.for_patch(topo, k) for k in range(topo.n_patches)]
    systems = [assemble_reduced(p, lay, rhs) for p, lay in zip(topo.patches, layouts)]
    a = sp.block_diag([s.A for s in systems]).toarray()
    f = np.concatenate([s.f for s in systems])
    g, offsets = continuity_matrix(topo, layouts)
    z = sla.null_space(g, rcond=1e-10) if g.shape[0] else np.eye(a.shape[0])
    c = sla.solve(z.T @ a @ z, z.T @ f, assume_a="pos")
    u = z @ c
    return topo, layouts, [u[offsets[k] : offsets[k + 1]] for k in range(topo.n_patches)]
