"""End-to-end driver: topology -> coupling -> local systems -> PCG -> solution."""

from dataclasses import dataclass

import numpy as np

from .assembly import DofLayout, assemble_reduced
from .coupling import build_constraints, order_interfaces
from .geometry import build_topology
from .ieti import IetiOperator
from .krylov import pcg
from .preconditioners import build_schur, make_preconditioner


@dataclass
class IetiSolution:
    topo: object
    couplings: list
    layouts: list
    systems: list
    constraints: object
    operator: IetiOperator
    preconditioner: object
    multipliers: np.ndarray
    local: list  # per patch reduced coefficient vectors
    report: object

    @property
    def lex(self):
        """Per-patch coefficients on the full tensor grid (zeros at removed functions)."""
        return [lay.to_lex(u) for lay, u in zip(self.layouts, self.local)]

    @property
    def ndofs(self):
        return int(sum(lay.n for lay in self.layouts))


def setup(patches, rhs=1.0, tie_break="coefficient", canonicalize=True):
    topo = build_topology(patches, canonicalize=canonicalize)
    couplings = order_interfaces(topo, tie_break=tie_break)
    layouts = [DofLayout.for_patch(topo, k) for k in range(topo.n_patches)]
    systems = [assemble_reduced(p, lay, rhs) for p, lay in zip(topo.patches, layouts)]
    cs = build_constraints(topo, couplings, layouts)
    return topo, couplings, layouts, systems, cs


def solve(
    patches,
    rhs=1.0,
    precond="selection",
    tol=1e-6,
    max_iter=2000,
    backend="auto",
    tie_break="coefficient",
    raise_on_maxiter=True,
):
    """Solve ``-div(nu grad u) = f`` with homogeneous Dirichlet data by IETI-DP."""
    topo, couplings, layouts, systems, cs = setup(patches, rhs, tie_break)
    op = IetiOperator(systems, cs, backend=backend)
    schur = build_schur(systems, backend) if precond not in (None, "none") else None
    m = make_preconditioner(precond, cs, couplings, systems, schur)
    d = op.rhs()
    lam, rep = pcg(op.apply, m, d, tol, max_iter, raise_on_maxiter=raise_on_maxiter)
    u = op.reconstruct(lam)
    return IetiSolution(topo, couplings, layouts, systems, cs, op, m, lam, u, rep)
