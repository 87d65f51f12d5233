"""Residual error estimation, Doerfler marking and patch splitting.

The estimator on patch ``k`` is

    eta_k^2 = h_k^2 ||f + nu Lap u_h||^2_{Omega_k}
              + sum over interfaces touching k of (h_k / 2) ||[nu grad u_h] . n||^2

with ``h_k = H_k * hhat_k`` (patch diameter times parametric grid size).
Every interface contributes its flux-jump integral to both adjacent patches,
each weighted with its own ``h_k``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import splines
from .assembly import _rhs_callable, gradient, laplacian
from .coupling import check_consistency, check_schoenberg_whitney, order_interfaces
from .errors import EmptyEstimator, NonTermination
from .geometry import Patch, build_topology, side_point

POINT_TOL = 1e-9
CHILD_BOXES = (((0.0, 0.5), (0.0, 0.5)), ((0.5, 1.0), (0.0, 0.5)), ((0.0, 0.5), (0.5, 1.0)), ((0.5, 1.0), (0.5, 1.0)))


@dataclass
class EstimatorReport:
    eta2: np.ndarray  # per patch
    volume: np.ndarray  # per patch volume contributions
    jumps: list = field(default_factory=list)  # (coupling index, fine, coarse, integral of squared jump)

    @property
    def total(self):
        return float(self.eta2.sum())

    @property
    def eta(self):
        return float(np.sqrt(self.total))


def mesh_size(patch):
    """``h_k = H_k * hhat_k``."""
    return patch.diameter() * patch.h_param


def volume_residual(patch, u_lex, rhs=1.0, nq=None):
    """``||f + nu Lap u_h||^2`` over the patch by tensor Gauss quadrature."""
    nq = patch.p + 2 if nq is None else nq
    f = _rhs_callable(rhs)
    x1, w1 = splines.gauss_points(patch.kv1, nq)
    x2, w2 = splines.gauss_points(patch.kv2, nq)
    X1, X2 = np.meshgrid(x1.ravel(), x2.ravel(), indexing="ij")
    W = np.outer(w1.ravel(), w2.ravel())
    xy = patch.geometry.eval(X1, X2)
    jac = patch.geometry.jacobian(X1, X2)
    det = np.abs(jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0])
    res = f(xy[..., 0], xy[..., 1]) + patch.nu * laplacian(patch, u_lex, X1, X2)
    return float(np.sum(res**2 * det * W))


def flux_jump(topo, coupling, u_lex, nq=None):
    """``||(nu_f grad u_f - nu_c grad u_c) . n||^2`` over the interface.

    Quadrature runs over the refined side's trace spans; the coarse side is
    evaluated at the matching parameters, which are checked to map to the same
    physical points.
    """
    pf, pc = topo.patches[coupling.fine], topo.patches[coupling.coarse]
    nq = pf.p + 2 if nq is None else nq
    t, w = splines.gauss_points(coupling.fine_trace, nq)
    t, w = t.ravel(), w.ravel()
    xf = side_point(coupling.fine_side, t)
    xc = side_point(coupling.coarse_side, coupling.coarse_param(t))
    gap = np.abs(pf.geometry.eval(*xf) - pc.geometry.eval(*xc)).max()
    if gap > POINT_TOL * max(topo.scale, 1.0):
        raise ValueError(f"interface {coupling.interface}: quadrature points differ by {gap:.2e}")
    tau = pf.side_tangent(coupling.fine_side, t)
    ds = np.linalg.norm(tau, axis=-1)
    normal = np.stack([tau[:, 1], -tau[:, 0]], -1) / ds[:, None]
    flux = pf.nu * gradient(pf, u_lex[coupling.fine], *xf) - pc.nu * gradient(pc, u_lex[coupling.coarse], *xc)
    jump = np.einsum("qa,qa->q", flux, normal)
    return float(np.sum(jump**2 * ds * w))


def estimate(topo, couplings, u_lex, rhs=1.0):
    """Per-patch squared residual estimators for per-patch coefficients ``u_lex``."""
    h = np.array([mesh_size(p) for p in topo.patches])
    vol = np.array([h[k] ** 2 * volume_residual(p, u_lex[k], rhs) for k, p in enumerate(topo.patches)])
    eta2 = vol.copy()
    jumps = []
    for ci, c in enumerate(couplings):
        j = flux_jump(topo, c, u_lex)
        eta2[c.fine] += 0.5 * h[c.fine] * j
        eta2[c.coarse] += 0.5 * h[c.coarse] * j
        jumps.append((ci, c.fine, c.coarse, j))
    return EstimatorReport(eta2, vol, jumps)


def estimate_solution(solution, rhs=1.0):
    return estimate(solution.topo, solution.couplings, solution.lex, rhs)


def doerfler_mark(eta2, theta=0.8):
    """Smallest greedy set ``M`` with ``sum_M eta_k^2 > theta * sum eta_k^2`` (sorted indices)."""
    eta2 = np.asarray(eta2.eta2 if isinstance(eta2, EstimatorReport) else eta2, dtype=float)
    total = eta2.sum()
    if not total > 0:
        raise EmptyEstimator("estimator vanishes; nothing to mark")
    order = np.argsort(-eta2, kind="stable")
    acc = 0.0
    marked = []
    for k in order:
        marked.append(int(k))
        acc += eta2[k]
        if acc > theta * total:
            break
    return sorted(marked)


def split_patch(patch):
    """Bisect the parameter domain into 2x2 children.

    Children come in the order ``[0,1/2]^2, [1/2,1]x[0,1/2], [0,1/2]x[1/2,1],
    [1/2,1]^2``.  Their knot vectors are the dyadic refinement of the parent's
    restricted to the sub-range, so every child keeps the parent's relative
    grid size while the physical mesh size halves.
    """
    f1, f2 = splines.dyadic_refine(patch.kv1), splines.dyadic_refine(patch.kv2)
    children = []
    for c, box in enumerate(CHILD_BOXES):
        (a1, b1), (a2, b2) = box
        children.append(
            Patch(
                patch.geometry.restrict(box),
                splines.restrict(f1, a1, b1),
                splines.restrict(f2, a2, b2),
                nu=patch.nu,
                level=patch.level + 1,
                lineage=tuple(patch.lineage) + (c,),
                tag=patch.tag,
            )
        )
    return children


def refine_patches(patches, marked):
    """Replace every marked patch by its four children."""
    marked = set(marked)
    out = []
    for k, p in enumerate(patches):
        out.extend(split_patch(p) if k in marked else [p])
    return out


@dataclass
class ConsistencyResult:
    patches: list
    rounds: int
    splits: int

    @property
    def extra_patches(self):
        return 3 * self.splits


def consistency_targets(topo, couplings, coefficients=True):
    """Patches to split: coarse sides of coefficient-ordering violations and
    patches with a Schoenberg-Whitney failure on one of their sides."""
    targets = set()
    if coefficients:
        targets.update(couplings[i].coarse for i in check_consistency(topo, couplings))
    targets.update(k for k, _, _ in check_schoenberg_whitney(topo).failures)
    return sorted(targets)


def consistency_split(patches, coefficients=True, max_rounds=10, tie_break="coefficient"):
    """Split patches until the coefficient-ordering rule and the
    Schoenberg-Whitney check hold on every interface.

    With ``coefficients=False`` only Schoenberg-Whitney failures are repaired.
    """
    splits = 0
    for rnd in range(max_rounds + 1):
        topo = build_topology(patches)
        couplings = order_interfaces(topo, tie_break=tie_break)
        targets = consistency_targets(topo, couplings, coefficients)
        if not targets:
            return ConsistencyResult(topo.patches, rnd, splits)
        if rnd == max_rounds:
            break
        patches = refine_patches(topo.patches, targets)
        splits += len(targets)
    raise NonTermination(f"consistency splitting did not converge within {max_rounds} rounds")
