"""Patch geometry maps and multi-patch topology.

Parameter coordinates are ``(xi1, xi2)`` in the unit square.  Sides are named
``S`` (xi2 = 0), ``E`` (xi1 = 1), ``N`` (xi2 = 1) and ``W`` (xi1 = 0); a side
is parameterized by ``xi1`` (S, N) or ``xi2`` (W, E), increasing.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from . import splines
from .errors import NonAdmissibleDecomposition, OutOfDomain

SIDES = ("S", "E", "N", "W")
PROBES = np.linspace(0.1, 0.9, 9)
PARAM_TOL = 1e-12


def side_point(side, t):
    """Parameter point(s) on ``side`` at edge parameter ``t``."""
    t = np.asarray(t, dtype=float)
    one, zero = np.ones_like(t), np.zeros_like(t)
    return {
        "S": (t, zero),
        "N": (t, one),
        "W": (zero, t),
        "E": (one, t),
    }[side]


def side_direction(side):
    """Parametric direction (0 or 1) running along ``side``."""
    return 0 if side in ("S", "N") else 1


def sides_at(xi1, xi2, tol=PARAM_TOL):
    """Sides of the unit square on which the parameter point lies."""
    out = []
    if abs(xi2) <= tol:
        out.append("S")
    if abs(xi1 - 1) <= tol:
        out.append("E")
    if abs(xi2 - 1) <= tol:
        out.append("N")
    if abs(xi1) <= tol:
        out.append("W")
    return out


class GeometryMap:
    """Base class of patch parameterizations ``G: [0,1]^2 -> R^2``.

    Subclasses implement vectorized ``eval``, ``jacobian`` (``J[..., a, b] =
    dx_a/dxi_b``) and ``hessian`` (``H[..., a, b, c] = d^2 x_a / dxi_b dxi_c``).
    """

    kind = "abstract"

    def eval(self, xi1, xi2):
        raise NotImplementedError

    def jacobian(self, xi1, xi2):
        raise NotImplementedError

    def hessian(self, xi1, xi2):
        raise NotImplementedError

    def restrict(self, box):
        """Map of the sub-box ``((a1, b1), (a2, b2))`` reparameterized to [0,1]^2."""
        return RestrictedMap(self, box)

    def separable_metric(self):
        """Return ``(a1, b1, a2, b2)`` if the stiffness integrand separates.

        Separable means ``grad^T (J^T J)^{-1} grad |det J| = a1(xi1) b1(xi2)
        d1^2 + a2(xi1) b2(xi2) d2^2``; ``None`` otherwise.
        """
        return None


class BilinearMap(GeometryMap):
    """Bilinear quadrilateral; corners ordered G(0,0), G(1,0), G(0,1), G(1,1)."""

    kind = "bilinear"

    def __init__(self, corners):
        c = np.asarray(corners, dtype=float).reshape(4, 2)
        self.corners = c
        self._c0 = c[0]
        self._d1 = c[1] - c[0]
        self._d2 = c[2] - c[0]
        self._d12 = c[3] - c[2] - c[1] + c[0]

    def eval(self, xi1, xi2):
        xi1, xi2 = np.asarray(xi1, float)[..., None], np.asarray(xi2, float)[..., None]
        return self._c0 + xi1 * self._d1 + xi2 * self._d2 + xi1 * xi2 * self._d12

    def jacobian(self, xi1, xi2):
        xi1, xi2 = np.asarray(xi1, float)[..., None], np.asarray(xi2, float)[..., None]
        j1 = self._d1 + xi2 * self._d12
        j2 = self._d2 + xi1 * self._d12
        return np.stack([j1, j2], axis=-1)

    def hessian(self, xi1, xi2):
        shape = np.broadcast(np.asarray(xi1), np.asarray(xi2)).shape
        h = np.zeros(shape + (2, 2, 2))
        h[..., :, 0, 1] = self._d12
        h[..., :, 1, 0] = self._d12
        return h

    def restrict(self, box):
        (a1, b1), (a2, b2) = box
        pts = self.eval(np.array([a1, b1, a1, b1]), np.array([a2, a2, b2, b2]))
        return BilinearMap(pts)

    def separable_metric(self):
        if np.abs(self._d12).max() > 1e-14 * max(1.0, np.abs(self.corners).max()):
            return None
        if abs(self._d1 @ self._d2) > 1e-14 * (np.linalg.norm(self._d1) * np.linalg.norm(self._d2)):
            return None
        det = abs(self._d1[0] * self._d2[1] - self._d1[1] * self._d2[0])
        c1 = det / (self._d1 @ self._d1)
        c2 = det / (self._d2 @ self._d2)
        one = lambda x: np.ones_like(x)  # noqa: E731
        return (lambda x: c1 * np.ones_like(x), one, lambda x: c2 * np.ones_like(x), one)

    def __repr__(self):
        return f"BilinearMap({self.corners.tolist()})"


class AnnulusSector(GeometryMap):
    """Polar map ``G = center + r(xi1) (cos th(xi2), sin th(xi2))`` with affine r, th."""

    kind = "annulus"

    def __init__(self, r_inner=1.0, r_outer=2.0, theta0=0.0, theta1=np.pi / 2, center=(0.0, 0.0)):
        self.r0, self.r1 = float(r_inner), float(r_outer)
        self.t0, self.t1 = float(theta0), float(theta1)
        self.center = np.asarray(center, dtype=float)
        self.dr = self.r1 - self.r0
        self.dt = self.t1 - self.t0

    def _rt(self, xi1, xi2):
        return self.r0 + self.dr * np.asarray(xi1, float), self.t0 + self.dt * np.asarray(xi2, float)

    def eval(self, xi1, xi2):
        r, t = self._rt(xi1, xi2)
        return self.center + np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)

    def jacobian(self, xi1, xi2):
        r, t = self._rt(xi1, xi2)
        c, s = np.cos(t), np.sin(t)
        j = np.empty(np.broadcast(r, t).shape + (2, 2))
        j[..., 0, 0] = self.dr * c
        j[..., 1, 0] = self.dr * s
        j[..., 0, 1] = -r * self.dt * s
        j[..., 1, 1] = r * self.dt * c
        return j

    def hessian(self, xi1, xi2):
        r, t = self._rt(xi1, xi2)
        c, s = np.cos(t), np.sin(t)
        h = np.zeros(np.broadcast(r, t).shape + (2, 2, 2))
        h[..., 0, 0, 1] = h[..., 0, 1, 0] = -self.dr * self.dt * s
        h[..., 1, 0, 1] = h[..., 1, 1, 0] = self.dr * self.dt * c
        h[..., 0, 1, 1] = -r * self.dt**2 * c
        h[..., 1, 1, 1] = -r * self.dt**2 * s
        return h

    def restrict(self, box):
        (a1, b1), (a2, b2) = box
        r = lambda x: self.r0 + self.dr * x  # noqa: E731
        t = lambda x: self.t0 + self.dt * x  # noqa: E731
        return AnnulusSector(r(a1), r(b1), t(a2), t(b2), self.center)

    def separable_metric(self):
        dr, dt = abs(self.dr), abs(self.dt)
        r = lambda x: np.abs(self.r0 + self.dr * x)  # noqa: E731
        one = lambda x: np.ones_like(x)  # noqa: E731
        return (lambda x: r(x) * dt / dr, one, lambda x: dr / (dt * r(x)), one)

    def __repr__(self):
        return f"AnnulusSector(r=({self.r0}, {self.r1}), theta=({self.t0}, {self.t1}))"


class SplineMap(GeometryMap):
    """Tensor-product B-spline map with control points ``ctrl[i1 + n1*i2]``."""

    kind = "spline"

    def __init__(self, kv1, kv2, ctrl):
        self.kv1, self.kv2 = kv1, kv2
        self.ctrl = np.asarray(ctrl, dtype=float).reshape(kv2.n, kv1.n, 2)

    def _tensor(self, xi1, xi2, d1, d2):
        xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, float), np.asarray(xi2, float))
        shape = xi1.shape
        f1, v1 = splines.basis_derivs(self.kv1, xi1.ravel(), 2)
        f2, v2 = splines.basis_derivs(self.kv2, xi2.ravel(), 2)
        p1, p2 = self.kv1.p, self.kv2.p
        i1 = f1[:, None] + np.arange(p1 + 1)
        i2 = f2[:, None] + np.arange(p2 + 1)
        cp = self.ctrl[i2[:, :, None], i1[:, None, :]]  # (q, b, a, 2)
        out = np.einsum("qa,qb,qbac->qc", v1[:, d1], v2[:, d2], cp)
        return out.reshape(shape + (2,))

    def eval(self, xi1, xi2):
        return self._tensor(xi1, xi2, 0, 0)

    def jacobian(self, xi1, xi2):
        return np.stack([self._tensor(xi1, xi2, 1, 0), self._tensor(xi1, xi2, 0, 1)], axis=-1)

    def hessian(self, xi1, xi2):
        h11 = self._tensor(xi1, xi2, 2, 0)
        h12 = self._tensor(xi1, xi2, 1, 1)
        h22 = self._tensor(xi1, xi2, 0, 2)
        return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -1)

    def restrict(self, box):
        (a1, b1), (a2, b2) = box
        r1 = splines.restriction_matrix(self.kv1, a1, b1)
        r2 = splines.restriction_matrix(self.kv2, a2, b2)
        c = np.einsum("ai,bj,jic->bac", r1, r2, self.ctrl)
        return SplineMap(splines.restrict(self.kv1, a1, b1), splines.restrict(self.kv2, a2, b2), c.reshape(-1, 2))


class RestrictedMap(GeometryMap):
    """Generic composition of a map with an affine sub-box map."""

    def __init__(self, parent, box):
        self.parent = parent
        (self.a1, b1), (self.a2, b2) = box
        self.s1, self.s2 = b1 - self.a1, b2 - self.a2
        self.kind = parent.kind

    def _xi(self, xi1, xi2):
        return self.a1 + self.s1 * np.asarray(xi1, float), self.a2 + self.s2 * np.asarray(xi2, float)

    def eval(self, xi1, xi2):
        return self.parent.eval(*self._xi(xi1, xi2))

    def jacobian(self, xi1, xi2):
        return self.parent.jacobian(*self._xi(xi1, xi2)) * np.array([self.s1, self.s2])

    def hessian(self, xi1, xi2):
        s = np.array([self.s1, self.s2])
        return self.parent.hessian(*self._xi(xi1, xi2)) * s[:, None] * s[None, :]


def _check_param(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < -PARAM_TOL) or np.any(xi > 1 + PARAM_TOL):
        raise OutOfDomain(f"parameter point {xi} outside the unit square")
    return np.clip(xi, 0, 1)


def eval_map(g, xi):
    xi = _check_param(xi)
    return g.eval(xi[..., 0], xi[..., 1])


def eval_jacobian(g, xi):
    xi = _check_param(xi)
    return g.jacobian(xi[..., 0], xi[..., 1])


@dataclass
class Patch:
    """One mapped tensor-product B-spline patch."""

    geometry: GeometryMap
    kv1: splines.KnotVector
    kv2: splines.KnotVector
    nu: float = 1.0
    level: int = 0
    lineage: tuple = ()
    tag: str = ""

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("diffusion coefficient must be positive")

    @property
    def p(self):
        return self.kv1.p

    @property
    def n1(self):
        return self.kv1.n

    @property
    def n2(self):
        return self.kv2.n

    @property
    def ndofs(self):
        return self.kv1.n * self.kv2.n

    @property
    def h_param(self):
        """Parametric grid size (largest knot span in either direction)."""
        return max(self.kv1.h, self.kv2.h)

    def side_kv(self, side):
        return self.kv1 if side_direction(side) == 0 else self.kv2

    def side_curve(self, side, t):
        return self.geometry.eval(*side_point(side, t))

    def side_tangent(self, side, t):
        j = self.geometry.jacobian(*side_point(side, t))
        return j[..., :, side_direction(side)]

    def center(self):
        return self.geometry.eval(0.5, 0.5)

    def diameter(self, samples=33):
        t = np.linspace(0, 1, samples)
        pts = np.concatenate([self.side_curve(s, t) for s in SIDES])
        return float(pdist(pts).max())

    def corners(self):
        return self.geometry.eval(np.array([0.0, 1.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0, 1.0]))


@dataclass
class Interface:
    """Shared segment of two patches.

    Side ``side_k`` of patch ``k`` is a full edge and coincides with the
    portion ``[a, b]`` of side ``side_l`` of patch ``l``; the edge parameter
    ``t`` of ``k`` corresponds to ``a + (b - a) t`` on ``l`` or, if
    ``flipped``, to ``b - (b - a) t``.
    """

    k: int
    side_k: str
    l: int  # noqa: E741
    side_l: str
    a: float = 0.0
    b: float = 1.0
    flipped: bool = False

    @property
    def t_junction(self):
        return self.a > PARAM_TOL or self.b < 1 - PARAM_TOL

    def map_k_to_l(self, t):
        t = np.asarray(t, float)
        return self.b - (self.b - self.a) * t if self.flipped else self.a + (self.b - self.a) * t


@dataclass
class Vertex:
    point: np.ndarray
    incidences: list = field(default_factory=list)  # (patch, xi1, xi2, is_corner)
    t_junction: bool = False
    dirichlet: bool = False


@dataclass
class MultiPatchTopology:
    patches: list
    interfaces: list
    vertices: list
    dirichlet_sides: list  # per patch: set of side names on the Dirichlet boundary
    scale: float = 1.0

    @property
    def n_patches(self):
        return len(self.patches)

    def patch_vertices(self, k):
        """``[(vertex_id, xi1, xi2), ...]`` of vertices on the closure of patch ``k``."""
        out = []
        for vid, v in enumerate(self.vertices):
            for pk, x1, x2, _ in v.incidences:
                if pk == k:
                    out.append((vid, x1, x2))
        return out

    def dirichlet_corners(self, k):
        """Corners of patch ``k`` at Dirichlet vertices (as (c1, c2) tuples)."""
        out = set()
        for v in self.vertices:
            if not v.dirichlet:
                continue
            for pk, x1, x2, is_corner in v.incidences:
                if pk == k and is_corner:
                    out.add((int(round(x1)), int(round(x2))))
        return out

    def interface_sides(self, k):
        s = set()
        for itf in self.interfaces:
            if itf.k == k:
                s.add(itf.side_k)
            if itf.l == k:
                s.add(itf.side_l)
        return s


def _locate(patch, side, point, t0):
    """Edge parameter of the point of ``side`` closest to ``point`` (Newton refinement)."""
    t = float(t0)
    for _ in range(8):
        c = patch.side_curve(side, t)
        d = patch.side_tangent(side, t)
        step = (point - c) @ d / (d @ d)
        t = min(max(t + step, 0.0), 1.0)
        if abs(step) < 1e-15:
            break
    return t, float(np.linalg.norm(patch.side_curve(side, t) - point))


class _SideSampler:
    def __init__(self, patch, side, n=129):
        self.patch, self.side = patch, side
        self.t = np.linspace(0, 1, n)
        self.pts = patch.side_curve(side, self.t)
        lo, hi = self.pts.min(0), self.pts.max(0)
        pad = 0.05 * np.linalg.norm(hi - lo) + 1e-9
        self.lo, self.hi = lo - pad, hi + pad
        self.length = float(np.linalg.norm(np.diff(self.pts, axis=0), axis=1).sum())
        mid = patch.side_curve(side, 0.5 * (self.t[:-1] + self.t[1:]))
        self.sagitta = float(np.linalg.norm(mid - 0.5 * (self.pts[:-1] + self.pts[1:]), axis=1).max())

    def polyline_distance(self, pts):
        """Distance of each point to the sampled polyline of the side."""
        a, b = self.pts[:-1], self.pts[1:]
        ab = b - a
        ap = pts[:, None, :] - a[None]
        s = np.clip(np.einsum("qsa,sa->qs", ap, ab) / np.maximum(np.einsum("sa,sa->s", ab, ab), 1e-300), 0, 1)
        d = np.linalg.norm(ap - s[..., None] * ab[None], axis=-1)
        return d.min(axis=1)

    def locate(self, point, tol):
        i = int(np.argmin(np.linalg.norm(self.pts - point, axis=1)))
        t, dist = _locate(self.patch, self.side, point, self.t[i])
        return (t, dist) if dist <= tol else (None, dist)


def _touch_only(sa, sb, tol):
    """True if no interior probe point of either side lies on the other side.

    A shared segment covering at least a tenth of one of the sides always
    contains a probe point; sides meeting at a single point contain none.
    """
    for src, dst in ((sa, sb), (sb, sa)):
        probes = src.patch.side_curve(src.side, PROBES)
        if np.any(dst.polyline_distance(probes) <= 2 * dst.sagitta + tol):
            return False
    return True


def _endpoints_on(src, dst, tol):
    pts = src.patch.side_curve(src.side, np.array([0.0, 1.0]))
    return [dst.locate(p, tol)[0] for p in pts]


def _contained(short, long_, tol):
    """If the curve ``short`` lies on ``long_`` with affine correspondence, return (a, b)."""
    t0, t1 = _endpoints_on(short, long_, tol)
    if t0 is None or t1 is None or abs(t1 - t0) <= 1e-9:
        return None
    s = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    mine = short.patch.side_curve(short.side, s)
    theirs = long_.patch.side_curve(long_.side, t0 + (t1 - t0) * s)
    if np.linalg.norm(mine - theirs, axis=1).max() > tol:
        return None
    return t0, t1


def _partial_overlap(sa, sb, tol):
    """True if the two side curves share a segment that is a full edge of neither."""
    for src, dst in ((sa, sb), (sb, sa)):
        ends = _endpoints_on(src, dst, tol)
        for e, t in zip((0.0, 1.0), ends):
            if t is None:
                continue
            # walk a little into src from this endpoint and test whether we stay on dst
            for frac in (0.05, 0.25, 0.5):
                s = abs(e - frac)
                p = src.patch.side_curve(src.side, s)
                if dst.locate(p, tol)[0] is not None:
                    return True
    return False


def _snap(t):
    return 0.0 if abs(t) <= 1e-10 else 1.0 if abs(t - 1) <= 1e-10 else t


def canonical_order(patches):
    """Indices sorting patches by the physical coordinates of their centers."""
    keys = [tuple(np.round(p.center(), 9)) + (p.lineage,) for p in patches]
    return sorted(range(len(patches)), key=lambda i: (keys[i][0], keys[i][1]))


def build_topology(patches, tol=1e-9, canonicalize=True):
    """Identify interfaces, vertices (with T-junctions) and the Dirichlet boundary.

    Patches are reordered canonically by the position of their centers so the
    result does not depend on the input order.  All outer boundary sides are
    tagged Dirichlet.
    """
    patches = list(patches)
    if canonicalize:
        patches = [patches[i] for i in canonical_order(patches)]
    allpts = np.concatenate([p.corners() for p in patches])
    scale = max(1.0, float(np.abs(allpts).max()))
    ptol = tol * scale
    samplers = {(k, s): _SideSampler(p, s) for k, p in enumerate(patches) for s in SIDES}

    interfaces = []
    coverage = {key: [] for key in samplers}
    keys = list(samplers)
    lo = np.array([samplers[key].lo for key in keys])
    hi = np.array([samplers[key].hi for key in keys])
    for i, ka in enumerate(keys):
        overlap = np.all(lo[i + 1 :] <= hi[i], axis=1) & np.all(hi[i + 1 :] >= lo[i], axis=1)
        for j in np.nonzero(overlap)[0] + i + 1:
            kb = keys[j]
            if ka[0] == kb[0]:
                continue
            sa, sb = samplers[ka], samplers[kb]
            if _touch_only(sa, sb, ptol):
                continue
            rng = _contained(sa, sb, ptol)
            if rng is not None:
                k, side_k, l, side_l = ka[0], ka[1], kb[0], kb[1]
            else:
                rng = _contained(sb, sa, ptol)
                if rng is not None:
                    k, side_k, l, side_l = kb[0], kb[1], ka[0], ka[1]
            if rng is None:
                if _partial_overlap(sa, sb, ptol):
                    raise NonAdmissibleDecomposition(
                        f"patches {ka[0]} ({ka[1]}) and {kb[0]} ({kb[1]}) share a segment that is "
                        "a full edge of neither patch"
                    )
                continue
            t0, t1 = (_snap(x) for x in rng)
            itf = Interface(k, side_k, l, side_l, min(t0, t1), max(t0, t1), flipped=t1 < t0)
            interfaces.append(itf)
            coverage[(k, side_k)].append((0.0, 1.0))
            coverage[(l, side_l)].append((itf.a, itf.b))

    dirichlet = [set() for _ in patches]
    for (k, s), segs in coverage.items():
        if not segs:
            dirichlet[k].add(s)
            continue
        segs = sorted(segs)
        reach = 0.0
        for a, b in segs:
            if a > reach + 1e-9:
                break
            reach = max(reach, b)
        if reach < 1 - 1e-9:
            raise NonAdmissibleDecomposition(f"side {s} of patch {k} is only partially shared")

    vertices = _build_vertices(patches, interfaces, dirichlet, ptol)
    return MultiPatchTopology(patches, interfaces, vertices, dirichlet, scale)


def _build_vertices(patches, interfaces, dirichlet, ptol):
    corner_params = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
    pts = np.concatenate([p.corners() for p in patches])
    tree = cKDTree(pts)
    parent = list(range(len(pts)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in sorted(tree.query_pairs(max(ptol, 1e-300))):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = sorted({find(i) for i in range(len(pts))})
    vid_of_root = {r: n for n, r in enumerate(roots)}
    vertices = [Vertex(point=pts[r].copy()) for r in roots]
    for i in range(len(pts)):
        k, c = divmod(i, 4)
        v = vertices[vid_of_root[find(i)]]
        v.incidences.append((k, corner_params[c][0], corner_params[c][1], True))

    for itf in interfaces:
        if not itf.t_junction:
            continue
        for t in (itf.a, itf.b):
            if PARAM_TOL < t < 1 - PARAM_TOL:
                xi = side_point(itf.side_l, t)
                x = patches[itf.l].geometry.eval(*xi)
                dist, idx = tree.query(x)
                if dist > ptol:
                    raise NonAdmissibleDecomposition("T-junction point is not a patch corner")
                v = vertices[vid_of_root[find(idx)]]
                rec = (itf.l, float(xi[0]), float(xi[1]), False)
                if not any(r[0] == rec[0] and abs(r[1] - rec[1]) + abs(r[2] - rec[2]) < 1e-9 for r in v.incidences):
                    v.incidences.append(rec)
                v.t_junction = True

    for v in vertices:
        v.incidences.sort()
        v.dirichlet = any(set(sides_at(x1, x2)) & dirichlet[k] for k, x1, x2, _ in v.incidences)
    return vertices


@dataclass
class AssumptionReport:
    c_g: list  # scale-free distortion sqrt(sup|DG| sup|DG^-1|) per patch
    c_g_diameter: list  # max(sup|DG|/H, sup|DG^-1| H) with H the patch diameter
    c_q: list  # min over directions of h_min / h
    det_sign_ok: list
    admissible: bool


def check_assumptions(topo, samples=20):
    """Sample-based report on the geometry and grid assumptions."""
    x = (np.arange(samples) + 0.5) / samples
    xi1, xi2 = np.meshgrid(x, x, indexing="ij")
    cg, cgd, cq, det_ok = [], [], [], []
    for p in topo.patches:
        j = p.geometry.jacobian(xi1, xi2)
        s = np.linalg.svd(j, compute_uv=False)
        gmax, ginv = s[..., 0].max(), (1 / s[..., 1]).max()
        h = p.diameter()
        cg.append(float(np.sqrt(gmax * ginv)))
        cgd.append(float(max(gmax / h, ginv * h)))
        det = np.linalg.det(j)
        det_ok.append(bool(np.all(det > 0) or np.all(det < 0)))
        cq.append(min(p.kv1.h_min / p.kv1.h, p.kv2.h_min / p.kv2.h))
    return AssumptionReport(cg, cgd, cq, det_ok, admissible=True)
