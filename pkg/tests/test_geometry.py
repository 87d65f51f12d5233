import numpy as np
import pytest

from conftest import square, t_junction, two_matching
from ietidp import splines
from ietidp.adaptivity import split_patch
from ietidp.errors import NonAdmissibleDecomposition, OutOfDomain
from ietidp.experiments import checkerboard
from ietidp.geometry import (
    AnnulusSector,
    BilinearMap,
    Patch,
    SplineMap,
    build_topology,
    check_assumptions,
    eval_jacobian,
    eval_map,
)

IDENTITY = BilinearMap([(0, 0), (1, 0), (0, 1), (1, 1)])


def fd_jacobian(g, x1, x2, eps=1e-6):
    d1 = (g.eval(x1 + eps, x2) - g.eval(x1 - eps, x2)) / (2 * eps)
    d2 = (g.eval(x1, x2 + eps) - g.eval(x1, x2 - eps)) / (2 * eps)
    return np.stack([d1, d2], axis=-1)


def test_identity_map():
    assert np.allclose(eval_map(IDENTITY, (0.3, 0.7)), [0.3, 0.7])
    assert np.allclose(eval_jacobian(IDENTITY, (0.3, 0.7)), np.eye(2))


def test_bilinear_midpoint():
    g = BilinearMap([(0, 0), (2, 0), (0, 1), (2, 1)])
    assert np.allclose(eval_map(g, (0.5, 0.5)), [1, 0.5])


def test_map_out_of_domain():
    with pytest.raises(OutOfDomain):
        eval_map(IDENTITY, (1.2, 0.5))


def test_annulus_sector():
    g = AnnulusSector(1, 2, 0, np.pi / 2)
    assert np.allclose(eval_map(g, (0, 0)), [1, 0])
    x1, x2 = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 1, 7))
    det = np.linalg.det(g.jacobian(x1, x2))
    assert np.allclose(np.abs(det), np.pi / 2 * (1 + x1))


def test_jacobians_against_finite_differences(rng):
    kv = splines.uniform(2, 2)
    gx, gy = np.meshgrid(splines.greville(kv), splines.greville(kv))
    ctrl = np.stack([gx + 0.05 * rng.standard_normal(gx.shape), gy + 0.05 * rng.standard_normal(gy.shape)], -1)
    maps = [
        BilinearMap([(0, 0), (2, 0.3), (0.2, 1), (1.8, 1.5)]),
        AnnulusSector(1, 2, 0.1, 1.2),
        SplineMap(kv, kv, ctrl.reshape(-1, 2)),
        AnnulusSector(1, 2).restrict(((0.25, 0.5), (0.5, 1.0))),
    ]
    x1, x2 = rng.uniform(0.05, 0.95, (2, 30))
    for g in maps:
        assert np.abs(g.jacobian(x1, x2) - fd_jacobian(g, x1, x2)).max() < 1e-5


def test_spline_map_reproduces_identity():
    kv = splines.uniform(3, 4)
    gx, gy = np.meshgrid(splines.greville(kv), splines.greville(kv))
    g = SplineMap(kv, kv, np.stack([gx, gy], -1).reshape(-1, 2))
    assert np.allclose(eval_map(g, (0.3, 0.8)), [0.3, 0.8])
    assert np.allclose(eval_jacobian(g, (0.3, 0.8)), np.eye(2))


def test_restricted_map_composes():
    g = AnnulusSector(1, 2)
    c = g.restrict(((0.5, 1.0), (0.0, 0.5)))
    assert np.allclose(c.eval(0.5, 0.5), g.eval(0.75, 0.25))


def test_two_squares():
    topo = build_topology(two_matching())
    assert len(topo.interfaces) == 1
    assert len(topo.vertices) == 6
    itf = topo.interfaces[0]
    assert not itf.t_junction and not itf.flipped
    assert {itf.side_k, itf.side_l} == {"E", "W"}
    assert topo.dirichlet_sides[0] == {"S", "N", "W"}


def test_t_junction_topology():
    topo = build_topology(t_junction())
    big = [k for k, p in enumerate(topo.patches) if p.diameter() > 2][0]
    with_big = [i for i in topo.interfaces if big in (i.k, i.l)]
    # two interfaces with the big patch plus the matching one between the small squares
    assert len(with_big) == 2 and len(topo.interfaces) == 3
    for itf in with_big:
        assert itf.l == big and itf.t_junction
        assert (itf.a, itf.b) in ((0.0, 0.5), (0.5, 1.0))
    tj = [v for v in topo.vertices if v.t_junction]
    assert len(tj) == 1
    assert np.allclose(tj[0].point, [2, 1])
    assert len(tj[0].incidences) == 3


def test_checkerboard_counts():
    topo = build_topology(checkerboard(2, 0))
    assert len(topo.interfaces) == 24
    assert len(topo.vertices) == 25
    assert sum(not v.dirichlet for v in topo.vertices) == 9


def test_order_independence(rng):
    patches = checkerboard(2, 0, pattern="good")
    ref = build_topology(patches)
    perm = rng.permutation(len(patches))
    other = build_topology([patches[i] for i in perm])
    assert [p.lineage for p in ref.patches] == [p.lineage for p in other.patches]
    key = lambda t: sorted((i.k, i.side_k, i.l, i.side_l, i.a, i.b, i.flipped) for i in t.interfaces)  # noqa: E731
    assert key(ref) == key(other)
    assert np.allclose([v.point for v in ref.vertices], [v.point for v in other.vertices])


def test_flipped_orientation():
    # second patch parameterized with reversed second direction
    a = square(0, 0, 1, 1)
    b = Patch(BilinearMap([(1, 1), (2, 1), (1, 0), (2, 0)]), splines.uniform(2, 3), splines.uniform(2, 3))
    topo = build_topology([a, b])
    assert len(topo.interfaces) == 1
    itf = topo.interfaces[0]
    assert itf.flipped
    pk, pl = topo.patches[itf.k], topo.patches[itf.l]
    t = np.linspace(0, 1, 5)
    assert np.allclose(pk.side_curve(itf.side_k, t), pl.side_curve(itf.side_l, itf.map_k_to_l(t)))


def test_non_admissible_partial_overlap():
    with pytest.raises(NonAdmissibleDecomposition):
        build_topology([square(0, 0, 1, 1), square(1, 0.5, 2, 1.5)])


def test_point_contact_is_not_an_interface():
    topo = build_topology([square(0, 0, 1, 1), square(1, 1, 2, 2)])
    assert topo.interfaces == []
    assert len(topo.vertices) == 7


def test_check_assumptions():
    rep = check_assumptions(build_topology([Patch(IDENTITY, splines.uniform(2, 4), splines.uniform(2, 4))]))
    assert rep.c_g[0] == pytest.approx(1.0)
    assert rep.c_q[0] == 1.0
    rep = check_assumptions(build_topology([Patch(AnnulusSector(1, 2), splines.uniform(2, 4), splines.uniform(2, 4))]))
    assert 1 <= rep.c_g[0] <= 4
    assert all(rep.det_sign_ok)


def test_splitting_preserves_admissibility():
    patches = checkerboard(2, 0, pattern="uniform")
    topo = build_topology(patches)
    n_itf = len(topo.interfaces)
    children = split_patch(topo.patches[5])
    new = build_topology(topo.patches[:5] + children + topo.patches[6:])
    # 4 internal interfaces among the children; each former interface of the parent
    # is now shared by two children
    assert len(new.interfaces) == n_itf + 4 + sum(
        1 for i in topo.interfaces if 5 in (i.k, i.l)
    )
    assert sum(v.t_junction for v in new.vertices) == sum(1 for i in topo.interfaces if 5 in (i.k, i.l))
    assert all(check_assumptions(new).det_sign_ok)
