import numpy as np
import pytest

from conftest import FIXTURES, cross, two_matching, two_nested
from ietidp.coupling import z_injective
from ietidp.errors import DimensionMismatch
from ietidp.experiments import checkerboard
from ietidp.preconditioners import Deluxe, ScaledDirichlet, jump_check, jump_operator, selection_scaling
from ietidp.solver import setup, solve


def dense_schur(system):
    a = system.A.toarray()
    ni = system.layout.n_interior
    aii, aig, agi, agg = a[:ni, :ni], a[:ni, ni:], a[ni:, :ni], a[ni:, ni:]
    return agg - agi @ np.linalg.solve(aii, aig) if ni else agg


def boundary_block(cs, systems, k):
    ni = systems[k].layout.n_interior
    return cs.patch_block(k).toarray()[:, ni:]


def probe_symmetric_psd(apply, n, rng):
    x, y = rng.standard_normal((2, n, 10))
    mx, my = apply(x), apply(y)
    lhs, rhs = np.einsum("ij,ij->j", y, mx), np.einsum("ij,ij->j", x, my)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(np.abs(lhs).max(), 1e-300)
    assert np.all(np.einsum("ij,ij->j", x, mx) >= -1e-12 * np.abs(mx).max())


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_symmetry_and_semidefiniteness(name, rng):
    topo, cps, lays, systems, cs = setup(FIXTURES[name]())
    for m in (ScaledDirichlet(cs, systems), Deluxe(cs, cps, systems)):
        probe_symmetric_psd(m.apply, cs.n_lambda, rng)
        assert np.allclose(m.apply(np.zeros(cs.n_lambda)), 0)
        with pytest.raises(DimensionMismatch):
            m.apply(np.zeros(cs.n_lambda + 2))


@pytest.mark.parametrize("patches", [two_nested(p=1, ne=2), two_nested(p=2, ne=2), cross(p=1, ne=2, fine=[0, 3])])
def test_scaled_dirichlet_dense_oracle(patches):
    topo, cps, lays, systems, cs = setup(patches)
    d = selection_scaling(cs, systems)
    ref = np.zeros((cs.n_lambda, cs.n_lambda))
    for k, s in enumerate(systems):
        bg = boundary_block(cs, systems, k)
        dk = np.diag(d[k])
        ref += bg @ dk @ dense_schur(s) @ dk @ bg.T
    m = ScaledDirichlet(cs, systems).dense()
    assert np.abs(m - ref).max() <= 1e-10 * np.abs(ref).max()


def test_selection_scaling_is_selection():
    topo, cps, lays, systems, cs = setup(checkerboard(2, 0, pattern="good"))
    d = selection_scaling(cs, systems)
    for dk in d:
        assert set(np.unique(dk)) <= {0.0, 1.0}
        assert np.array_equal(dk * dk, dk)
    assert sum(int(dk.sum()) for dk in d) == len(cs.I_Z)
    assert z_injective(cs)


@pytest.mark.parametrize("patches", [two_nested(p=1, ne=2), two_nested(p=2, ne=3)])
def test_deluxe_dense_oracle(patches):
    topo, cps, lays, systems, cs = setup(patches)
    ref = np.zeros((cs.n_lambda, cs.n_lambda))
    for ci, c in enumerate(cps):
        rows = np.nonzero(cs.row_coupling == ci)[0]
        sf_full = dense_schur(systems[c.fine])
        sc_full = dense_schur(systems[c.coarse])
        lf, lc = lays[c.fine], lays[c.coarse]
        f_loc = np.array([cs.dual_rows[r][2] for r in rows]) - lf.n_interior
        f_edge = np.array([cs.dual_rows[r][3] for r in rows])
        # coarse open-edge functions: kept, not at a vertex, seen by the embedding
        edge, c_loc = lc.side_dofs(c.coarse_side)
        keep = [(e, loc) for e, loc in zip(edge, c_loc) if loc not in cs.vertex_dofs[c.coarse] and np.any(c.E[:, e])]
        ce = np.array([e for e, _ in keep])
        cl = np.array([loc for _, loc in keep]) - lc.n_interior
        sf = sf_full[np.ix_(f_loc, f_loc)]
        sc = sc_full[np.ix_(cl, cl)]
        p = c.E[np.ix_(f_edge, ce)]
        block = np.linalg.inv(np.linalg.inv(sf) + p @ np.linalg.inv(sc) @ p.T)
        ref[np.ix_(rows, rows)] += block
    m = Deluxe(cs, cps, systems).dense()
    assert np.abs(m - ref).max() <= 1e-10 * np.abs(ref).max()


class IdentitySchur:
    def dense(self, idx):
        return np.eye(len(idx))


def test_deluxe_identity_blocks_give_half():
    topo, cps, lays, systems, cs = setup(two_matching(p=2, ne=4))
    m = Deluxe(cs, cps, systems, schur=[IdentitySchur(), IdentitySchur()])
    assert np.allclose(m.dense(), 0.5 * np.eye(cs.n_lambda))


def vertex_continuous(topo, cs, systems, rng, dual=False):
    """Random boundary vectors agreeing at every vertex (zero at vertices if ``dual``)."""
    vals = np.zeros(cs.n_primal) if dual else rng.standard_normal(cs.n_primal)
    out = []
    for k, s in enumerate(systems):
        ni = s.layout.n_interior
        w = rng.standard_normal(s.n - ni)
        c = cs.C[k].toarray()[:, ni:]
        if c.shape[0]:
            target = vals[cs.primal_ids[k]]
            w += c.T @ np.linalg.solve(c @ c.T, target - c @ w)
        out.append(w)
    return out


@pytest.mark.parametrize("name", sorted(FIXTURES) + ["checkerboard"])
def test_jump_identity(name, rng):
    patches = checkerboard(2, 0, pattern="good") if name == "checkerboard" else FIXTURES[name]()
    topo, cps, lays, systems, cs = setup(patches)
    for _ in range(20):
        w = vertex_continuous(topo, cs, systems, rng)
        checks, v = jump_check(topo, cps, cs, systems, w)
        scale = max(np.abs(np.concatenate(w)).max(), 1.0)
        for ch in checks:
            assert np.abs(ch["fine_v"] - ch["jump"]).max() < 1e-9 * scale
            assert np.abs(ch["coarse_v"]).max() < 1e-9 * scale
        # the image vanishes at every vertex
        for k, s in enumerate(systems):
            ni = s.layout.n_interior
            c = cs.C[k].toarray()[:, ni:]
            if c.shape[0]:
                assert np.abs(c @ v[k]).max() < 1e-9 * scale


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_jump_operator_keeps_dual_jumps(name, rng):
    topo, cps, lays, systems, cs = setup(FIXTURES[name]())

    def b_gamma(w):
        full = np.zeros(cs.B.shape[1])
        for k, s in enumerate(systems):
            full[cs.offsets[k] + s.layout.n_interior : cs.offsets[k + 1]] = w[k]
        return cs.B @ full

    for _ in range(20):
        w = vertex_continuous(topo, cs, systems, rng, dual=True)
        v = jump_operator(cs, systems, w)
        assert np.abs(b_gamma(v) - b_gamma(w)).max() < 1e-9 * max(np.abs(b_gamma(w)).max(), 1.0)


def test_continuous_input_has_no_jump(rng):
    topo, cps, lays, systems, cs = setup(two_nested(p=2, ne=3))
    sol = solve(two_nested(p=2, ne=3), tol=1e-12)
    w = [u[s.layout.n_interior :] for u, s in zip(sol.local, sol.systems)]
    checks, v = jump_check(topo, cps, cs, systems, w)
    for ch in checks:
        assert np.abs(ch["jump"]).max() < 1e-9
        assert np.abs(ch["fine_v"]).max() < 1e-9


def test_single_fine_perturbation_shows_on_one_interface():
    topo, cps, lays, systems, cs = setup(FIXTURES["cross"]())
    w = [np.zeros(s.n - s.layout.n_interior) for s in systems]
    key = cs.I_Z[0]
    k, loc = key
    w[k][loc - systems[k].layout.n_interior] = 1.0
    checks, v = jump_check(topo, cps, cs, systems, w)
    hit = cps[cs.row_coupling[cs.Z[key]]]
    for ch in checks:
        if ch["coupling"] is hit:
            assert np.abs(ch["fine_v"]).max() > 0.1
        else:
            assert np.abs(ch["fine_v"]).max() < 1e-12 and np.abs(ch["coarse_v"]).max() < 1e-12


def test_matching_iterations_close():
    patches = cross(p=2, ne=4)
    its = [solve(patches, precond=m, tol=1e-6).report.iterations for m in ("selection", "deluxe")]
    assert abs(its[0] - its[1]) <= 3
