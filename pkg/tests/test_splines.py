import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ietidp import splines
from ietidp.errors import InvalidKnotVector, InvalidSubinterval, NotNested, OutOfDomain
from ietidp.splines import KnotVector


def recursive_basis(knots, p, i, x):
    """Textbook recursive definition (right-continuous, closed at x = 1)."""
    if p == 0:
        if knots[i] <= x < knots[i + 1]:
            return 1.0
        last = x == knots[-1] and knots[i] < knots[i + 1] == knots[-1]
        return 1.0 if last else 0.0
    out = 0.0
    if knots[i + p] > knots[i]:
        out += (x - knots[i]) / (knots[i + p] - knots[i]) * recursive_basis(knots, p - 1, i, x)
    if knots[i + p + 1] > knots[i + 1]:
        out += (knots[i + p + 1] - x) / (knots[i + p + 1] - knots[i + 1]) * recursive_basis(knots, p - 1, i + 1, x)
    return out


def random_kv(rng, p, n_inner=6):
    inner = np.sort(rng.uniform(0.05, 0.95, n_inner))
    return KnotVector(p, np.concatenate([np.zeros(p + 1), inner, np.ones(p + 1)]))


def test_invalid_knot_vectors():
    with pytest.raises(InvalidKnotVector):
        KnotVector(1, [0, 1, 1])
    with pytest.raises(InvalidKnotVector):
        KnotVector(2, [0, 0, 0, 0.6, 0.4, 1, 1, 1])
    with pytest.raises(InvalidKnotVector):
        KnotVector(1, [0, 0, 0.5, 0.5, 1, 1])
    with pytest.raises(InvalidKnotVector):
        KnotVector(0, [0, 1])


def test_eval_linear_midpoint():
    first, vals = splines.eval_basis(KnotVector(1, [0, 0, 1, 1]), 0.5)
    assert first == 0
    assert np.allclose(vals, [0.5, 0.5])


@pytest.mark.parametrize("p", [1, 2, 3, 5])
def test_eval_at_zero_interpolates(p):
    first, vals = splines.eval_basis(splines.uniform(p, 4), 0.0)
    assert first == 0 and vals[0] == 1 and np.all(vals[1:] == 0)


def test_eval_quadratic_hand_value():
    kv = KnotVector(2, [0, 0, 0, 0.5, 1, 1, 1])
    first, vals = splines.eval_basis(kv, 0.25)
    assert first == 0
    assert np.allclose(vals, [0.25, 0.625, 0.125], atol=1e-15)
    oracle = [recursive_basis(kv.knots, 2, i, 0.25) for i in range(3)]
    assert np.allclose(vals, oracle)


def test_eval_matches_recursive_oracle(rng):
    for p in (1, 2, 3, 4):
        kv = random_kv(rng, p)
        for x in np.concatenate([rng.uniform(0, 1, 20), [0.0, 1.0]]):
            first, vals = splines.eval_basis(kv, x)
            full = np.zeros(kv.n)
            full[first : first + p + 1] = vals
            oracle = [recursive_basis(kv.knots, p, i, x) for i in range(kv.n)]
            assert np.allclose(full, oracle, atol=1e-13)


def test_out_of_domain():
    kv = splines.uniform(2, 3)
    with pytest.raises(OutOfDomain):
        splines.eval_basis(kv, 1.5)
    with pytest.raises(OutOfDomain):
        splines.eval_derivs(kv, -0.1)


@pytest.mark.parametrize("p", [1, 2, 3, 4, 6])
def test_partition_of_unity(p, rng):
    kv = random_kv(rng, p, 8)
    x = rng.uniform(0, 1, 1000)
    _, vals = splines.basis_derivs(kv, x, 0)
    assert np.abs(vals[:, 0].sum(axis=1) - 1).max() < 1e-13
    assert vals.min() >= -1e-15


def test_derivative_examples():
    _, d = splines.eval_derivs(KnotVector(1, [0, 0, 1, 1]), 0.5, 1)
    assert np.allclose(d, [-1, 1])
    _, d = splines.eval_derivs(KnotVector(2, [0, 0, 0, 1, 1, 1]), 0.5, 1)
    assert np.allclose(d, [-1, 0, 1])


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_derivatives_against_finite_differences(p, rng):
    kv = random_kv(rng, p, 5)
    x = rng.uniform(0.01, 0.99, 50)
    x = x[np.min(np.abs(x[:, None] - kv.knots[None, :]), axis=1) > 1e-4]
    eps = 1e-6
    d = splines.collocation(kv, x, 1).toarray()
    fd = (splines.collocation(kv, x + eps).toarray() - splines.collocation(kv, x - eps).toarray()) / (2 * eps)
    assert np.abs(d - fd).max() < 1e-5
    assert np.abs(d.sum(axis=1)).max() < 1e-10
    if p >= 2:
        d2 = splines.collocation(kv, x, 2).toarray()
        fd2 = (splines.collocation(kv, x + eps, 1).toarray() - splines.collocation(kv, x - eps, 1).toarray()) / (2 * eps)
        assert np.abs(d2 - fd2).max() < 1e-3 * max(1, np.abs(d2).max())


def test_insert_knots_examples():
    e = splines.insert_knots(KnotVector(1, [0, 0, 1, 1]), KnotVector(1, [0, 0, 0.5, 1, 1]))
    assert np.allclose(e, [[1, 0], [0.5, 0.5], [0, 1]])
    kv = splines.uniform(3, 5)
    assert np.allclose(splines.insert_knots(kv, kv), np.eye(kv.n))
    e = splines.insert_knots(KnotVector(2, [0, 0, 0, 1, 1, 1]), KnotVector(2, [0, 0, 0, 0.5, 1, 1, 1]))
    assert np.allclose(e, [[1, 0, 0], [0.5, 0.5, 0], [0, 0.5, 0.5], [0, 0, 1]])


def test_insert_knots_not_nested():
    with pytest.raises(NotNested):
        splines.insert_knots(splines.uniform(2, 3), splines.uniform(2, 4))
    with pytest.raises(NotNested):
        splines.insert_knots(splines.uniform(2, 3), splines.uniform(3, 6))


@pytest.mark.parametrize("p", [1, 2, 3, 5])
def test_insert_knots_round_trip(p, rng):
    coarse = random_kv(rng, p, 4)
    repeat = coarse.knots[p + 1 : p + 3] if p > 1 else []
    fine = KnotVector(p, np.sort(np.concatenate([coarse.knots, rng.uniform(0, 1, 7), repeat])))
    e = splines.insert_knots(coarse, fine)
    assert e.min() >= 0
    c = rng.standard_normal(coarse.n)
    x = np.linspace(0, 1, 200)
    assert np.abs(splines.evaluate(fine, e @ c, x) - splines.evaluate(coarse, c, x)).max() < 1e-12
    # every column reproduces its coarse basis function
    assert np.abs(splines.collocation(fine, x) @ e - splines.collocation(coarse, x)).max() < 1e-12


def test_dyadic_refine_and_greville():
    assert np.allclose(splines.dyadic_refine(KnotVector(1, [0, 0, 1, 1])).knots, [0, 0, 0.5, 1, 1])
    assert np.allclose(splines.greville(KnotVector(2, [0, 0, 0, 0.5, 1, 1, 1])), [0, 0.25, 0.75, 1])


@pytest.mark.parametrize("p", [1, 2, 4])
def test_dyadic_refine_halves_h(p, rng):
    kv = random_kv(rng, p, 4)
    ref = splines.dyadic_refine(kv)
    assert ref.h == pytest.approx(kv.h / 2, abs=1e-15)
    assert ref.h_min / ref.h == pytest.approx(kv.h_min / kv.h)
    assert splines.contains(ref, kv)


def test_restrict_example():
    r = splines.restrict(KnotVector(1, [0, 0, 0.5, 1, 1]), 0, 0.5)
    assert np.allclose(r.knots, [0, 0, 1, 1])


def test_restrict_same_space(rng):
    kv = splines.uniform(3, 8)
    a, b = 0.25, 0.75
    r = splines.restrict(kv, a, b)
    rm = splines.restriction_matrix(kv, a, b)
    c = rng.standard_normal(kv.n)
    s = np.linspace(0, 1, 101)
    assert np.allclose(splines.evaluate(r, rm @ c, s), splines.evaluate(kv, c, a + (b - a) * s), atol=1e-12)


def test_restrict_invalid():
    with pytest.raises(InvalidSubinterval):
        splines.restrict(splines.uniform(2, 4), 0.5, 0.5)
    with pytest.raises(InvalidSubinterval):
        splines.restrict(splines.uniform(2, 4), -0.5, 0.5)


@settings(max_examples=40, deadline=None)
@given(
    p=st.integers(1, 4),
    n=st.integers(1, 6),
    extra=st.lists(st.floats(0.01, 0.99), min_size=0, max_size=5),
    x=st.floats(0.0, 1.0),
)
def test_embedding_property(p, n, extra, x):
    coarse = splines.uniform(p, n)
    try:
        fine = KnotVector(p, np.sort(np.concatenate([coarse.knots, extra])))
    except InvalidKnotVector:
        return
    e = splines.insert_knots(coarse, fine)
    lhs = splines.collocation(fine, [x]) @ e
    rhs = splines.collocation(coarse, [x]).toarray()
    assert np.abs(lhs - rhs).max() < 1e-12
    assert e.min() >= 0
