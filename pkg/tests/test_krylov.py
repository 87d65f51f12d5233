import numpy as np
import pytest
from scipy.stats import ortho_group

from ietidp.errors import IndefiniteOperatorDetected, MaxIterationsExceeded
from ietidp.experiments import checkerboard
from ietidp.krylov import estimate_condition, pcg
from ietidp.solver import solve


def test_identity_one_iteration():
    x, rep = pcg(lambda v: v, None, np.array([1.0, -2.0, 3.0]), 1e-6)
    assert rep.iterations == 1
    assert rep.kappa == pytest.approx(1.0)
    assert np.allclose(x, [1, -2, 3])


def test_two_eigenvalues():
    a = np.diag([1.0, 4.0])
    x, rep = pcg(lambda v: a @ v, None, np.array([1.0, 1.0]), 1e-10)
    assert rep.iterations <= 2
    assert abs(rep.kappa - 4.0) < 1e-8
    assert np.allclose(x, [1, 0.25])


def test_zero_rhs():
    x, rep = pcg(lambda v: 2 * v, None, np.zeros(4), 1e-6)
    assert rep.iterations == 0 and np.all(x == 0)


def test_estimate_condition_examples():
    assert estimate_condition([0.5])[2] == 1.0
    lo, hi, kappa = estimate_condition(None, diag=[1.0, 4.0], off=[0.0])
    assert (lo, hi, kappa) == (1.0, 4.0, 4.0)


def test_random_known_spectrum():
    rng = np.random.default_rng(7)
    q = ortho_group.rvs(20, random_state=rng)
    ev = np.concatenate([[1.0], rng.uniform(1, 50, 18), [50.0]])
    a = q @ np.diag(ev) @ q.T
    x, rep = pcg(lambda v: a @ v, None, rng.standard_normal(20), 1e-14, 20, raise_on_maxiter=False)
    assert abs(rep.kappa - 50.0) <= 0.05 * 50.0


def test_preconditioned_problem():
    rng = np.random.default_rng(3)
    g = rng.standard_normal((30, 30))
    a = g @ g.T + 30 * np.eye(30)
    m = np.diag(1 / np.diag(a))
    b = rng.standard_normal(30)
    x, rep = pcg(lambda v: a @ v, lambda r: m @ r, b, 1e-10)
    assert np.linalg.norm(a @ x - b) <= 1e-8 * np.linalg.norm(b)
    ev = np.linalg.eigvals(m @ a).real
    assert rep.kappa == pytest.approx(ev.max() / ev.min(), rel=0.05)


def test_indefinite_detected():
    with pytest.raises(IndefiniteOperatorDetected):
        pcg(lambda v: np.diag([1.0, -1.0]) @ v, None, np.array([0.0, 1.0]), 1e-8)


def test_max_iterations():
    a = np.diag(np.arange(1.0, 51.0))
    with pytest.raises(MaxIterationsExceeded) as exc:
        pcg(lambda v: a @ v, None, np.ones(50), 1e-12, 3)
    rep = exc.value.report
    assert exc.value.solution.shape == (50,)
    assert rep.iterations == 3 and not rep.converged
    x, rep = pcg(lambda v: a @ v, None, np.ones(50), 1e-12, 3, raise_on_maxiter=False)
    assert not rep.converged


@pytest.mark.parametrize("precond", ["selection", "deluxe"])
@pytest.mark.parametrize("pattern", ["good", "bad"])
def test_history_properties(precond, pattern):
    sol = solve(checkerboard(2, 0, pattern=pattern), precond=precond, tol=1e-6)
    rep = sol.report
    assert rep.true_residual <= 10 * 1e-6
    hist = rep.kappa_history()
    assert all(b >= a * (1 - 1e-8) for a, b in zip(hist, hist[1:]))
    assert hist[-1] == pytest.approx(rep.kappa)
    assert rep.kappa >= 1.0


def test_true_residual_guard_on_checkerboard():
    for pattern in ("good", "uniform"):
        rep = solve(checkerboard(2, 0, pattern=pattern), precond="selection", tol=1e-6).report
        assert rep.true_residual <= 10 * 1e-6
