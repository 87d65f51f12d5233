"""Shared fixture geometries for the test suite."""

from functools import lru_cache

import numpy as np
import pytest

from ietidp.experiments import ExperimentConfig, run_adaptive
from ietidp.geometry import BilinearMap, Patch
from ietidp.splines import uniform


def square(x0, y0, x1, y1, p=2, ne1=3, ne2=None, nu=1.0):
    """Axis-parallel rectangle patch with uniform knots."""
    ne2 = ne1 if ne2 is None else ne2
    g = BilinearMap([(x0, y0), (x1, y0), (x0, y1), (x1, y1)])
    return Patch(g, uniform(p, ne1), uniform(p, ne2), nu=nu)


def two_matching(p=2, ne=3):
    return [square(0, 0, 1, 1, p, ne), square(1, 0, 2, 1, p, ne)]


def two_nested(p=2, ne=3):
    return [square(0, 0, 1, 1, p, ne), square(1, 0, 2, 1, p, 2 * ne)]


def t_junction(p=2, ne=3):
    """Big square [0,2]^2 next to two stacked unit squares; T-junction at (2, 1)."""
    return [square(0, 0, 2, 2, p, ne), square(2, 0, 3, 1, p, ne), square(2, 1, 3, 2, p, ne)]


def cross(p=1, ne=2, fine=None):
    """2x2 squares of the unit square; ``fine`` lists patches refined once."""
    fine = set(fine or ())
    boxes = [(0, 0, 0.5, 0.5), (0.5, 0, 1, 0.5), (0, 0.5, 0.5, 1), (0.5, 0.5, 1, 1)]
    return [square(*b, p, 2 * ne if i in fine else ne) for i, b in enumerate(boxes)]


FIXTURES = {
    "matching": lambda: two_matching(),
    "nested": lambda: two_nested(),
    "tjunction": lambda: t_junction(),
    "cross": lambda: cross(p=2, ne=3, fine=[1]),
}


@lru_cache(maxsize=None)
def adaptive(p, consistency, rounds):
    """Rows of the adaptive quarter-annulus run (cached across test modules)."""
    cfg = ExperimentConfig(experiment="adaptive", p=[p], rounds=rounds, consistency=consistency)
    return tuple(run_adaptive(cfg))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# ---------------------------------------------------------------------------
# acceptance reporting: one line per criterion, repeated in the terminal summary

ACCEPTANCE_LINES = {}


def record(criterion, ok, detail):
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES[criterion] = line
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
