"""Geometries and parameter sweeps of the numerical experiments."""

import csv
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import splines
from .adaptivity import consistency_split, doerfler_mark, estimate_solution, refine_patches
from .errors import IetiError
from .geometry import AnnulusSector, Patch
from .solver import solve


def initial_knots(p, r=0):
    """Uniform knot vector with ``h0 = 1/(p+1)`` refined ``r`` times dyadically."""
    kv = splines.uniform(p, p + 1)
    for _ in range(r):
        kv = splines.dyadic_refine(kv)
    return kv


def quarter_annulus_grid(nr, nt, r_inner=1.0, r_outer=2.0):
    """Sub-sector maps of the quarter annulus split into ``nr x nt`` patches."""
    rs = np.linspace(r_inner, r_outer, nr + 1)
    ts = np.linspace(0.0, np.pi / 2, nt + 1)
    return {(i, j): AnnulusSector(rs[i], rs[i + 1], ts[j], ts[j + 1]) for i in range(nr) for j in range(nt)}


def checkerboard(p, r, disparity=1, pattern="good", nu_orange=1000.0, radii=(1.0, 2.0)):
    """4x4 checkerboard on the quarter annulus.

    Orange patches are those with even ``i + j``.  ``pattern``:

    * ``"uniform"``: nu = 1 everywhere, white patches refined ``disparity`` extra times;
    * ``"good"``: nu = ``nu_orange`` on orange, white refined ``disparity`` extra times;
    * ``"bad"``: nu = ``nu_orange`` on orange, orange refined ``disparity`` extra times.
    """
    pattern = {"good-checkerboard": "good", "bad-checkerboard": "bad"}.get(pattern, pattern)
    if pattern not in ("uniform", "good", "bad"):
        raise ValueError(f"unknown pattern {pattern!r}")
    patches = []
    for (i, j), g in quarter_annulus_grid(4, 4, *radii).items():
        orange = (i + j) % 2 == 0
        refined = (not orange) if pattern in ("uniform", "good") else orange
        kv = initial_knots(p, r + (disparity if refined else 0))
        nu = nu_orange if (orange and pattern != "uniform") else 1.0
        patches.append(Patch(g, kv, kv, nu=nu, level=0, lineage=(i, j), tag="orange" if orange else "white"))
    return patches


def adaptive_initial(p, nu_corner=1000.0, radii=(1.0, 2.0)):
    """2x2 quarter annulus; the inner-radius, small-angle patch gets ``nu_corner``."""
    kv = initial_knots(p, 0)
    patches = []
    for (i, j), g in quarter_annulus_grid(2, 2, *radii).items():
        nu = nu_corner if (i, j) == (0, 0) else 1.0
        patches.append(Patch(g, kv, kv, nu=nu, level=0, lineage=((i, j),), tag="orange" if nu != 1.0 else "white"))
    return patches


# ---------------------------------------------------------------------------
# sweep drivers


DEFAULT_MAX_DOFS = 2_000_000


@dataclass
class ExperimentConfig:
    experiment: str = "checkerboard"  # checkerboard | adaptive | single
    p: list = field(default_factory=lambda: [2])
    refine: list = field(default_factory=lambda: [0])
    disparity: list = field(default_factory=lambda: [1])
    pattern: str = "good"  # uniform | good | bad (or good-/bad-checkerboard)
    nu_orange: float = 1000.0
    precond: str = "selection"  # selection | deluxe | none
    tol: float = None  # experiment default when None
    theta: float = 0.8
    rounds: int = 8
    consistency: bool = True
    radii: tuple = (1.0, 2.0)
    max_iter: int = 5000
    max_dofs: int = DEFAULT_MAX_DOFS
    out: str = None
    history: str = None

    def __post_init__(self):
        for name in ("p", "refine", "disparity"):
            v = getattr(self, name)
            setattr(self, name, [int(x) for x in (v if isinstance(v, (list, tuple)) else [v])])
        self.radii = tuple(float(r) for r in self.radii)
        if self.experiment not in ("checkerboard", "adaptive", "single"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.precond not in ("selection", "deluxe", "none"):
            raise ValueError(f"unknown preconditioner {self.precond!r}")
        if self.experiment != "adaptive" and min(self.p) < 1:
            raise ValueError("degree must be positive")
        if self.tol is None:
            self.tol = 1e-10 if self.experiment == "adaptive" else 1e-6
        if not 0 < self.tol < 1:
            raise ValueError("tolerance must lie in (0, 1)")
        if not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")


@dataclass
class ResultRow:
    experiment: str
    p: int
    r: int  # refinement levels (checkerboard) or round (adaptive)
    d: int
    hhat: str  # finest parametric grid size relative to (p+1)^-1
    K: int
    iterations: int
    kappa: float
    ndofs: int
    eta: float = float("nan")
    extra_patches: int = 0
    status: str = "ok"
    wall_time: float = 0.0


def hhat_label(r, d=0):
    """Relative grid size of the finest patches, ``2^-(r+d)``."""
    return f"2^-{r + d}"


def format_kappa(kappa):
    """Plain with four significant digits below 1000, else like ``6.0e3``."""
    if not np.isfinite(kappa):
        return str(kappa)
    if kappa < 1000:
        return f"{kappa:.4g}"
    e = int(np.floor(np.log10(kappa)))
    m = round(kappa / 10.0**e, 1)
    if m >= 10:
        m, e = m / 10, e + 1
    return f"{m:.1f}e{e}"


def _tag(exc, where):
    """Prefix the message of a package error with the failing cell."""
    exc.cell = where
    exc.args = (f"{where}: {exc}",) + exc.args[1:]


def _solve_cell(patches, cfg):
    return solve(patches, precond=cfg.precond, tol=cfg.tol, max_iter=cfg.max_iter)


def checkerboard_cell(cfg, p, r, d):
    """One checkerboard solve; returns (ResultRow, solution or None)."""
    patches = checkerboard(p, r, d, cfg.pattern, cfg.nu_orange, cfg.radii)
    n = sum(pt.ndofs for pt in patches)
    if n > cfg.max_dofs:
        row = ResultRow(cfg.experiment, p, r, d, hhat_label(r, d), len(patches), 0, float("nan"), n)
        row.status = "SkippedOverBudget"
        return row, None
    t0 = time.perf_counter()
    try:
        sol = _solve_cell(patches, cfg)
    except IetiError as exc:
        _tag(exc, f"checkerboard cell p={p} r={r} d={d}")
        raise
    rep = sol.report
    row = ResultRow(
        cfg.experiment, p, r, d, hhat_label(r, d), sol.topo.n_patches, rep.iterations, rep.kappa, sol.ndofs,
        wall_time=time.perf_counter() - t0,
    )
    return row, sol


def run_checkerboard(cfg):
    """Sweep over (p, r, d); one row per cell."""
    return [checkerboard_cell(cfg, p, r, d)[0] for p in cfg.p for d in cfg.disparity for r in cfg.refine]


def run_single(cfg):
    """A single checkerboard cell (first sweep values); also returns its PCG report."""
    row, sol = checkerboard_cell(cfg, cfg.p[0], cfg.refine[0], cfg.disparity[0])
    return [row], (sol.report if sol is not None else None)


def run_adaptive(cfg, p=None):
    """Adaptive loop: solve, estimate, mark, split, consistency-split.

    Returns one row per round (the row of round ``j`` describes the mesh that
    was solved in that round).
    """
    p = cfg.p[0] if p is None else p
    patches = adaptive_initial(p, cfg.nu_orange, cfg.radii)
    rows = []
    extra = 0
    for rnd in range(1, cfg.rounds + 1):
        t0 = time.perf_counter()
        n = sum(pt.ndofs for pt in patches)
        if n > cfg.max_dofs:
            rows.append(ResultRow("adaptive", p, rnd, 0, "", len(patches), 0, float("nan"), n, status="SkippedOverBudget"))
            break
        try:
            sol = _solve_cell(patches, cfg)
        except IetiError as exc:
            _tag(exc, f"adaptive p={p} round {rnd}")
            raise
        est = estimate_solution(sol)
        rows.append(
            ResultRow(
                "adaptive", p, rnd, 0, "", sol.topo.n_patches, sol.report.iterations, sol.report.kappa, sol.ndofs,
                eta=est.eta, extra_patches=extra, wall_time=time.perf_counter() - t0,
            )
        )
        if rnd == cfg.rounds:
            break
        patches = refine_patches(sol.topo.patches, doerfler_mark(est, cfg.theta))
        res = consistency_split(patches, coefficients=cfg.consistency)
        patches, extra = res.patches, res.extra_patches
    return rows


def run(cfg):
    if cfg.experiment == "checkerboard":
        return run_checkerboard(cfg), None
    if cfg.experiment == "single":
        return run_single(cfg)
    return [row for p in cfg.p for row in run_adaptive(cfg, p)], None


def row_fields(timing=False):
    names = [f.name for f in fields(ResultRow)]
    return names if timing else [n for n in names if n != "wall_time"]


def _row_values(row, names):
    out = []
    for n in names:
        v = getattr(row, n)
        if n == "kappa":
            v = format_kappa(v)
        elif n == "eta":
            v = "" if not np.isfinite(v) else f"{v:.6e}"
        elif n == "wall_time":
            v = f"{v:.3f}"
        out.append(v)
    return out


def emit_csv(rows, path, timing=False):
    """Write rows as CSV.  Wall times are left out unless ``timing`` so that
    identical configurations give identical files."""
    names = row_fields(timing)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in rows:
            w.writerow(_row_values(row, names))


def emit_history(report, path):
    """Per-iteration relative residual and running condition estimate."""
    kap = [float("nan")] + report.kappa_history()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "residual", "kappa"])
        for i, (res, k) in enumerate(zip(report.residuals, kap)):
            w.writerow([i, f"{res:.6e}", "" if not np.isfinite(k) else f"{k:.6g}"])


def format_table(rows, timing=True):
    names = row_fields(timing)
    body = [[str(v) for v in _row_values(r, names)] for r in rows]
    widths = [max(len(n), *(len(b[i]) for b in body)) if body else len(n) for i, n in enumerate(names)]
    lines = ["  ".join(n.rjust(wd) for n, wd in zip(names, widths))]
    lines += ["  ".join(v.rjust(wd) for v, wd in zip(b, widths)) for b in body]
    return "\n".join(lines)
