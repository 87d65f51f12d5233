"""Preconditioned conjugate gradients with a Lanczos condition estimate."""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .errors import IndefiniteOperatorDetected, MaxIterationsExceeded


@dataclass
class SolveReport:
    iterations: int = 0
    residuals: list = field(default_factory=list)  # relative preconditioned residual per iteration
    lambda_min: float = 1.0
    lambda_max: float = 1.0
    kappa: float = 1.0
    wall_time: float = 0.0
    converged: bool = True
    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)
    true_residual: float = 0.0

    def kappa_history(self):
        """Condition estimate after each iteration."""
        return [estimate_condition(self.alphas[:j], self.betas[: j - 1])[2] for j in range(1, len(self.alphas) + 1)]


def lanczos_tridiagonal(alphas, betas):
    """Diagonal and off-diagonal of the Lanczos matrix generated by CG.

    ``alphas`` are the CG step lengths, ``betas`` the direction update
    coefficients (``len(betas) >= len(alphas) - 1``).
    """
    a = np.asarray(alphas, dtype=float)
    b = np.asarray(betas, dtype=float)[: max(a.size - 1, 0)]
    diag = 1.0 / a
    diag[1:] += b / a[:-1]
    off = np.sqrt(np.maximum(b, 0.0)) / a[:-1]
    return diag, off


def estimate_condition(alphas, betas=(), diag=None, off=None):
    """Extreme Ritz values of the Lanczos tridiagonal and their ratio.

    Either CG coefficients or an explicit tridiagonal ``(diag, off)`` may be
    given.  Eigenvalues are computed by bisection.
    """
    if diag is None:
        diag, off = lanczos_tridiagonal(alphas, betas)
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    if diag.size == 0:
        return 1.0, 1.0, 1.0
    if diag.size == 1:
        return float(diag[0]), float(diag[0]), 1.0
    ev = eigvalsh_tridiagonal(diag, off, lapack_driver="stebz")
    lo, hi = float(ev[0]), float(ev[-1])
    return lo, hi, max(hi / lo, 1.0) if lo > 0 else float("inf")


def pcg(apply_op, apply_precond, d, rel_tol=1e-6, max_iter=1000, x0=None, raise_on_maxiter=True):
    """Solve ``F x = d`` by PCG.

    Stops once ``sqrt(r^T M r) <= rel_tol * sqrt(r0^T M r0)``.  Returns the
    solution and a :class:`SolveReport`.
    """
    t0 = time.perf_counter()
    d = np.asarray(d, dtype=float)
    precond = apply_precond if apply_precond is not None else (lambda r: r.copy())
    x = np.zeros_like(d) if x0 is None else np.array(x0, dtype=float)
    rep = SolveReport()
    dnorm = np.linalg.norm(d)
    if dnorm == 0.0 and x0 is None:
        rep.residuals = [0.0]
        rep.wall_time = time.perf_counter() - t0
        return x, rep
    r = d - apply_op(x) if x0 is not None else d.copy()
    z = precond(r)
    rz = float(r @ z)
    if rz < 0:
        raise IndefiniteOperatorDetected("preconditioner is not positive definite")
    res0 = np.sqrt(rz)
    rep.residuals.append(1.0)
    p = z.copy()
    it = 0
    while it < max_iter and rep.residuals[-1] > rel_tol and rz > 0:
        q = apply_op(p)
        pq = float(p @ q)
        if pq <= 0:
            raise IndefiniteOperatorDetected(f"p^T F p = {pq:.3e} <= 0 at iteration {it + 1}")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        z = precond(r)
        rz_new = float(r @ z)
        if rz_new < 0:
            raise IndefiniteOperatorDetected("preconditioner is not positive definite")
        beta = rz_new / rz
        rep.alphas.append(alpha)
        rep.betas.append(beta)
        rz = rz_new
        p = z + beta * p
        it += 1
        rep.residuals.append(np.sqrt(rz) / res0)
    rep.iterations = it
    if rep.alphas:
        rep.lambda_min, rep.lambda_max, rep.kappa = estimate_condition(rep.alphas, rep.betas)
    rep.true_residual = float(np.linalg.norm(d - apply_op(x)) / dnorm) if dnorm else 0.0
    rep.wall_time = time.perf_counter() - t0
    rep.converged = rep.residuals[-1] <= rel_tol or rz == 0
    if not rep.converged and raise_on_maxiter:
        raise MaxIterationsExceeded(x, rep)
    return x, rep
