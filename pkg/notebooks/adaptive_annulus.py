"""
Adaptive refinement by patch splitting
======================================

Quarter annulus split into 2x2 patches; the patch at the inner radius and
small angle has nu = 1000.  Each round solves with tolerance 1e-10, estimates
the error, marks patches with Doerfler's rule (theta = 0.8), splits them into
four children and, optionally, splits further patches until the coefficient
ordering and the vertex-support condition hold again.

Run with ``python3 notebooks/adaptive_annulus.py`` (under a minute).
"""

from ietidp.experiments import ExperimentConfig, format_table, run_adaptive

# %% with consistency splitting: iteration counts and kappa stay bounded
rows = run_adaptive(ExperimentConfig(experiment="adaptive", p=[2], rounds=8, consistency=True))
print(format_table(rows, timing=False))

# %% without consistency splitting and higher degree the condition number explodes
rows = run_adaptive(ExperimentConfig(experiment="adaptive", p=[5], rounds=4, consistency=False))
print(format_table(rows, timing=False))
