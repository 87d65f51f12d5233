"""
Checkerboard sweeps on the quarter annulus
==========================================

A 4x4 checkerboard of annulus sectors; "orange" patches (even i+j) carry
nu = 1000 and the other colour class is refined once more (disparity d=1).
In the "good" pattern the refined patches have the small coefficient, in the
"bad" pattern the large one.  We compare the selection-scaled Dirichlet
preconditioner with the deluxe preconditioner.

Run with ``python3 notebooks/checkerboard_tables.py`` (about ten seconds).
"""

from ietidp.experiments import ExperimentConfig, format_table, run_checkerboard

# %% coefficient patterns versus preconditioners, hhat = 2^-(r+1)
for pattern in ("good", "bad"):
    for precond in ("selection", "deluxe"):
        cfg = ExperimentConfig(p=[2, 3], refine=[0, 1], disparity=[1], pattern=pattern, precond=precond)
        print(f"\n--- pattern={pattern}  preconditioner={precond}")
        print(format_table(run_checkerboard(cfg), timing=False))

# %% mesh level disparity with uniform coefficients
for precond in ("selection", "deluxe"):
    cfg = ExperimentConfig(p=[2], refine=[0], disparity=[1, 2, 3, 4], pattern="uniform", precond=precond)
    print(f"\n--- disparity sweep, preconditioner={precond}")
    print(format_table(run_checkerboard(cfg), timing=False))

# %% growth with H/h on matching grids: kappa grows like (1 + log(H/h))^2
cfg = ExperimentConfig(p=[2], refine=[1, 2, 3, 4], disparity=[0], pattern="uniform")
print("\n--- matching grids, uniform coefficients")
print(format_table(run_checkerboard(cfg), timing=False))
