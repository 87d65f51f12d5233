"""Dual-primal tearing and interconnecting solver for multi-patch isogeometric
discretizations with non-matching, nested interfaces and T-junctions."""

from .adaptivity import consistency_split, doerfler_mark, estimate, estimate_solution, split_patch
from .assembly import DofLayout, assemble, assemble_reduced, eliminate_dirichlet
from .coupling import build_constraints, check_consistency, check_schoenberg_whitney, order_interfaces
from .errors import IetiError
from .experiments import ExperimentConfig, ResultRow, checkerboard, run_adaptive, run_checkerboard, run_single
from .geometry import AnnulusSector, BilinearMap, Patch, SplineMap, build_topology, check_assumptions
from .ieti import IetiOperator, LocalSaddle, SkeletonSchur
from .krylov import SolveReport, estimate_condition, pcg
from .preconditioners import Deluxe, ScaledDirichlet, make_preconditioner
from .reference import monolithic_solve
from .solver import IetiSolution, solve
from .splines import KnotVector, insert_knots, uniform

__all__ = [
    "AnnulusSector",
    "BilinearMap",
    "Deluxe",
    "DofLayout",
    "ExperimentConfig",
    "IetiError",
    "IetiOperator",
    "IetiSolution",
    "KnotVector",
    "LocalSaddle",
    "Patch",
    "ResultRow",
    "ScaledDirichlet",
    "SkeletonSchur",
    "SolveReport",
    "SplineMap",
    "assemble",
    "assemble_reduced",
    "build_constraints",
    "build_topology",
    "check_assumptions",
    "check_consistency",
    "check_schoenberg_whitney",
    "checkerboard",
    "consistency_split",
    "doerfler_mark",
    "eliminate_dirichlet",
    "estimate",
    "estimate_condition",
    "estimate_solution",
    "insert_knots",
    "make_preconditioner",
    "monolithic_solve",
    "order_interfaces",
    "pcg",
    "run_adaptive",
    "run_checkerboard",
    "run_single",
    "solve",
    "split_patch",
    "uniform",
]
