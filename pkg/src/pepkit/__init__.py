"""Exact worst-case analysis of fixed-step first-order methods.

The package computes, for a chosen method, function class and performance
criterion, the exact worst case over all admissible functions by solving a
small semidefinite program; it also produces a machine-checkable
upper-bound certificate and an explicit function attaining the bound.
"""

from .interpolation import (
    DataSet,
    DataTriple,
    FunctionClass,
    InterpolantFunction,
    build_interpolant,
    check_interpolable,
    conjugate_transform,
    curvature_subtract,
    eval_interpolant,
)
from .methods import StepMatrix, Trajectory, custom, fgm, gm, mfgm, ogm, simulate
from .pep import PepProblem, PepSolution, PerformanceCriterion, assemble, rescale, solve
from .certificates import DualCertificate, extract, render_proof, verify
from .reconstruction import WorstCaseInstance, factorize, rebuild, recognize_1d
from . import analysis, conic, sdpa

__version__ = "0.1.0"

__all__ = [
    "DataSet", "DataTriple", "FunctionClass", "InterpolantFunction",
    "build_interpolant", "check_interpolable", "conjugate_transform",
    "curvature_subtract", "eval_interpolant",
    "StepMatrix", "Trajectory", "custom", "fgm", "gm", "mfgm", "ogm", "simulate",
    "PepProblem", "PepSolution", "PerformanceCriterion", "assemble", "rescale", "solve",
    "DualCertificate", "extract", "render_proof", "verify",
    "WorstCaseInstance", "factorize", "rebuild", "recognize_1d",
    "analysis", "conic", "sdpa",
]
