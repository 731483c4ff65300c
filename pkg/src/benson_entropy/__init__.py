"""Benson's outer approximation for multiobjective LPs, applied to entropy inequalities."""

from .benson import MolpProblem, RunConfig, Solution, run
from .entropy_model import (EntropyInequality, build_problem, format_inequality, parse,
                            unimodular_transform)
from .errors import BensonError

__all__ = ["MolpProblem", "RunConfig", "Solution", "run", "EntropyInequality",
           "build_problem", "format_inequality", "parse", "unimodular_transform",
           "BensonError"]
__version__ = "0.1.0"
