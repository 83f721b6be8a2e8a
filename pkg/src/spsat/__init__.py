"""Message-passing workbench for random K-SAT.

Belief propagation and survey propagation on finite instances, exact
propagation on unrolled computation trees, and population dynamics for
the distributional fixed point, with coupled-replica chaos measurement
and clause-density threshold scans.
"""

__version__ = "0.1.0"

from .errors import (ContradictionError, DimacsParseError,
                     InvalidParametersError, ReplicaDivergenceError,
                     SpsatError, TreeBudgetError)
from .instance import (Clause, FactorGraph, Instance, Literal, evaluate,
                       generate_random_instance, is_acyclic, parse_dimacs,
                       shells, write_dimacs)

__all__ = [
    "__version__",
    "Clause", "FactorGraph", "Instance", "Literal",
    "evaluate", "generate_random_instance", "is_acyclic", "parse_dimacs",
    "shells", "write_dimacs",
    "SpsatError", "InvalidParametersError", "DimacsParseError",
    "ContradictionError", "TreeBudgetError", "ReplicaDivergenceError",
]
