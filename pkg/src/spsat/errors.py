"""Typed errors shared across the package."""

from __future__ import annotations


class SpsatError(Exception):
    """Base class for all package-specific errors."""


class InvalidParametersError(SpsatError, ValueError):
    """An operation was called with arguments outside its contract."""


class DimacsParseError(SpsatError, ValueError):
    """Malformed DIMACS CNF input.

    Carries the 1-based line number where parsing failed.
    """

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ContradictionError(SpsatError):
    """A message product has zero norm: opposing frozen constraints met.

    This signals UNSAT structure and must be visible to callers rather than
    silently renormalized.  ``where`` identifies the offending edge as a
    ``(variable, clause)`` pair, or the population member index for
    population-dynamics folds.
    """

    def __init__(self, message: str, where=None):
        super().__init__(message)
        self.where = where


class TreeBudgetError(SpsatError):
    """Unrolling refused: the tree would exceed the configured node budget."""

    def __init__(self, message: str, estimate: int, budget: int):
        super().__init__(message)
        self.estimate = estimate
        self.budget = budget


class ReplicaDivergenceError(SpsatError):
    """Two coupled replicas consumed different random draws."""
