"""Survey propagation: distributions over frozen cavity states.

Each directed (variable, clause) edge carries a survey, the normalized
3-vector (frozen_true, unfrozen, frozen_false): the probability, across
solution clusters, that the cavity belief on that edge is frozen true,
unfrozen, or frozen false.  A clause emits a warning (w, 1-w, 0) oriented
onto the receiving literal's satisfying side, where w is the product over
the other members of their probability of being frozen at the
clause-violating value; the warning never carries weight on the violating
side, so force_true * force_false = 0 identically.

Warnings combine with the product rule that drops contradictory
true/false mass:

    (a * b)_T = aT bT + aI bT + aT bI
    (a * b)_I = aI bI
    (a * b)_F = aF bF + aI bF + aF bI

whose n-fold closed form has T component prod(uT + uI) - prod(uI) (and
symmetrically for F).  A zero-norm product is a contradiction and raises;
the all-unfrozen state (0, 1, 0) is the product identity and an exact
fixed point of the update on any instance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import ContradictionError, InvalidParametersError
from .instance import Clause, FactorGraph, Instance
from .rng import substream

SEQUENTIAL = "random-sequential"
SYNCHRONOUS = "synchronous"

TRIVIAL = "trivial"
NONTRIVIAL = "nontrivial"
NON_CONVERGENT = "non-convergent"


@dataclass(frozen=True)
class Survey:
    """Normalized (frozen_true, unfrozen, frozen_false)."""

    frozen_true: float
    unfrozen: float
    frozen_false: float

    def as_array(self) -> np.ndarray:
        return np.array([self.frozen_true, self.unfrozen, self.frozen_false])

    def polarization(self) -> float:
        return self.frozen_true + self.frozen_false


@dataclass(frozen=True)
class SurveyWarning:
    """Clause-to-variable weights (force_true, unconstrained, force_false)."""

    force_true: float
    unconstrained: float
    force_false: float

    def as_array(self) -> np.ndarray:
        return np.array([self.force_true, self.unconstrained, self.force_false])


ALL_UNFROZEN = Survey(0.0, 1.0, 0.0)


@dataclass
class SurveyState:
    """One survey per directed edge, plus iteration bookkeeping."""

    instance: Instance
    graph: FactorGraph
    s: np.ndarray  # (E, 3)
    sweeps: int = 0
    residuals: list = field(default_factory=list)

    @classmethod
    def random(cls, instance: Instance, seed: int = 0,
               graph: FactorGraph | None = None) -> "SurveyState":
        """Generic start: i.i.d. positive weights on all three components."""
        graph = graph or FactorGraph(instance)
        raw = substream(seed, "init").random((graph.n_edges, 3))
        return cls(instance, graph, raw / raw.sum(axis=1, keepdims=True))

    @classmethod
    def unfrozen(cls, instance: Instance,
                 graph: FactorGraph | None = None) -> "SurveyState":
        graph = graph or FactorGraph(instance)
        s = np.zeros((graph.n_edges, 3))
        s[:, 1] = 1.0
        return cls(instance, graph, s)

    def survey(self, var: int, clause: int) -> Survey:
        e = self.graph.edge_id(var, clause)
        return Survey(*(float(x) for x in self.s[e]))

    def polarization(self) -> np.ndarray:
        return self.s[:, 0] + self.s[:, 2]


# ---------------------------------------------------------------------------
# Scalar update rules
# ---------------------------------------------------------------------------

def clause_survey(clause: Clause, slot: int,
                  cavity: Sequence[Survey]) -> SurveyWarning:
    """Warning a clause sends to the literal at ``slot``.

    ``cavity`` holds the senders' surveys in clause order with the
    receiving slot removed.  The forcing weight is the joint probability
    that every sender is frozen at its clause-violating value.
    """
    k = len(clause)
    if slot < 0 or slot >= k:
        raise InvalidParametersError("slot out of range")
    if len(cavity) != k - 1:
        raise InvalidParametersError(f"expected {k - 1} cavity surveys, got {len(cavity)}")
    senders = [lit for j, lit in enumerate(clause.literals) if j != slot]
    w = 1.0
    for lit, s in zip(senders, cavity):
        w *= s.frozen_true if lit.negated else s.frozen_false
    if clause.literals[slot].negated:
        return SurveyWarning(0.0, 1.0 - w, w)
    return SurveyWarning(w, 1.0 - w, 0.0)


def survey_product(a, b) -> tuple[float, float, float]:
    """Three-vector product dropping mixed true/false mass; (0,1,0) is the
    identity and opposing frozen vectors annihilate to (0,0,0)."""
    at, ai, af = _triple(a)
    bt, bi, bf = _triple(b)
    return (
        at * bt + ai * bt + at * bi,
        ai * bi,
        af * bf + ai * bf + af * bi,
    )


def survey_norm(v) -> float:
    t, i, f = _triple(v)
    return i + (t + f)


def normalize(v) -> Survey:
    """Scale a nonnegative 3-vector onto the simplex."""
    t, i, f = _triple(v)
    if t < 0 or i < 0 or f < 0:
        raise InvalidParametersError("components must be nonnegative")
    norm = i + (t + f)
    if norm <= 0.0:
        raise ContradictionError("zero-norm survey vector")
    return Survey(t / norm, i / norm, f / norm)


def _triple(v) -> tuple[float, float, float]:
    if isinstance(v, Survey):
        return v.frozen_true, v.unfrozen, v.frozen_false
    if isinstance(v, SurveyWarning):
        return v.force_true, v.unconstrained, v.force_false
    return float(v[0]), float(v[1]), float(v[2])


def _incoming_warnings(state: SurveyState, var: int, exclude_clause: int = -1):
    inst = state.instance
    for c, slot in state.graph.clauses_of(var):
        if c == exclude_clause:
            continue
        cl = inst.clause(c)
        cav = [
            Survey(*(float(x) for x in state.s[c * inst.arity + j]))
            for j in range(inst.arity) if j != slot
        ]
        yield clause_survey(cl, slot, cav)


def edge_update(state: SurveyState, edge: tuple[int, int]) -> Survey:
    """Recompute the survey on ``edge = (variable, clause)`` functionally.

    The empty product (a variable whose only clause is the excluded one)
    is all-unfrozen.
    """
    var, clause = edge
    prod = (0.0, 1.0, 0.0)
    for u in _incoming_warnings(state, var, exclude_clause=clause):
        prod = survey_product(prod, u)
    norm = survey_norm(prod)
    if norm <= 0.0:
        raise ContradictionError(
            f"contradictory warnings on edge ({var}, {clause})", where=(var, clause))
    return Survey(prod[0] / norm, prod[1] / norm, prod[2] / norm)


def local_survey(state: SurveyState, var: int) -> Survey:
    """Normalized product of all incoming warnings at ``var``."""
    prod = (0.0, 1.0, 0.0)
    for u in _incoming_warnings(state, var):
        prod = survey_product(prod, u)
    norm = survey_norm(prod)
    if norm <= 0.0:
        raise ContradictionError(f"contradictory warnings at variable {var}",
                                 where=(var, None))
    return Survey(prod[0] / norm, prod[1] / norm, prod[2] / norm)


# ---------------------------------------------------------------------------
# Fixed-point iteration
# ---------------------------------------------------------------------------

@dataclass
class SurveyResult:
    classification: str
    state: SurveyState
    sweeps: int
    residuals: list
    epsilon: float
    trivial_tol: float
    frozen_tol: float
    max_polarization: float
    frozen_fraction: float

    @property
    def converged(self) -> bool:
        return self.classification != NON_CONVERGENT

    def report(self) -> dict:
        return {
            "classification": self.classification,
            "sweeps": self.sweeps,
            "final_residual": self.residuals[-1] if self.residuals else None,
            "epsilon": self.epsilon,
            "trivial_tol": self.trivial_tol,
            "max_polarization": self.max_polarization,
            "frozen_fraction": self.frozen_fraction,
            "frozen_tol": self.frozen_tol,
        }


def solve(instance: Instance, schedule: str = SEQUENTIAL, epsilon: float = 1e-6,
          max_sweeps: int = 1000, damping: float = 0.0, seed: int = 0,
          trivial_tol: float | None = None, frozen_tol: float = 0.5,
          init: str = "random", graph: FactorGraph | None = None) -> SurveyResult:
    """Iterate survey updates and classify the outcome.

    Convergence: max over edges of the L1 change of the 3-vector within
    one sweep drops below ``epsilon``.  A converged state is ``trivial``
    when every edge's polarization (frozen_true + frozen_false) is below
    ``trivial_tol`` (defaults to ``epsilon``), ``nontrivial`` otherwise;
    hitting ``max_sweeps`` first reports ``non-convergent``.  The frozen
    fraction counts edges with polarization above ``frozen_tol``.
    """
    if epsilon <= 0:
        raise InvalidParametersError("epsilon must be positive")
    if not 0.0 <= damping < 1.0:
        raise InvalidParametersError("damping must be in [0, 1)")
    if trivial_tol is None:
        trivial_tol = epsilon
    graph = graph or FactorGraph(instance)
    if init == "random":
        state = SurveyState.random(instance, seed, graph)
    elif init == "unfrozen":
        state = SurveyState.unfrozen(instance, graph)
    else:
        raise InvalidParametersError("init must be 'random' or 'unfrozen'")
    s = state.s
    e_count = graph.n_edges
    arity = instance.arity
    sched_rng = substream(seed, "schedule")
    residuals: list[float] = []
    converged = False
    if schedule == SYNCHRONOUS:
        s_new = np.empty_like(s)
        w_edge = np.empty(e_count)
        pref_a = np.empty(e_count)
        pref_b = np.empty(e_count)
        pref_c = np.empty(e_count)
    elif schedule != SEQUENTIAL:
        raise InvalidParametersError(
            "schedule must be 'random-sequential' or 'synchronous'")
    for _ in range(max_sweeps):
        if schedule == SEQUENTIAL:
            order = sched_rng.permutation(e_count).astype(np.int64)
            res, bad = _kernels.sp_sweep_seq(
                s, graph.edge_neg, graph.edge_var, graph.var_ptr, graph.var_edges,
                order, arity, damping)
        else:
            _kernels.sp_clause_pass(s, graph.edge_neg, arity, w_edge)
            res, bad = _kernels.sp_var_pass(
                s, s_new, w_edge, graph.edge_neg, graph.var_ptr, graph.var_edges,
                pref_a, pref_b, pref_c, damping)
            if bad < 0:
                s, s_new = s_new, s
        if bad >= 0:
            var = int(graph.edge_var[bad])
            raise ContradictionError(
                f"contradictory warnings on edge ({var}, {int(bad) // arity})",
                where=(var, int(bad) // arity))
        residuals.append(float(res))
        if res < epsilon:
            converged = True
            break
    state.s = s
    state.sweeps = len(residuals)
    state.residuals = residuals
    pol = state.polarization()
    max_pol = float(pol.max()) if e_count else 0.0
    frozen_frac = float(np.mean(pol > frozen_tol)) if e_count else 0.0
    if not converged:
        cls = NON_CONVERGENT
    elif max_pol < trivial_tol:
        cls = TRIVIAL
    else:
        cls = NONTRIVIAL
    return SurveyResult(cls, state, state.sweeps, residuals, epsilon,
                        trivial_tol, frozen_tol, max_pol, frozen_frac)


# ---------------------------------------------------------------------------
# Complexity
# ---------------------------------------------------------------------------

@dataclass
class ComplexityResult:
    """Log-count of solution clusters, with local breakdowns.

    total = sum(site_terms) - (K-1) * sum(clause_terms): site_terms[i] is
    the log-norm of the full warning fold at variable i, clause_terms[c]
    the log-norm of the overlap between one member's cavity survey and the
    warning it receives (slot 0 by convention).  At a fixed point that
    overlap is slot-independent; ``slot_spread`` reports the largest
    observed deviation across slots as a convergence diagnostic, and
    ``flagged`` marks states where it exceeds ``slot_tolerance``.  The
    sign convention makes the clustered satisfiable phase positive.
    """

    total: float
    per_var: float
    site_terms: np.ndarray
    clause_terms: np.ndarray
    slot_spread: float
    flagged: bool


def complexity(instance: Instance, state: SurveyState,
               slot_tolerance: float = 0.05) -> ComplexityResult:
    n, m, k = instance.n_vars, instance.n_clauses, instance.arity
    graph = state.graph
    if m == 0:
        return ComplexityResult(0.0, 0.0, np.zeros(n), np.zeros(0), 0.0, False)
    w_edge = np.empty(graph.n_edges)
    z_site = np.empty(n)
    bad = _kernels.sp_site_norms(
        state.s, graph.edge_neg, graph.edge_var, graph.var_ptr, graph.var_edges,
        k, w_edge, z_site)
    if bad >= 0:
        raise ContradictionError(f"contradictory warnings at variable {int(bad)}",
                                 where=(int(bad), None))
    opposite = np.where(graph.edge_neg.astype(bool), state.s[:, 0], state.s[:, 2])
    z_edge = 1.0 - w_edge * opposite
    if np.any(z_edge <= 0.0):
        e = int(np.argmax(z_edge <= 0.0))
        raise ContradictionError(
            f"frozen contradiction on edge ({int(graph.edge_var[e])}, {e // k})",
            where=(int(graph.edge_var[e]), e // k))
    log_edge = np.log(z_edge).reshape(m, k)
    site_terms = np.log(z_site)
    clause_terms = log_edge[:, 0]
    slot_spread = float((log_edge.max(axis=1) - log_edge.min(axis=1)).max())
    total = float(site_terms.sum() - (k - 1) * clause_terms.sum())
    return ComplexityResult(total, total / n, site_terms, clause_terms,
                            slot_spread, slot_spread > slot_tolerance)


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def dump_surveys(state: SurveyState) -> str:
    """Line-delimited JSON, one record per directed edge."""
    k = state.instance.arity
    lines = []
    for e in range(state.graph.n_edges):
        lines.append(json.dumps({
            "variable": int(state.graph.edge_var[e]),
            "clause": e // k,
            "s_T": float(state.s[e, 0]),
            "s_I": float(state.s[e, 1]),
            "s_F": float(state.s[e, 2]),
        }, sort_keys=True))
    return "\n".join(lines) + "\n"
