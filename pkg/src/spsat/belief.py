"""Belief propagation: cavity probabilities on the factor graph.

Each directed (variable, clause) edge carries a belief, the normalized
2-vector (p_true, p_false) giving the probability that the variable takes
each value when the receiving clause is removed.  A clause sends back a
warning built from the other members' probability q of all sitting at
their clause-violating values.

Two update modes are provided:

* ``paper``    - warning weights (1+q)/2 on the receiving literal's
  satisfying value and (1-q)/2 on the other;
* ``uniform``  - sum-product weights 1 and 1-q (then normalized), which is
  exact for the uniform measure over satisfying assignments and is the
  mode the enumeration and entropy oracles validate.

Both agree whenever q is 0 or 1, which is all that survey propagation
consumes.  On forest-shaped instances in uniform mode the fixed point
reproduces exact marginals and the Bethe entropy equals the log solution
count.
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

PAPER = "paper"
UNIFORM = "uniform"
SEQUENTIAL = "random-sequential"
SYNCHRONOUS = "synchronous"

_MODES = {PAPER: _kernels.MODE_PAPER, UNIFORM: _kernels.MODE_UNIFORM}


@dataclass(frozen=True)
class Belief:
    """Normalized cavity probability (p_true, p_false)."""

    p_true: float
    p_false: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_true, self.p_false])


@dataclass(frozen=True)
class BeliefWarning:
    """Normalized clause-to-variable weights (w_true, w_false)."""

    w_true: float
    w_false: float


UNIFORM_BELIEF = Belief(0.5, 0.5)


@dataclass
class BeliefState:
    """One belief per directed edge, plus iteration bookkeeping."""

    instance: Instance
    graph: FactorGraph
    mode: str
    p: np.ndarray  # (E, 2)
    sweeps: int = 0
    residuals: list = field(default_factory=list)

    @classmethod
    def uniform(cls, instance: Instance, mode: str = UNIFORM,
                graph: FactorGraph | None = None) -> "BeliefState":
        graph = graph or FactorGraph(instance)
        p = np.full((graph.n_edges, 2), 0.5)
        return cls(instance, graph, mode, p)

    @classmethod
    def random(cls, instance: Instance, mode: str = UNIFORM, seed: int = 0,
               graph: FactorGraph | None = None) -> "BeliefState":
        graph = graph or FactorGraph(instance)
        raw = substream(seed, "init").random((graph.n_edges, 2))
        p = raw / raw.sum(axis=1, keepdims=True)
        return cls(instance, graph, mode, p)

    def belief(self, var: int, clause: int) -> Belief:
        e = self.graph.edge_id(var, clause)
        return Belief(float(self.p[e, 0]), float(self.p[e, 1]))


def _check_mode(mode: str) -> int:
    if mode not in _MODES:
        raise InvalidParametersError(f"unknown mode {mode!r}, expected paper|uniform")
    return _MODES[mode]


# ---------------------------------------------------------------------------
# Scalar update rules
# ---------------------------------------------------------------------------

def clause_message(mode: str, clause: Clause, slot: int,
                   cavity: Sequence[Belief]) -> BeliefWarning:
    """Warning a clause sends to the literal at ``slot``.

    ``cavity`` holds the senders' beliefs in clause order with the
    receiving slot removed.  q is the probability that every sender sits
    at its clause-violating value, in which case the receiver is forced to
    its satisfying value.
    """
    _check_mode(mode)
    k = len(clause)
    if slot < 0 or slot >= k:
        raise InvalidParametersError("slot out of range")
    if len(cavity) != k - 1:
        raise InvalidParametersError(f"expected {k - 1} cavity beliefs, got {len(cavity)}")
    senders = [lit for j, lit in enumerate(clause.literals) if j != slot]
    q = 1.0
    for lit, b in zip(senders, cavity):
        q *= b.p_true if lit.negated else b.p_false
    if mode == PAPER:
        hi, lo = 0.5 * (1.0 + q), 0.5 * (1.0 - q)
    else:
        hi, lo = 1.0 / (2.0 - q), (1.0 - q) / (2.0 - q)
    if clause.literals[slot].negated:
        return BeliefWarning(lo, hi)
    return BeliefWarning(hi, lo)


def belief_product(a, b) -> tuple[float, float]:
    """Componentwise product of 2-vectors; (1, 1) is the identity."""
    at, af = _pair(a)
    bt, bf = _pair(b)
    return (at * bt, af * bf)


def belief_norm(v) -> float:
    t, f = _pair(v)
    return t + f


def _pair(v) -> tuple[float, float]:
    if isinstance(v, Belief):
        return v.p_true, v.p_false
    if isinstance(v, BeliefWarning):
        return v.w_true, v.w_false
    return float(v[0]), float(v[1])


def _incoming_warnings(state: BeliefState, var: int, exclude_clause: int = -1):
    inst = state.instance
    for c, slot in state.graph.clauses_of(var):
        if c == exclude_clause:
            continue
        cl = inst.clause(c)
        cav = [
            Belief(float(state.p[c * inst.arity + j, 0]),
                   float(state.p[c * inst.arity + j, 1]))
            for j in range(inst.arity) if j != slot
        ]
        yield clause_message(state.mode, cl, slot, cav)


def edge_update(state: BeliefState, edge: tuple[int, int]) -> Belief:
    """Recompute the belief on ``edge = (variable, clause)`` functionally.

    The empty product (a variable whose only clause is the excluded one)
    is the unbiased belief (1/2, 1/2).
    """
    var, clause = edge
    prod = (1.0, 1.0)
    for u in _incoming_warnings(state, var, exclude_clause=clause):
        prod = belief_product(prod, u)
    norm = belief_norm(prod)
    if norm <= 0.0:
        raise ContradictionError(
            f"zero normalizer updating edge ({var}, {clause})", where=(var, clause))
    return Belief(prod[0] / norm, prod[1] / norm)


def marginal(state: BeliefState, var: int) -> Belief:
    """Normalized product of all incoming warnings at ``var``."""
    prod = (1.0, 1.0)
    for u in _incoming_warnings(state, var):
        prod = belief_product(prod, u)
    norm = belief_norm(prod)
    if norm <= 0.0:
        raise ContradictionError(f"zero normalizer at variable {var}", where=(var, None))
    return Belief(prod[0] / norm, prod[1] / norm)


def marginals(state: BeliefState) -> np.ndarray:
    """(N, 2) array of variable marginals."""
    out = np.empty((state.instance.n_vars, 2))
    for i in range(state.instance.n_vars):
        b = marginal(state, i)
        out[i, 0] = b.p_true
        out[i, 1] = b.p_false
    return out


# ---------------------------------------------------------------------------
# Fixed-point iteration
# ---------------------------------------------------------------------------

@dataclass
class BeliefResult:
    converged: bool
    state: BeliefState
    sweeps: int
    residuals: list
    epsilon: float

    def report(self) -> dict:
        return {
            "converged": self.converged,
            "sweeps": self.sweeps,
            "final_residual": self.residuals[-1] if self.residuals else None,
            "epsilon": self.epsilon,
            "mode": self.state.mode,
        }


def solve(instance: Instance, mode: str = UNIFORM, schedule: str = SEQUENTIAL,
          epsilon: float = 1e-8, max_sweeps: int = 1000, seed: int = 0,
          damping: float = 0.0, init: str = "uniform",
          graph: FactorGraph | None = None) -> BeliefResult:
    """Iterate belief updates until the max per-message change drops below
    ``epsilon`` (L-infinity over components, per sweep).

    ``random-sequential`` updates edges in place in a fresh seeded
    permutation each sweep and is the reproducibility-bearing default;
    ``synchronous`` recomputes all edges from the previous sweep's values.
    """
    if epsilon <= 0:
        raise InvalidParametersError("epsilon must be positive")
    if not 0.0 <= damping < 1.0:
        raise InvalidParametersError("damping must be in [0, 1)")
    mode_flag = _check_mode(mode)
    graph = graph or FactorGraph(instance)
    if init == "uniform":
        state = BeliefState.uniform(instance, mode, graph)
    elif init == "random":
        state = BeliefState.random(instance, mode, seed, graph)
    else:
        raise InvalidParametersError("init must be 'uniform' or 'random'")
    p = state.p
    e_count = graph.n_edges
    arity = instance.arity
    sched_rng = substream(seed, "schedule")
    residuals: list[float] = []
    converged = False
    if schedule == SYNCHRONOUS:
        p_new = np.empty_like(p)
        q_edge = np.empty(e_count)
        pref_t = np.empty(e_count)
        pref_f = np.empty(e_count)
    elif schedule != SEQUENTIAL:
        raise InvalidParametersError(
            "schedule must be 'random-sequential' or 'synchronous'")
    for _ in range(max_sweeps):
        if schedule == SEQUENTIAL:
            order = sched_rng.permutation(e_count).astype(np.int64)
            res, bad = _kernels.bp_sweep_seq(
                p, graph.edge_neg, graph.edge_var, graph.var_ptr, graph.var_edges,
                order, arity, mode_flag, damping)
        else:
            _kernels.bp_clause_pass(p, graph.edge_neg, arity, q_edge)
            res, bad = _kernels.bp_var_pass(
                p, p_new, q_edge, graph.edge_neg, graph.var_ptr, graph.var_edges,
                pref_t, pref_f, mode_flag, damping)
            if bad < 0:
                p, p_new = p_new, p
        if bad >= 0:
            var = int(graph.edge_var[bad])
            raise ContradictionError(
                f"zero normalizer on edge ({var}, {int(bad) // arity})",
                where=(var, int(bad) // arity))
        residuals.append(float(res))
        if res < epsilon:
            converged = True
            break
    state.p = p
    state.sweeps = len(residuals)
    state.residuals = residuals
    return BeliefResult(converged, state, state.sweeps, residuals, epsilon)


# ---------------------------------------------------------------------------
# Entropy
# ---------------------------------------------------------------------------

@dataclass
class EntropyResult:
    """log(#solutions) estimate with per-site and per-clause breakdowns.

    total = sum(site_terms) + sum(clause_terms), where site_terms[i] is the
    log-norm of the product of all incoming normalized warnings at i (an
    isolated variable contributes log 2: the empty product is left
    unnormalized at (1, 1)), and clause_terms[c] folds the clause
    normalizer together with the edge corrections of its own edges:
    log Z_c - sum over members i of log(dot(belief(i,c), warning(i,c))).
    On forest-shaped satisfiable instances the total is exact.
    """

    total: float
    site_terms: np.ndarray
    clause_terms: np.ndarray


def entropy(instance: Instance, state: BeliefState) -> EntropyResult:
    if state.mode != UNIFORM:
        raise InvalidParametersError("entropy requires a uniform-measure state")
    n, m, k = instance.n_vars, instance.n_clauses, instance.arity
    graph = state.graph
    if m == 0:
        site = np.full(n, np.log(2.0))
        return EntropyResult(float(site.sum()), site, np.zeros(0))
    p = state.p.reshape(m, k, 2)
    negs = instance.clause_negs
    viol = np.where(negs, p[:, :, 0], p[:, :, 1])
    # cavity products of violating probabilities (exclude own slot)
    pref = np.ones_like(viol)
    pref[:, 1:] = np.cumprod(viol[:, :-1], axis=1)
    suf = np.ones_like(viol)
    suf[:, :-1] = np.cumprod(viol[:, ::-1], axis=1)[:, ::-1][:, 1:]
    q = pref * suf
    # normalized warnings, oriented by the receiving literal's sign
    hi = 1.0 / (2.0 - q)
    lo = (1.0 - q) * hi
    u_true = np.where(negs, lo, hi).reshape(-1)
    u_false = np.where(negs, hi, lo).reshape(-1)
    # site terms: componentwise product over each variable's edges
    pt = _grouped_product(u_true[graph.var_edges], graph.var_ptr)
    pf = _grouped_product(u_false[graph.var_edges], graph.var_ptr)
    z_site = pt + pf
    if np.any(z_site <= 0.0):
        i = int(np.argmax(z_site <= 0.0))
        raise ContradictionError(f"nonpositive site normalizer at variable {i}",
                                 where=(i, None))
    # clause normalizer from cavity beliefs
    z_clause = 1.0 - viol.prod(axis=1)
    if np.any(z_clause <= 0.0):
        c = int(np.argmax(z_clause <= 0.0))
        raise ContradictionError(f"clause {c} unsatisfiable under its beliefs",
                                 where=(None, c))
    # edge terms: overlap of belief and its incoming warning
    z_edge = (state.p[:, 0] * u_true + state.p[:, 1] * u_false).reshape(m, k)
    if np.any(z_edge <= 0.0):
        e = int(np.argmax(z_edge.reshape(-1) <= 0.0))
        raise ContradictionError(
            f"frozen contradiction on edge ({int(graph.edge_var[e])}, {e // k})",
            where=(int(graph.edge_var[e]), e // k))
    site_terms = np.log(z_site)
    clause_terms = np.log(z_clause) - np.log(z_edge).sum(axis=1)
    total = float(site_terms.sum() + clause_terms.sum())
    return EntropyResult(total, site_terms, clause_terms)


def _grouped_product(values: np.ndarray, ptr: np.ndarray) -> np.ndarray:
    """Product over CSR groups; empty groups give 1."""
    out = np.ones(ptr.shape[0] - 1)
    nonempty = ptr[:-1] < ptr[1:]
    if values.shape[0]:
        out[nonempty] = np.multiply.reduceat(values, ptr[:-1][nonempty])
    return out


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def dump_messages(state: BeliefState) -> str:
    """Line-delimited JSON, one record per directed edge."""
    k = state.instance.arity
    lines = []
    for e in range(state.graph.n_edges):
        lines.append(json.dumps({
            "variable": int(state.graph.edge_var[e]),
            "clause": e // k,
            "p_true": float(state.p[e, 0]),
        }, sort_keys=True))
    return "\n".join(lines) + "\n"
