"""Shared test fixtures and independent oracles.

The oracles here deliberately avoid the package's message-passing code
paths: solution counting is exhaustive enumeration over assignments, and
the tree fixed points come from a plain-Python dependency-ordered
recursion written directly from the scalar update definitions.
"""

from __future__ import annotations

import numpy as np
import pytest

from spsat.instance import FactorGraph, Instance, shells


# ---------------------------------------------------------------------------
# Exhaustive enumeration
# ---------------------------------------------------------------------------

def enumerate_solutions(instance: Instance):
    """(solution count, per-variable true counts) by brute force; N <= 25."""
    n = instance.n_vars
    assert n <= 25, "enumeration oracle capped at 25 variables"
    idx = np.arange(1 << n, dtype=np.uint32)
    sat = np.ones(1 << n, dtype=bool)
    for c in range(instance.n_clauses):
        clause_true = np.zeros(1 << n, dtype=bool)
        for v, neg in zip(instance.clause_vars[c], instance.clause_negs[c]):
            bit = ((idx >> np.uint32(v)) & np.uint32(1)).astype(bool)
            clause_true |= bit ^ bool(neg)
        sat &= clause_true
    true_counts = np.array([
        int(np.count_nonzero(sat & (((idx >> np.uint32(v)) & np.uint32(1)) == 1)))
        for v in range(n)
    ])
    return int(np.count_nonzero(sat)), true_counts


# ---------------------------------------------------------------------------
# Forest-shaped instances
# ---------------------------------------------------------------------------

def random_forest_instance(n_vars: int, n_clauses: int, arity: int = 3,
                           seed: int = 0) -> Instance:
    """Random acyclic instance: each clause joins `arity` distinct
    union-find components, so the factor graph stays a forest."""
    rng = np.random.default_rng(seed)
    parent = list(range(n_vars))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    rows_v, rows_b = [], []
    for _ in range(n_clauses):
        roots = {}
        for v in rng.permutation(n_vars):
            r = find(int(v))
            if r not in roots:
                roots[r] = int(v)
            if len(roots) == arity:
                break
        if len(roots) < arity:
            break
        block = list(roots.values())
        for v in block[1:]:
            parent[find(v)] = find(block[0])
        rows_v.append(block)
        rows_b.append(rng.integers(0, 2, size=arity).astype(bool).tolist())
    return Instance.from_clauses(n_vars, (list(zip(v, b)) for v, b in
                                          zip(rows_v, rows_b)), arity=arity)


def graph_diameter(instance: Instance) -> int:
    """Longest shortest variable-to-variable distance (clause steps)."""
    graph = FactorGraph(instance)
    best = 0
    for v in range(instance.n_vars):
        layers = shells(instance, v, instance.n_vars, graph=graph)
        depth = max((d + 1 for d, layer in enumerate(layers) if layer), default=0)
        best = max(best, depth)
    return best


# ---------------------------------------------------------------------------
# Dependency-ordered recursion oracles (exact on forests)
# ---------------------------------------------------------------------------

def _edge_dependencies(instance: Instance, graph: FactorGraph):
    """For each directed (var, clause): the (var2, clause2) messages it reads."""
    deps = {}
    for i in range(instance.n_vars):
        incident = graph.clauses_of(i)
        for c, _slot in incident:
            need = []
            for d, _s in incident:
                if d == c:
                    continue
                for j in instance.clause_vars[d]:
                    if int(j) != i:
                        need.append((int(j), d))
            deps[(i, c)] = need
    return deps


def _topological_messages(instance: Instance, graph: FactorGraph, update):
    """Evaluate all directed messages in dependency order via a stack."""
    deps = _edge_dependencies(instance, graph)
    value = {}
    for start in deps:
        if start in value:
            continue
        stack = [start]
        while stack:
            edge = stack[-1]
            if edge in value:
                stack.pop()
                continue
            missing = [d for d in deps[edge] if d not in value]
            if missing:
                stack.extend(missing)
                continue
            value[edge] = update(edge, [value[d] for d in deps[edge]], deps[edge])
            stack.pop()
    return value


def recursion_fixed_point_sp(instance: Instance):
    """Leaf-to-root survey fixed point as {(var, clause): (t, i, f)}."""
    graph = FactorGraph(instance)
    negs = instance.clause_negs
    cvars = instance.clause_vars

    def update(edge, incoming, sources):
        i, c = edge
        by_clause = {}
        for (j, d), val in zip(sources, incoming):
            by_clause.setdefault(d, []).append((j, val))
        prod = (0.0, 1.0, 0.0)
        for d, senders in by_clause.items():
            w = 1.0
            for j, (st, si, sf) in senders:
                slot = list(cvars[d]).index(j)
                w *= st if negs[d][slot] else sf
            my_slot = list(cvars[d]).index(i)
            u = (0.0, 1.0 - w, w) if negs[d][my_slot] else (w, 1.0 - w, 0.0)
            prod = (
                prod[0] * u[0] + prod[1] * u[0] + prod[0] * u[1],
                prod[1] * u[1],
                prod[2] * u[2] + prod[1] * u[2] + prod[2] * u[1],
            )
        norm = prod[0] + prod[1] + prod[2]
        assert norm > 0
        return (prod[0] / norm, prod[1] / norm, prod[2] / norm)

    return _topological_messages(instance, graph, update)


def recursion_fixed_point_bp(instance: Instance, mode: str = "uniform"):
    """Leaf-to-root belief fixed point as {(var, clause): (p_true, p_false)}."""
    graph = FactorGraph(instance)
    negs = instance.clause_negs
    cvars = instance.clause_vars

    def update(edge, incoming, sources):
        i, c = edge
        by_clause = {}
        for (j, d), val in zip(sources, incoming):
            by_clause.setdefault(d, []).append((j, val))
        pt, pf = 1.0, 1.0
        for d, senders in by_clause.items():
            q = 1.0
            for j, (bt, bf) in senders:
                slot = list(cvars[d]).index(j)
                q *= bt if negs[d][slot] else bf
            if mode == "paper":
                hi, lo = 0.5 * (1.0 + q), 0.5 * (1.0 - q)
            else:
                hi, lo = 1.0, 1.0 - q
            my_slot = list(cvars[d]).index(i)
            if negs[d][my_slot]:
                pt, pf = pt * lo, pf * hi
            else:
                pt, pf = pt * hi, pf * lo
        norm = pt + pf
        assert norm > 0
        return (pt / norm, pf / norm)

    return _topological_messages(instance, graph, update)


# ---------------------------------------------------------------------------
# Gauge transform
# ---------------------------------------------------------------------------

def flip_variable(instance: Instance, var: int) -> Instance:
    """Toggle the sign of every occurrence of ``var``."""
    negs = instance.clause_negs.copy()
    negs[instance.clause_vars == var] ^= True
    return Instance(instance.n_vars, instance.clause_vars.copy(), negs,
                    arity=instance.arity)


def assert_locally_isomorphic(instance: Instance, tree) -> None:
    """Every non-boundary tree node carries exactly its image's clause set,
    slot for slot."""
    graph = FactorGraph(instance)
    boundary_start = int(tree.shell_ptr[tree.depth + 1])
    for node in range(boundary_start):
        around = []
        rep = int(tree.node_parent_rep[node])
        if rep >= 0:
            child_pos = int(np.argmax(tree.rep_child_nodes[rep] == node))
            around.append((int(tree.rep_clause[rep]),
                           int(tree.rep_child_slots[rep][child_pos])))
        for r in tree.replicas_of(node):
            around.append((int(tree.rep_clause[r]), int(tree.rep_parent_slot[r])))
        expected = sorted(graph.clauses_of(int(tree.node_var[node])))
        assert sorted(around) == expected, f"node {node} neighborhood differs"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
