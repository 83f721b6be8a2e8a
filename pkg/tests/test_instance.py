"""Instance generation, DIMACS I/O, and structural queries."""

import numpy as np
import pytest

from spsat.errors import DimacsParseError, InvalidParametersError
from spsat.instance import (Clause, FactorGraph, Instance, Literal, evaluate,
                            generate_random_instance, is_acyclic, parse_dimacs,
                            shells, write_dimacs)


def test_clause_count_is_rounded_alpha_n():
    inst = generate_random_instance(100, 4.2, arity=3, seed=1)
    assert inst.n_clauses == 420
    assert all(len(cl) == 3 for cl in inst.clauses)
    assert inst.alpha() == pytest.approx(4.2)


def test_clause_variables_distinct():
    inst = generate_random_instance(10, 30.0, arity=3, seed=3)
    rows = np.sort(inst.clause_vars, axis=1)
    assert not np.any(rows[:, 1:] == rows[:, :-1])


def test_generation_deterministic_per_seed():
    a = generate_random_instance(200, 3.5, seed=7)
    b = generate_random_instance(200, 3.5, seed=7)
    c = generate_random_instance(200, 3.5, seed=8)
    assert a == b
    assert a != c


def test_binary_arity_worked_example_shape():
    inst = generate_random_instance(4, 1.0, arity=2, seed=5)
    assert inst.n_clauses == 4
    assert inst.arity == 2
    assert inst.n_vars == 4


def test_generation_parameter_errors():
    with pytest.raises(InvalidParametersError):
        generate_random_instance(2, 1.0, arity=3)
    with pytest.raises(InvalidParametersError):
        generate_random_instance(10, 0.0)
    with pytest.raises(InvalidParametersError):
        generate_random_instance(10, -1.0)


def test_degree_statistics_poisson():
    # clauses-per-variable should look Poisson(3 alpha): mean within 3 SE,
    # variance/mean ratio within [0.9, 1.1] over >= 20 seeds
    n, alpha = 10_000, 4.2
    degrees = []
    for seed in range(20):
        inst = generate_random_instance(n, alpha, seed=seed)
        degrees.append(np.bincount(inst.clause_vars.reshape(-1), minlength=n))
    degrees = np.concatenate(degrees).astype(float)
    mean = degrees.mean()
    se = degrees.std(ddof=1) / np.sqrt(degrees.size)
    assert abs(mean - 3 * alpha) < 3 * se
    assert 0.9 < degrees.var(ddof=1) / mean < 1.1


# ---------------------------------------------------------------------------
# DIMACS
# ---------------------------------------------------------------------------

def test_parse_dimacs_positive_clause():
    inst = parse_dimacs("p cnf 3 1\n1 2 3 0\n")
    assert inst.n_vars == 3
    assert inst.n_clauses == 1
    assert inst.clauses[0] == Clause((Literal(0, False), Literal(1, False),
                                      Literal(2, False)))


def test_parse_dimacs_negations():
    inst = parse_dimacs("p cnf 3 1\n-1 2 -3 0\n")
    assert inst.clauses[0] == Clause((Literal(0, True), Literal(1, False),
                                      Literal(2, True)))


def test_parse_dimacs_comments_and_multiline_clause():
    inst = parse_dimacs("c header comment\np cnf 4 2\n1 -2\n3 0\nc mid\n2 3 4 0\n")
    assert inst.n_clauses == 2
    assert inst.clauses[0].literals[2] == Literal(2, False)


@pytest.mark.parametrize("text,line", [
    ("p cnf x 1\n1 2 3 0\n", 1),
    ("1 2 3 0\n", 1),
    ("p cnf 3 1\np cnf 3 1\n1 2 3 0\n", 2),
    ("p cnf 3 1\n1 2 4 0\n", 2),      # variable out of range
    ("p cnf 3 2\n1 2 3 0\n1 2 0\n", 3),  # arity mismatch
    ("p cnf 3 2\n1 2 3 0\n", 2),      # clause count mismatch
    ("p cnf 3 1\n1 2 3\n", 2),        # unterminated clause
    ("p cnf 3 1\n1 two 3 0\n", 2),    # bad literal token
])
def test_parse_dimacs_errors_carry_line_numbers(text, line):
    with pytest.raises(DimacsParseError) as err:
        parse_dimacs(text)
    assert err.value.line == line


def test_dimacs_round_trip_many_instances():
    for seed in range(100):
        arity = 2 + seed % 3
        n = 5 + (seed * 13) % 40
        inst = generate_random_instance(n, 1.0 + (seed % 7) * 0.5,
                                        arity=arity, seed=seed)
        again = parse_dimacs(write_dimacs(inst))
        assert again == inst
        assert write_dimacs(again) == write_dimacs(inst)


def test_zero_clause_dimacs_round_trip():
    inst = Instance.from_clauses(5, [])
    assert parse_dimacs(write_dimacs(inst)).n_clauses == 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def test_evaluate_single_clause():
    inst = Instance.from_clauses(3, [[(0, False), (1, False), (2, False)]])
    assert evaluate(inst, [False, False, False]) == 1
    assert evaluate(inst, [True, True, True]) == 0


def test_evaluate_matches_per_clause_recomputation():
    rng = np.random.default_rng(0)
    for seed in range(10):
        inst = generate_random_instance(20, 3.0, seed=seed)
        assignment = rng.random(20) < 0.5
        expected = 0
        for cl in inst.clauses:
            sat = False
            for lit in cl.literals:
                sat = sat or (bool(assignment[lit.var]) ^ lit.negated)
            expected += 0 if sat else 1
        assert evaluate(inst, assignment) == expected


def test_evaluate_length_mismatch():
    inst = generate_random_instance(10, 2.0, seed=0)
    with pytest.raises(InvalidParametersError):
        evaluate(inst, [True] * 9)


# ---------------------------------------------------------------------------
# shells
# ---------------------------------------------------------------------------

def test_shells_isolated_variable():
    inst = Instance.from_clauses(5, [[(0, False), (1, False), (2, False)]])
    assert shells(inst, 4, 3) == [set(), set(), set()]


def test_shells_single_clause():
    inst = Instance.from_clauses(5, [[(0, False), (1, False), (2, False)]])
    assert shells(inst, 0, 1) == [{1, 2}]


def test_shells_disjoint_and_bfs_consistent():
    inst = generate_random_instance(60, 2.5, seed=4)
    layers = shells(inst, 0, 6)
    seen = {0}
    for layer in layers:
        assert not (layer & seen)
        seen |= layer
    # independent BFS over the variable adjacency
    adj = {v: set() for v in range(inst.n_vars)}
    for cl in inst.clauses:
        vs = [lit.var for lit in cl.literals]
        for a in vs:
            for b in vs:
                if a != b:
                    adj[a].add(b)
    frontier, visited = {0}, {0}
    for layer in layers:
        nxt = set()
        for v in frontier:
            nxt |= adj[v]
        nxt -= visited
        assert nxt == layer
        visited |= nxt
        frontier = nxt


def test_first_shell_mean_is_six_alpha():
    n, alpha = 10_000, 4.2
    sizes = []
    for seed in range(20):
        inst = generate_random_instance(n, alpha, seed=seed)
        graph = FactorGraph(inst)
        for root in range(0, n, n // 50):
            sizes.append(len(shells(inst, root, 1, graph=graph)[0]))
    sizes = np.array(sizes, dtype=float)
    se = sizes.std(ddof=1) / np.sqrt(sizes.size)
    assert abs(sizes.mean() - 6 * alpha) < 3 * se


# ---------------------------------------------------------------------------
# is_acyclic
# ---------------------------------------------------------------------------

def test_single_clause_is_acyclic():
    inst = Instance.from_clauses(3, [[(0, False), (1, False), (2, False)]])
    assert is_acyclic(inst) == (True, None)


def test_two_clauses_sharing_two_variables_cycle():
    inst = Instance.from_clauses(4, [
        [(0, False), (1, False), (2, False)],
        [(0, True), (1, True), (3, False)],
    ])
    acyclic, witness = is_acyclic(inst)
    assert not acyclic
    assert set(witness) == {0, 1}


def test_looped_binary_example_is_cyclic():
    inst = Instance.from_clauses(4, [
        [(0, False), (1, False)], [(1, False), (2, False)],
        [(2, False), (3, False)], [(3, False), (0, False)],
    ], arity=2)
    acyclic, witness = is_acyclic(inst)
    assert not acyclic
    sub = Instance.from_clauses(4, [inst.clauses[c] for c in witness], arity=2)
    assert not is_acyclic(sub)[0]


# ---------------------------------------------------------------------------
# factor graph
# ---------------------------------------------------------------------------

def test_factor_graph_inverse_adjacency():
    inst = generate_random_instance(50, 3.0, seed=2)
    graph = FactorGraph(inst)
    assert graph.n_edges == 3 * inst.n_clauses
    # variable -> clause lists invert the clause -> variable arrays exactly
    for v in range(inst.n_vars):
        pairs = graph.clauses_of(v)
        assert len(pairs) == graph.degree(v)
        for c, slot in pairs:
            assert inst.clause_vars[c, slot] == v
    count = sum(graph.degree(v) for v in range(inst.n_vars))
    assert count == graph.n_edges
    for e in range(graph.n_edges):
        assert graph.edge_var[e] == inst.clause_vars[e // 3, e % 3]


def test_edge_id_lookup():
    inst = generate_random_instance(30, 2.0, seed=9)
    graph = FactorGraph(inst)
    v, slot = int(inst.clause_vars[0, 1]), 1
    assert graph.edge_id(v, 0) == slot
    missing = next(x for x in range(inst.n_vars)
                   if x not in set(inst.clause_vars[0]))
    with pytest.raises(InvalidParametersError):
        graph.edge_id(missing, 0)


def test_from_clauses_validation():
    with pytest.raises(InvalidParametersError):
        Instance.from_clauses(3, [[(0, False), (0, True), (1, False)]])
    with pytest.raises(InvalidParametersError):
        Instance.from_clauses(4, [[(0, False), (1, False), (2, False)],
                                  [(0, False), (1, False)]])
    with pytest.raises(InvalidParametersError):
        Instance.from_clauses(2, [[(0, False), (1, False), (2, False)]])


def test_instance_summary_keys():
    inst = generate_random_instance(40, 2.0, seed=11)
    s = inst.summary()
    assert s == {"n_vars": 40, "n_clauses": 80, "arity": 3, "alpha": 2.0,
                 "seed": 11}


def test_instance_arrays_immutable():
    inst = generate_random_instance(10, 2.0, seed=0)
    with pytest.raises(ValueError):
        inst.clause_vars[0, 0] = 3
