"""Random K-SAT instances and their factor-graph structure.

An instance is a conjunction of M clauses over N boolean variables; each
clause is a disjunction of K signed literals.  A literal (v, negated) is
satisfied by an assignment sigma when sigma(v) XOR negated is true.  The
factor graph is the bipartite variable/clause incidence structure; all
message-passing code in this package works on its K*M directed edges.

Clauses are stored columnar as two (M, K) arrays (variable indices and
negation flags); ``Literal``/``Clause`` objects are materialized on demand.
Instances are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimacsParseError, InvalidParametersError
from .rng import substream


@dataclass(frozen=True)
class Literal:
    """A signed variable occurrence; ``negated`` flips the satisfying value."""

    var: int
    negated: bool


@dataclass(frozen=True)
class Clause:
    """An ordered disjunction of literals over pairwise-distinct variables."""

    literals: tuple[Literal, ...]

    def __len__(self) -> int:
        return len(self.literals)


class Instance:
    """An immutable K-SAT formula.

    Attributes
    ----------
    n_vars : number of boolean variables N
    arity : literals per clause K (uniform)
    clause_vars : (M, K) int64 array of variable indices
    clause_negs : (M, K) bool array of negation flags
    seed : generator seed when produced by :func:`generate_random_instance`
    """

    def __init__(self, n_vars: int, clause_vars, clause_negs, arity: int | None = None,
                 seed: int | None = None):
        clause_vars = np.ascontiguousarray(clause_vars, dtype=np.int64)
        clause_negs = np.ascontiguousarray(clause_negs, dtype=bool)
        if clause_vars.ndim != 2 or clause_negs.shape != clause_vars.shape:
            raise InvalidParametersError("clause arrays must be (M, K) and congruent")
        m, k = clause_vars.shape
        if arity is None:
            arity = k
        if k != arity:
            raise InvalidParametersError(f"clauses have {k} literals, expected {arity}")
        if arity < 2:
            raise InvalidParametersError("arity must be at least 2")
        if n_vars < arity:
            raise InvalidParametersError("need at least `arity` variables")
        if m > 0:
            if clause_vars.min() < 0 or clause_vars.max() >= n_vars:
                raise InvalidParametersError("variable index out of range")
            row_sorted = np.sort(clause_vars, axis=1)
            if np.any(row_sorted[:, 1:] == row_sorted[:, :-1]):
                raise InvalidParametersError("variables within a clause must be distinct")
        clause_vars.setflags(write=False)
        clause_negs.setflags(write=False)
        self.n_vars = int(n_vars)
        self.arity = int(arity)
        self.clause_vars = clause_vars
        self.clause_negs = clause_negs
        self.seed = seed

    @property
    def n_clauses(self) -> int:
        return self.clause_vars.shape[0]

    def alpha(self) -> float:
        """Clause density M/N."""
        return self.n_clauses / self.n_vars

    def clause(self, c: int) -> Clause:
        return Clause(tuple(
            Literal(int(v), bool(b))
            for v, b in zip(self.clause_vars[c], self.clause_negs[c])
        ))

    @property
    def clauses(self) -> list[Clause]:
        return [self.clause(c) for c in range(self.n_clauses)]

    @classmethod
    def from_clauses(cls, n_vars: int, clauses: Iterable, arity: int | None = None,
                     seed: int | None = None) -> "Instance":
        """Build from Clause objects or (var, negated) pair sequences."""
        rows_v, rows_b = [], []
        for cl in clauses:
            lits = cl.literals if isinstance(cl, Clause) else cl
            rows_v.append([lit.var if isinstance(lit, Literal) else lit[0] for lit in lits])
            rows_b.append([lit.negated if isinstance(lit, Literal) else lit[1] for lit in lits])
        if not rows_v:
            k = arity if arity is not None else 3
            return cls(n_vars, np.empty((0, k), dtype=np.int64),
                       np.empty((0, k), dtype=bool), arity=k, seed=seed)
        widths = {len(r) for r in rows_v}
        if len(widths) != 1:
            raise InvalidParametersError("clauses must share one arity")
        return cls(n_vars, np.array(rows_v), np.array(rows_b), arity=arity, seed=seed)

    def summary(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "n_clauses": self.n_clauses,
            "arity": self.arity,
            "alpha": self.alpha(),
            "seed": self.seed,
        }

    def __eq__(self, other) -> bool:
        return (isinstance(other, Instance)
                and self.n_vars == other.n_vars
                and self.arity == other.arity
                and np.array_equal(self.clause_vars, other.clause_vars)
                and np.array_equal(self.clause_negs, other.clause_negs))

    def __repr__(self) -> str:
        return (f"Instance(n_vars={self.n_vars}, n_clauses={self.n_clauses}, "
                f"arity={self.arity})")


class FactorGraph:
    """Directed-edge indexing of an instance.

    Edge ``e`` is the directed (variable, clause) pair with
    ``clause = e // K`` and slot ``e % K``; there are exactly K*M of them.
    ``var_edges`` lists edge ids grouped by variable (CSR layout with
    offsets ``var_ptr``), which is the inverse of the clause-side adjacency
    held by the instance itself.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        k = instance.arity
        edge_var = instance.clause_vars.reshape(-1)
        order = np.argsort(edge_var, kind="stable").astype(np.int64)
        counts = np.bincount(edge_var, minlength=instance.n_vars)
        var_ptr = np.zeros(instance.n_vars + 1, dtype=np.int64)
        np.cumsum(counts, out=var_ptr[1:])
        self.edge_var = np.ascontiguousarray(edge_var, dtype=np.int64)
        self.edge_neg = np.ascontiguousarray(instance.clause_negs.reshape(-1), dtype=np.uint8)
        self.var_edges = order
        self.var_ptr = var_ptr
        for a in (self.edge_var, self.edge_neg, self.var_edges, self.var_ptr):
            a.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return self.edge_var.shape[0]

    def degree(self, var: int) -> int:
        return int(self.var_ptr[var + 1] - self.var_ptr[var])

    def degrees(self) -> np.ndarray:
        return np.diff(self.var_ptr)

    def edges_of(self, var: int) -> np.ndarray:
        """Edge ids incident to ``var``."""
        return self.var_edges[self.var_ptr[var]:self.var_ptr[var + 1]]

    def clauses_of(self, var: int) -> list[tuple[int, int]]:
        """(clause index, slot) pairs for every clause containing ``var``."""
        k = self.instance.arity
        return [(int(e) // k, int(e) % k) for e in self.edges_of(var)]

    def edge_id(self, var: int, clause: int) -> int:
        """Directed-edge id for (var, clause); raises if not adjacent."""
        k = self.instance.arity
        row = self.instance.clause_vars[clause]
        for slot in range(k):
            if row[slot] == var:
                return clause * k + slot
        raise InvalidParametersError(f"variable {var} not in clause {clause}")


# ---------------------------------------------------------------------------
# Generation and DIMACS I/O
# ---------------------------------------------------------------------------

def generate_random_instance(n_vars: int, alpha: float, arity: int = 3,
                             seed: int = 0) -> Instance:
    """Sample a uniformly random K-SAT instance with M = round(alpha * N).

    Variables within a clause are drawn uniformly without replacement;
    signs are fair coin flips; clauses are i.i.d. (repeats across the
    formula are allowed).  Identical seeds give identical instances.
    """
    if n_vars < arity:
        raise InvalidParametersError("need n_vars >= arity")
    if alpha <= 0:
        raise InvalidParametersError("alpha must be positive")
    m = round(alpha * n_vars)
    rng = substream(seed, "instance")
    cv = rng.integers(0, n_vars, size=(m, arity), dtype=np.int64)
    # uniform-without-replacement within each clause, by redrawing rows
    # that contain a duplicate
    while True:
        row_sorted = np.sort(cv, axis=1)
        dup = (row_sorted[:, 1:] == row_sorted[:, :-1]).any(axis=1)
        n_dup = int(dup.sum())
        if n_dup == 0:
            break
        cv[dup] = rng.integers(0, n_vars, size=(n_dup, arity), dtype=np.int64)
    negs = rng.integers(0, 2, size=(m, arity), dtype=np.int64).astype(bool)
    return Instance(n_vars, cv, negs, arity=arity, seed=seed)


def parse_dimacs(text) -> Instance:
    """Parse DIMACS CNF with uniform clause arity.

    ``-v`` maps to negated=True; the 1-based DIMACS indices map to 0-based
    internal indices.  Raises :class:`DimacsParseError` with the offending
    line number on malformed input.
    """
    if hasattr(text, "read"):
        text = text.read()
    n_vars = None
    n_clauses = None
    rows_v: list[list[int]] = []
    rows_b: list[list[bool]] = []
    cur_v: list[int] = []
    cur_b: list[bool] = []
    clause_line = 1
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("c"):
            continue
        if stripped.startswith("p"):
            if n_vars is not None:
                raise DimacsParseError("duplicate problem line", lineno)
            parts = stripped.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsParseError("malformed problem line, expected 'p cnf N M'", lineno)
            try:
                n_vars = int(parts[2])
                n_clauses = int(parts[3])
            except ValueError:
                raise DimacsParseError("non-integer counts in problem line", lineno) from None
            if n_vars < 0 or n_clauses < 0:
                raise DimacsParseError("negative counts in problem line", lineno)
            continue
        if n_vars is None:
            raise DimacsParseError("clause data before problem line", lineno)
        if not cur_v:
            clause_line = lineno
        for tok in stripped.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsParseError(f"bad literal {tok!r}", lineno) from None
            if lit == 0:
                if not cur_v:
                    raise DimacsParseError("empty clause", lineno)
                rows_v.append(cur_v)
                rows_b.append(cur_b)
                cur_v, cur_b = [], []
            else:
                v = abs(lit) - 1
                if v >= n_vars:
                    raise DimacsParseError(
                        f"variable {abs(lit)} out of range (header says {n_vars})", lineno)
                cur_v.append(v)
                cur_b.append(lit < 0)
    if cur_v:
        raise DimacsParseError("unterminated clause at end of input", clause_line)
    if n_vars is None:
        raise DimacsParseError("missing problem line", 1)
    if len(rows_v) != n_clauses:
        raise DimacsParseError(
            f"header promises {n_clauses} clauses, found {len(rows_v)}", clause_line)
    widths = {len(r) for r in rows_v}
    if len(widths) > 1:
        raise DimacsParseError("mixed clause arities are not supported", clause_line)
    arity = widths.pop() if widths else 3
    try:
        return Instance.from_clauses(
            n_vars, (list(zip(v, b)) for v, b in zip(rows_v, rows_b)), arity=arity)
    except InvalidParametersError as exc:
        raise DimacsParseError(str(exc), clause_line) from None


def write_dimacs(instance: Instance) -> str:
    """Canonical DIMACS text; ``parse_dimacs(write_dimacs(x)) == x``."""
    lines = [f"p cnf {instance.n_vars} {instance.n_clauses}"]
    signs = np.where(instance.clause_negs, -1, 1)
    lits = signs * (instance.clause_vars + 1)
    for row in lits:
        lines.append(" ".join(str(int(x)) for x in row) + " 0")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

def evaluate(instance: Instance, assignment) -> int:
    """Number of violated clauses under ``assignment`` (length-N bools)."""
    values = np.asarray(assignment, dtype=bool)
    if values.shape != (instance.n_vars,):
        raise InvalidParametersError(
            f"assignment must have length {instance.n_vars}, got shape {values.shape}")
    if instance.n_clauses == 0:
        return 0
    lit_true = values[instance.clause_vars] ^ instance.clause_negs
    return int(np.sum(~lit_true.any(axis=1)))


def shells(instance: Instance, node: int, k: int,
           graph: FactorGraph | None = None) -> list[set[int]]:
    """Breadth-first distance shells 1..k of the variable-adjacency relation.

    Two variables are at distance 1 when some clause contains both.  The
    returned sets are pairwise disjoint and exclude the start node.
    """
    if not 0 <= node < instance.n_vars:
        raise InvalidParametersError("node out of range")
    graph = graph or FactorGraph(instance)
    cv = instance.clause_vars
    arity = instance.arity
    seen = {node}
    frontier = {node}
    out: list[set[int]] = []
    for _ in range(k):
        nxt: set[int] = set()
        for v in frontier:
            for e in graph.edges_of(v):
                row = cv[int(e) // arity]
                for u in row:
                    u = int(u)
                    if u not in seen:
                        nxt.add(u)
        seen |= nxt
        out.append(nxt)
        frontier = nxt
    return out


def is_acyclic(instance: Instance) -> tuple[bool, list[int] | None]:
    """Whether the factor graph is forest-shaped.

    Returns ``(True, None)`` or ``(False, witness)`` where the witness is a
    list of clause indices whose union of variables contains a cycle.
    """
    parent = list(range(instance.n_vars))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    adj: dict[int, list[tuple[int, int]]] = {}
    for c in range(instance.n_clauses):
        row = instance.clause_vars[c]
        u0 = int(row[0])
        for t in range(1, instance.arity):
            v = int(row[t])
            ru, rv = find(u0), find(v)
            if ru == rv:
                return False, _cycle_witness(adj, u0, v, c)
            parent[rv] = ru
        for a in range(instance.arity):
            for b in range(a + 1, instance.arity):
                adj.setdefault(int(row[a]), []).append((c, int(row[b])))
                adj.setdefault(int(row[b]), []).append((c, int(row[a])))
    return True, None


def _cycle_witness(adj, u: int, v: int, closing_clause: int) -> list[int]:
    """Clause-index path u..v through already-added clauses, plus the closer."""
    from collections import deque

    prev: dict[int, tuple[int, int]] = {u: (-1, -1)}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        if x == v:
            break
        for c, y in adj.get(x, ()):
            if y not in prev:
                prev[y] = (x, c)
                queue.append(y)
    path: list[int] = []
    x = v
    while x != u:
        x, c = prev[x]
        path.append(c)
    path.reverse()
    path.append(closing_clause)
    # deduplicate while keeping order (a clause may appear via two slots)
    seen: set[int] = set()
    out = []
    for c in path:
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out
