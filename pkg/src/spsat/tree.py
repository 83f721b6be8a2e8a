"""Finite-depth unrolling of an instance around a root variable.

The unrolled tree replicates, for each tree node, every clause of its
image variable except the clause it was reached through, so each
non-boundary node's clause neighborhood (with signs) is an exact copy of
its image's neighborhood in the instance.  Distinct tree nodes may map to
the same variable; on a loop-free instance the unrolling reproduces the
instance itself.

Shells are materialized breadth-first up to depth k_max + 1; the last
shell is the boundary, whose upward surveys are supplied externally.  A
single leaf-to-root pass of the survey update is then exact on the tree,
which is what the boundary-condition uniqueness experiments probe: if the
root survey forgets a generic boundary as the depth grows, the update has
a unique stable solution there.

Nodes are stored shell-contiguously in flat arrays; clause replicas are
grouped by parent node.  Everything is immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContradictionError, InvalidParametersError, TreeBudgetError
from .instance import FactorGraph, Instance
from .rng import substream
from .survey import Survey

DEFAULT_NODE_BUDGET = 10_000_000


@dataclass(frozen=True)
class TreeNode:
    """View of one tree node: its handle, image variable, and parentage."""

    id: int
    mapped_var: int
    parent_replica: int | None
    parent_clause: int | None
    depth: int


@dataclass
class RootedTree:
    instance: Instance
    root_var: int
    depth: int  # deepest non-boundary shell
    node_var: np.ndarray        # (n_nodes,) image variable per node
    node_parent_rep: np.ndarray  # (n_nodes,) replica above each node, -1 at root
    shell_ptr: np.ndarray       # (depth + 3,) node offsets per shell 0..depth+1
    node_rep_ptr: np.ndarray    # (n_nodes + 1,) child replicas grouped per node
    rep_clause: np.ndarray      # (n_reps,) original clause index
    rep_parent_node: np.ndarray
    rep_parent_slot: np.ndarray
    rep_child_nodes: np.ndarray  # (n_reps, K-1)
    rep_child_slots: np.ndarray  # (n_reps, K-1)

    @property
    def n_nodes(self) -> int:
        return self.node_var.shape[0]

    @property
    def n_replicas(self) -> int:
        return self.rep_clause.shape[0]

    def shell(self, d: int) -> np.ndarray:
        """Node ids at depth d (empty when the tree terminated early)."""
        if d < 0 or d + 1 >= self.shell_ptr.shape[0]:
            return np.empty(0, dtype=np.int64)
        return np.arange(self.shell_ptr[d], self.shell_ptr[d + 1], dtype=np.int64)

    def shell_sizes(self) -> np.ndarray:
        return np.diff(self.shell_ptr)

    def boundary_nodes(self, k: int) -> np.ndarray:
        """Nodes whose upward edges form the boundary when truncating at k."""
        return self.shell(k + 1)

    def depth_of(self, node: int) -> int:
        return int(np.searchsorted(self.shell_ptr, node, side="right") - 1)

    def node(self, node: int) -> TreeNode:
        rep = int(self.node_parent_rep[node])
        return TreeNode(
            id=int(node),
            mapped_var=int(self.node_var[node]),
            parent_replica=None if rep < 0 else rep,
            parent_clause=None if rep < 0 else int(self.rep_clause[rep]),
            depth=self.depth_of(node),
        )

    def replicas_of(self, node: int) -> np.ndarray:
        return np.arange(self.node_rep_ptr[node], self.node_rep_ptr[node + 1],
                         dtype=np.int64)


def _ragged_take(ptr: np.ndarray, data: np.ndarray, keys: np.ndarray):
    """Gather CSR rows for ``keys``; returns (values, owner, lengths)."""
    starts = ptr[keys]
    lens = (ptr[keys + 1] - starts).astype(np.int64)
    total = int(lens.sum())
    owner = np.repeat(np.arange(keys.shape[0], dtype=np.int64), lens)
    if total == 0:
        return data[:0], owner, lens
    offsets = np.zeros(keys.shape[0], dtype=np.int64)
    np.cumsum(lens[:-1], out=offsets[1:])
    idx = np.arange(total, dtype=np.int64) - np.repeat(offsets, lens) + np.repeat(starts, lens)
    return data[idx], owner, lens


def unroll(instance: Instance, root: int, k_max: int,
           node_budget: int = DEFAULT_NODE_BUDGET,
           graph: FactorGraph | None = None) -> RootedTree:
    """Breadth-first replication down to boundary shell ``k_max + 1``.

    Refuses with :class:`TreeBudgetError` (carrying the exact count it was
    about to reach) rather than materializing more than ``node_budget``
    nodes; at clause density alpha the shells grow roughly like
    (2 * 3alpha)^k for 3-SAT, so deep unrollings are large.
    """
    if not 0 <= root < instance.n_vars:
        raise InvalidParametersError("root out of range")
    if k_max < 0:
        raise InvalidParametersError("k_max must be nonnegative")
    graph = graph or FactorGraph(instance)
    k = instance.arity
    others_tab = np.array([[j for j in range(k) if j != p] for p in range(k)],
                          dtype=np.int64)

    node_var = [np.array([root], dtype=np.int64)]
    node_parent_rep = [np.array([-1], dtype=np.int64)]
    shell_ptr = [0, 1]
    node_rep_counts: list[np.ndarray] = []
    rep_clause: list[np.ndarray] = []
    rep_parent_node: list[np.ndarray] = []
    rep_parent_slot: list[np.ndarray] = []
    rep_child_nodes: list[np.ndarray] = []
    rep_child_slots: list[np.ndarray] = []

    n_nodes = 1
    n_reps = 0
    frontier_start = 0
    frontier_var = node_var[0]
    frontier_parent_clause = np.array([-1], dtype=np.int64)

    for depth in range(k_max + 1):
        edges, owner, _ = _ragged_take(graph.var_ptr, graph.var_edges, frontier_var)
        clauses = edges // k
        keep = clauses != frontier_parent_clause[owner]
        new_clause = clauses[keep]
        new_slot = (edges % k)[keep]
        new_parent = owner[keep] + frontier_start
        r_new = new_clause.shape[0]
        n_children = r_new * (k - 1)
        if n_nodes + n_children > node_budget:
            raise TreeBudgetError(
                f"unrolling to depth {depth + 1} needs {n_nodes + n_children} nodes, "
                f"budget is {node_budget}",
                estimate=n_nodes + n_children, budget=node_budget)
        node_rep_counts.append(np.bincount(owner[keep], minlength=frontier_var.shape[0]))
        rep_clause.append(new_clause)
        rep_parent_node.append(new_parent)
        rep_parent_slot.append(new_slot)
        child_slots = others_tab[new_slot]
        rep_child_slots.append(child_slots)
        child_ids = n_nodes + np.arange(n_children, dtype=np.int64)
        rep_child_nodes.append(child_ids.reshape(r_new, k - 1))
        child_vars = instance.clause_vars[new_clause[:, None], child_slots].reshape(-1)
        node_var.append(child_vars)
        node_parent_rep.append(np.repeat(n_reps + np.arange(r_new, dtype=np.int64), k - 1))
        frontier_start = n_nodes
        n_nodes += n_children
        n_reps += r_new
        shell_ptr.append(n_nodes)
        frontier_var = child_vars
        frontier_parent_clause = np.repeat(new_clause, k - 1)
        if n_children == 0:
            shell_ptr.extend([n_nodes] * (k_max - depth))
            break

    all_node_var = np.concatenate(node_var)
    boundary_start = shell_ptr[k_max + 1]
    counts = np.zeros(n_nodes, dtype=np.int64)
    if node_rep_counts:
        flat_counts = np.concatenate(node_rep_counts)
        counts[:flat_counts.shape[0]] = flat_counts
    counts[boundary_start:] = 0
    node_rep_ptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=node_rep_ptr[1:])

    def cat(parts, width=None):
        if not parts:
            shape = (0,) if width is None else (0, width)
            return np.empty(shape, dtype=np.int64)
        return np.concatenate(parts)

    return RootedTree(
        instance=instance,
        root_var=root,
        depth=k_max,
        node_var=all_node_var,
        node_parent_rep=np.concatenate(node_parent_rep),
        shell_ptr=np.array(shell_ptr, dtype=np.int64),
        node_rep_ptr=node_rep_ptr,
        rep_clause=cat(rep_clause),
        rep_parent_node=cat(rep_parent_node),
        rep_parent_slot=cat(rep_parent_slot),
        rep_child_nodes=cat(rep_child_nodes, width=k - 1),
        rep_child_slots=cat(rep_child_slots, width=k - 1),
    )


# ---------------------------------------------------------------------------
# Boundary conditions and inward propagation
# ---------------------------------------------------------------------------

@dataclass
class BoundaryCondition:
    """Surveys on the upward edges of shell ``truncation_depth + 1``."""

    truncation_depth: int
    surveys: np.ndarray  # (n_boundary_nodes, 3), rows on the simplex

    def validate(self, tree: RootedTree) -> None:
        nodes = tree.boundary_nodes(self.truncation_depth)
        if self.surveys.shape != (nodes.shape[0], 3):
            raise InvalidParametersError(
                f"boundary must cover exactly the {nodes.shape[0]} hanging edges "
                f"at depth {self.truncation_depth + 1}, got shape {self.surveys.shape}")
        if self.surveys.size and (
                self.surveys.min() < 0.0
                or np.abs(self.surveys.sum(axis=1) - 1.0).max() > 1e-9):
            raise InvalidParametersError("boundary rows must lie on the simplex")


def unfrozen_boundary(tree: RootedTree, k: int | None = None) -> BoundaryCondition:
    k = tree.depth if k is None else k
    n = tree.boundary_nodes(k).shape[0]
    s = np.zeros((n, 3))
    s[:, 1] = 1.0
    return BoundaryCondition(k, s)


def random_boundary(tree: RootedTree, k: int | None = None, seed: int = 0,
                    rng: np.random.Generator | None = None) -> BoundaryCondition:
    """I.i.d. uniform-on-the-simplex surveys on every hanging edge."""
    k = tree.depth if k is None else k
    rng = rng if rng is not None else substream(seed, "boundary")
    n = tree.boundary_nodes(k).shape[0]
    raw = -np.log(rng.random((n, 3)))
    return BoundaryCondition(k, raw / raw.sum(axis=1, keepdims=True))


@dataclass
class PropagationResult:
    root: Survey
    node_surveys: np.ndarray  # upward survey per node, shells 0..k+1
    truncation_depth: int
    edges_touched: int


def _grouped_product(values: np.ndarray, ptr: np.ndarray) -> np.ndarray:
    out = np.ones(ptr.shape[0] - 1)
    nonempty = ptr[:-1] < ptr[1:]
    if values.shape[0]:
        out[nonempty] = np.multiply.reduceat(values, ptr[:-1][nonempty])
    return out


def propagate_inward(tree: RootedTree, boundary: BoundaryCondition) -> PropagationResult:
    """One exact leaf-to-root pass of the survey update.

    Boundary surveys enter the hanging edges at depth k+1; every interior
    node's upward survey is the normalized warning fold over its child
    replicas (all-unfrozen for childless nodes), and the root entry is its
    local survey.  Each tree edge is touched exactly once.
    """
    boundary.validate(tree)
    k_trunc = boundary.truncation_depth
    negs = tree.instance.clause_negs
    stop = int(tree.shell_ptr[k_trunc + 2])
    up = np.zeros((stop, 3))
    up[:, 1] = 1.0
    bnodes = tree.boundary_nodes(k_trunc)
    up[bnodes] = boundary.surveys
    edges_touched = 0
    for d in range(k_trunc, -1, -1):
        n_lo = int(tree.shell_ptr[d])
        n_hi = int(tree.shell_ptr[d + 1])
        if n_hi == n_lo:
            continue
        r_lo = int(tree.node_rep_ptr[n_lo])
        r_hi = int(tree.node_rep_ptr[n_hi])
        local_ptr = tree.node_rep_ptr[n_lo:n_hi + 1] - r_lo
        if r_hi > r_lo:
            reps = slice(r_lo, r_hi)
            cl = tree.rep_clause[reps]
            child_up = up[tree.rep_child_nodes[reps]]
            child_negs = negs[cl[:, None], tree.rep_child_slots[reps]]
            viol = np.where(child_negs, child_up[:, :, 0], child_up[:, :, 2])
            om = 1.0 - viol.prod(axis=1)
            parent_neg = negs[cl, tree.rep_parent_slot[reps]]
            af = np.where(parent_neg, om, 1.0)
            cf = np.where(parent_neg, 1.0, om)
            edges_touched += (r_hi - r_lo) * tree.instance.arity
        else:
            af = om = cf = np.empty(0)
        pa = _grouped_product(af, local_ptr)
        pb = _grouped_product(om, local_ptr)
        pc = _grouped_product(cf, local_ptr)
        st = pa - pb
        sf = pc - pb
        norm = pb + (st + sf)
        if np.any(norm <= 0.0):
            node = n_lo + int(np.argmax(norm <= 0.0))
            raise ContradictionError(
                f"contradictory warnings at tree node {node} "
                f"(maps to variable {int(tree.node_var[node])})",
                where=(node, None))
        up[n_lo:n_hi, 0] = st / norm
        up[n_lo:n_hi, 1] = pb / norm
        up[n_lo:n_hi, 2] = sf / norm
    root = Survey(float(up[0, 0]), float(up[0, 1]), float(up[0, 2]))
    return PropagationResult(root, up, k_trunc, edges_touched)


# ---------------------------------------------------------------------------
# Boundary-uniqueness experiments
# ---------------------------------------------------------------------------

@dataclass
class ProbeRow:
    k: int
    n_boundaries: int
    n_contradictions: int
    mean_pairwise_l1: float
    max_pairwise_l1: float
    mean_root: np.ndarray = field(default=None)


def _root_samples(tree: RootedTree, k: int, n_boundaries: int, seed: int,
                  boundary_seeds: Sequence[int] | None = None):
    # boundary b reuses one substream across depths (common random numbers),
    # so dispersion-vs-depth curves are smooth rather than independently noisy
    roots = []
    n_contra = 0
    for b in range(n_boundaries):
        sub = (seed, "boundary", b) if boundary_seeds is None \
            else (boundary_seeds[b], "boundary")
        bc = random_boundary(tree, k, rng=substream(*sub))
        try:
            roots.append(propagate_inward(tree, bc).root.as_array())
        except ContradictionError:
            n_contra += 1
    return roots, n_contra


def uniqueness_probe(tree: RootedTree, n_boundaries: int, seed: int = 0,
                     depths: Sequence[int] | None = None,
                     boundary_seeds: Sequence[int] | None = None) -> list[ProbeRow]:
    """Dispersion of the root survey across i.i.d. random boundaries.

    Returns one row per truncation depth with the mean and max pairwise L1
    distance between root surveys, so decay with depth is observable.
    Contradictions encountered under a boundary are counted, not fatal.
    """
    if n_boundaries < 2:
        raise InvalidParametersError("need at least 2 boundaries")
    depths = list(range(1, tree.depth + 1)) if depths is None else list(depths)
    rows = []
    for k in depths:
        roots, n_contra = _root_samples(tree, k, n_boundaries, seed, boundary_seeds)
        dists = [
            float(np.abs(roots[a] - roots[b]).sum())
            for a in range(len(roots)) for b in range(a + 1, len(roots))
        ]
        rows.append(ProbeRow(
            k=k,
            n_boundaries=len(roots),
            n_contradictions=n_contra,
            mean_pairwise_l1=float(np.mean(dists)) if dists else float("nan"),
            max_pairwise_l1=float(np.max(dists)) if dists else float("nan"),
            mean_root=np.mean(roots, axis=0) if roots else None,
        ))
    return rows


@dataclass
class CompareRow:
    k: int
    mean_root: np.ndarray
    l1_distance: float


def compare_with_instance(tree: RootedTree, instance_local: Survey,
                          n_boundaries: int, seed: int = 0,
                          depths: Sequence[int] | None = None) -> list[CompareRow]:
    """Distance between boundary-averaged root surveys and the instance
    fixed point's local survey at the root variable, tabulated vs depth."""
    depths = list(range(1, tree.depth + 1)) if depths is None else list(depths)
    target = instance_local.as_array()
    rows = []
    for k in depths:
        roots, _ = _root_samples(tree, k, n_boundaries, seed)
        mean_root = np.mean(roots, axis=0)
        rows.append(CompareRow(k, mean_root, float(np.abs(mean_root - target).sum())))
    return rows


def tree_to_jsonl(tree: RootedTree) -> str:
    """Line-delimited JSON node records for external plotting."""
    import json

    lines = []
    for nid in range(tree.n_nodes):
        node = tree.node(nid)
        lines.append(json.dumps({
            "node": node.id,
            "mapped_var": node.mapped_var,
            "parent_replica": node.parent_replica,
            "parent_clause": node.parent_clause,
            "depth": node.depth,
        }, sort_keys=True))
    return "\n".join(lines) + "\n"
