"""Depth-3 lower-bound machinery and the balanced product-term decomposition.

A communication matrix tabulates a function's values over a two-block
variable partition; its exact rank lower-bounds the second-layer width
of any depth-3 D&C circuit computing the function.  The decomposition
splits any D&C circuit of size s into at most s^2 terms g_i * h_i with
balanced disjoint scopes, by repeatedly excising a balanced-scope node
found by walking down the largest-scope children.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product

from .circuit import (
    Circuit,
    CircuitBuilder,
    ConstantNode,
    LeafNode,
    ProductNode,
    SumNode,
)
from .errors import InstanceTooLargeError, SpnError
from .linalg import exact_rank
from .structure import is_dc

__all__ = [
    "CommMatrix",
    "comm_matrix",
    "exact_rank",
    "perturbation_rank_bound",
    "binarize_products",
    "DecompositionTerm",
    "Decomposition",
    "decompose",
    "depth3_bound_report",
]


@dataclass(frozen=True)
class CommMatrix:
    """Function values indexed by assignments to the two partition blocks.

    Bit i of a row index is the value of the i-th smallest variable of A
    (little-endian); columns encode B the same way.
    """

    block_a: tuple[int, ...]
    block_b: tuple[int, ...]
    entries: tuple[tuple[Fraction, ...], ...]


def comm_matrix(fn, n: int, partition: tuple, max_block: int = 12) -> CommMatrix:
    """Tabulate fn over all binary assignments, split by the partition.

    `fn` takes a tuple of n zeros/ones indexed by variable id.
    """
    block_a, block_b = (tuple(sorted(partition[0])), tuple(sorted(partition[1])))
    if set(block_a) & set(block_b):
        raise SpnError("partition blocks overlap")
    if set(block_a) | set(block_b) != set(range(n)):
        raise SpnError("partition must cover all variables")
    if len(block_a) > max_block or len(block_b) > max_block:
        raise InstanceTooLargeError(f"blocks limited to {max_block} variables")
    entries = []
    x = [0] * n
    for row in range(1 << len(block_a)):
        for i, v in enumerate(block_a):
            x[v] = (row >> i) & 1
        row_vals = []
        for col in range(1 << len(block_b)):
            for i, v in enumerate(block_b):
                x[v] = (col >> i) & 1
            row_vals.append(fn(tuple(x)))
        entries.append(tuple(row_vals))
    return CommMatrix(block_a, block_b, tuple(entries))


def circuit_evaluator(circuit: Circuit):
    """Adapt a binary-domain circuit to the tuple-of-bits interface of comm_matrix."""

    def fn(x: tuple) -> Fraction:
        return circuit.evaluate(dict(enumerate(x)))

    return fn


def half_partition(n: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    return tuple(range(n // 2)), tuple(range(n // 2, n))


def perturbation_rank_bound(d_matrix, audit: bool = False) -> Fraction:
    """Lower bound k/2 - Delta/2 on the rank of I + D, Delta the entry-wise l1 mass of D."""
    k = len(d_matrix)
    delta = Fraction(0)
    for row in d_matrix:
        if len(row) != k:
            raise SpnError("perturbation matrix must be square")
        for x in row:
            delta += abs(Fraction(x))
    bound = (Fraction(k) - delta) / 2
    if audit:
        eye_plus = [
            [Fraction(x) + (1 if i == j else 0) for j, x in enumerate(row)]
            for i, row in enumerate(d_matrix)
        ]
        rank = exact_rank(eye_plus)
        if bound > rank:
            raise SpnError(f"perturbation bound {bound} exceeds exact rank {rank}")
    return bound


# -- decomposition into balanced product terms --------------------------------


def binarize_products(circuit: Circuit) -> Circuit:
    """Equivalent circuit where every product node has fan-in at most two."""
    b = CircuitBuilder(extended=circuit.extended)
    for v in circuit.variables:
        b.variable(v.domain)
    for f in circuit.leaf_functions:
        b.leaf_function(f.variable, f.table, f.name)
    remap: dict[int, int] = {}

    def combine(children: list[int]) -> int:
        if len(children) == 1:
            return children[0]
        mid = len(children) // 2
        return b.product([combine(children[:mid]), combine(children[mid:])])

    for node in circuit.nodes:
        if isinstance(node, LeafNode):
            remap[node.id] = b.leaf(node.leaf_function)
        elif isinstance(node, ConstantNode):
            remap[node.id] = b.constant(node.value)
        elif isinstance(node, SumNode):
            remap[node.id] = b.sum(
                [(remap[c], w) for c, w in zip(node.children, node.weights)]
            )
        else:
            kids = [remap[c] for c in node.children]
            remap[node.id] = combine(kids) if len(kids) > 1 else b.product(kids)
    return b.build(remap[circuit.root])


@dataclass(frozen=True)
class DecompositionTerm:
    y_vars: tuple[int, ...]
    z_vars: tuple[int, ...]
    g_table: dict  # assignment tuple over y_vars -> value
    h_table: dict  # assignment tuple over z_vars -> value


@dataclass(frozen=True)
class Decomposition:
    terms: tuple[DecompositionTerm, ...]
    source_size: int

    def reconstruct(self, assignment) -> Fraction:
        """Sum of g_i * h_i at a full assignment (mapping variable -> value)."""
        total = Fraction(0)
        for t in self.terms:
            gy = t.g_table[tuple(assignment[v] for v in t.y_vars)]
            hz = t.h_table[tuple(assignment[v] for v in t.z_vars)]
            total += gy * hz
        return total


class _MutableCircuit:
    """Working copy supporting node excision with pruning, for decompose()."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.n = len(circuit.nodes)
        self.sum_edges = {
            nd.id: list(zip(nd.children, nd.weights))
            for nd in circuit.nodes
            if isinstance(nd, SumNode)
        }
        self.prod_children = {
            nd.id: list(nd.children) for nd in circuit.nodes if isinstance(nd, ProductNode)
        }
        self.dead: set[int] = set()
        self.root = circuit.root
        self.root_dead = False

    def children(self, nid: int) -> list[int]:
        node = self.circuit.nodes[nid]
        if isinstance(node, SumNode):
            return [c for c, _ in self.sum_edges[nid]]
        if isinstance(node, ProductNode):
            return self.prod_children[nid]
        return []

    def reachable(self) -> set[int]:
        if self.root_dead:
            return set()
        seen = {self.root}
        stack = [self.root]
        while stack:
            for c in self.children(stack.pop()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def remove(self, victim: int):
        """Excise a node (replace with zero): product parents die, sum parents drop the edge."""
        parents: dict[int, list[int]] = {}
        for nid in self.reachable():
            for c in self.children(nid):
                parents.setdefault(c, []).append(nid)
        stack = [victim]
        while stack:
            nid = stack.pop()
            if nid in self.dead:
                continue
            self.dead.add(nid)
            if nid == self.root:
                self.root_dead = True
                return
            for p in set(parents.get(nid, ())):
                if p in self.dead:
                    continue
                node = self.circuit.nodes[p]
                if isinstance(node, ProductNode):
                    stack.append(p)
                else:
                    self.sum_edges[p] = [(c, w) for c, w in self.sum_edges[p] if c != nid]
                    if not self.sum_edges[p]:
                        stack.append(p)

    def evaluate(self, assignment: dict, override: dict | None = None):
        """Bottom-up over live reachable nodes; `override` pins node values."""
        override = override or {}
        live = self.reachable()
        values: dict[int, object] = {}
        for node in self.circuit.nodes:
            nid = node.id
            if nid not in live:
                continue
            if nid in override:
                values[nid] = override[nid]
            elif isinstance(node, LeafNode):
                f = self.circuit.leaf_functions[node.leaf_function]
                values[nid] = f.table[assignment[f.variable]]
            elif isinstance(node, ConstantNode):
                values[nid] = node.value
            elif isinstance(node, SumNode):
                acc = 0
                for c, w in self.sum_edges[nid]:
                    acc += w * values[c]
                values[nid] = acc
            else:
                acc = 1
                for c in self.prod_children[nid]:
                    acc *= values[c]
                values[nid] = acc
        return values.get(self.root, 0)

    def evaluate_sub(self, top: int, assignment: dict):
        """Evaluate just the subcircuit rooted at a live node."""
        seen = {top}
        stack = [top]
        order = []
        while stack:
            nid = stack.pop()
            order.append(nid)
            for c in self.children(nid):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        values: dict[int, object] = {}
        for nid in sorted(order):
            node = self.circuit.nodes[nid]
            if isinstance(node, LeafNode):
                f = self.circuit.leaf_functions[node.leaf_function]
                values[nid] = f.table[assignment[f.variable]]
            elif isinstance(node, ConstantNode):
                values[nid] = node.value
            elif isinstance(node, SumNode):
                values[nid] = sum(w * values[c] for c, w in self.sum_edges[nid])
            else:
                acc = 1
                for c in self.prod_children[nid]:
                    acc *= values[c]
                values[nid] = acc
        return values[top]


def decompose(circuit: Circuit, max_table_vars: int = 14) -> Decomposition:
    """Split a D&C circuit into at most size^2 balanced product terms.

    Products are first rewritten to fan-in two.  Then, repeatedly, a node
    whose dependency-scope size lies in [n/3, 2n/3] is located by walking
    from the root through the largest-scope child (ties to the smallest
    node id), its g table is the subcircuit's value over its scope, its h
    table is the difference between the circuit evaluated with the node
    pinned to one and pinned to zero (a function of the complementary
    variables only), and the node is excised.  The recorded terms satisfy
    sum_i g_i(y_i) h_i(z_i) = circuit(x) for every assignment.
    """
    if circuit.extended:
        raise SpnError("decompose requires a monotone circuit")
    if not is_dc(circuit):
        raise SpnError("decompose requires a decomposable and complete circuit")
    n = len(circuit.variables)
    if n < 3:
        raise SpnError("decompose needs at least three variables")
    if circuit.dependency_scope() != frozenset(range(n)):
        raise SpnError("decompose requires the output to depend on every variable")
    source_size = len(circuit.nodes)

    work = _MutableCircuit(binarize_products(circuit))
    scopes = work.circuit.scopes()
    domains = {v.id: v.domain for v in work.circuit.variables}

    def grid(vars_: tuple[int, ...]):
        return iter_product(*(domains[v] for v in vars_))

    terms = []
    while not work.root_dead:
        # walk: first node on the largest-child path with scope <= 2n/3
        node = work.root
        while 3 * len(scopes[node][1]) > 2 * n:
            kids = work.children(node)
            node = max(kids, key=lambda c: (len(scopes[c][1]), -c))
        y_vars = tuple(sorted(scopes[node][1]))
        z_vars = tuple(v for v in range(n) if v not in scopes[node][1])
        if 3 * len(y_vars) < n:
            raise SpnError("balanced-node walk failed; circuit is not D&C")
        if len(y_vars) > max_table_vars or len(z_vars) > max_table_vars:
            raise InstanceTooLargeError(
                f"term tables over more than {max_table_vars} variables"
            )

        g_table = {}
        for combo in grid(y_vars):
            g_table[combo] = work.evaluate_sub(node, dict(zip(y_vars, combo)))

        base = {v: domains[v][0] for v in y_vars}
        h_table = {}
        for combo in grid(z_vars):
            assignment = dict(base)
            assignment.update(zip(z_vars, combo))
            hi = work.evaluate(assignment, override={node: 1})
            lo = work.evaluate(assignment, override={node: 0})
            value = hi - lo
            if value < 0:
                raise SpnError("negative cofactor table entry; circuit is not D&C")
            h_table[combo] = value
        terms.append(DecompositionTerm(y_vars, z_vars, g_table, h_table))
        work.remove(node)

    if len(terms) > source_size * source_size:
        raise SpnError("decomposition produced more than size^2 terms")
    return Decomposition(tuple(terms), source_size)


def depth3_bound_report(fn, n: int, partition: tuple) -> dict:
    """Rank of the communication matrix and the implied depth-3 width floor."""
    matrix = comm_matrix(fn, n, partition)
    rank = exact_rank([list(row) for row in matrix.entries])
    return {
        "n": n,
        "partition": {"A": list(matrix.block_a), "B": list(matrix.block_b)},
        "rank": rank,
        "min_second_layer_width": rank,
    }
