"""Arithmetic-circuit IR: construction, scopes, metrics, evaluation, JSON I/O.

A circuit is a DAG of leaf / constant / sum / product nodes in topological
order over finite discrete variables.  Leaf nodes compute univariate
functions given as tables over their variable's domain; sum edges carry
weights.  Monotone circuits (the default) require all weights, constants
and leaf values to be non-negative; the `extended` flag lifts that
restriction.  All arithmetic is exact: values are Python ints/Fractions.

Circuits are immutable after construction and safe to share across
threads for evaluation and analysis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import (
    CircuitStructureError,
    CycleError,
    DomainError,
    MonotonicityError,
    SerializationError,
    UnknownVariableError,
)

Rational = Union[int, Fraction]


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise DomainError(f"not an exact rational: {value!r}")


def format_rational(value) -> str:
    """Render a rational as 'p' or 'p/q' for JSON documents."""
    return str(as_fraction(value))


def _fast(value: Fraction):
    # Unwrap integral Fractions so hot loops run on plain ints.
    if value.denominator == 1:
        return value.numerator
    return value


@dataclass(frozen=True)
class VariableSpec:
    """A variable with a finite ordered domain of distinct rationals."""

    id: int
    domain: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.domain) == 0:
            raise DomainError(f"variable {self.id}: empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise DomainError(f"variable {self.id}: duplicate domain values")

    @property
    def nontrivial(self) -> bool:
        return len(self.domain) >= 2


@dataclass(frozen=True)
class LeafFunction:
    """A univariate function of one variable, given as a table over its domain."""

    id: int
    variable: int
    table: dict[Fraction, Fraction]
    name: str | None = None


@dataclass(frozen=True)
class LeafNode:
    id: int
    leaf_function: int


@dataclass(frozen=True)
class ConstantNode:
    id: int
    value: Fraction


@dataclass(frozen=True)
class SumNode:
    id: int
    children: tuple[int, ...]
    weights: tuple[Fraction, ...]


@dataclass(frozen=True)
class ProductNode:
    id: int
    children: tuple[int, ...]


Node = Union[LeafNode, ConstantNode, SumNode, ProductNode]


@dataclass(frozen=True)
class CircuitMetrics:
    size: int
    depth: int
    product_depth: int
    is_formula: bool


def node_children(node: Node) -> tuple[int, ...]:
    if isinstance(node, (SumNode, ProductNode)):
        return node.children
    return ()


class Circuit:
    """Immutable arithmetic circuit over finite discrete variables."""

    def __init__(
        self,
        variables: Sequence[VariableSpec],
        leaf_functions: Sequence[LeafFunction],
        nodes: Sequence[Node],
        root: int,
        extended: bool = False,
    ):
        self.variables = tuple(variables)
        self.leaf_functions = tuple(leaf_functions)
        self.nodes = tuple(nodes)
        self.root = root
        self.extended = extended
        self._validate()
        self._scopes = None
        self._plan = None

    # -- validation ------------------------------------------------------

    def _validate(self):
        for i, v in enumerate(self.variables):
            if v.id != i:
                raise CircuitStructureError(f"variable ids must be 0..n-1, got {v.id} at {i}")
        for i, f in enumerate(self.leaf_functions):
            if f.id != i:
                raise CircuitStructureError(f"leaf-function ids must be dense, got {f.id} at {i}")
            if not (0 <= f.variable < len(self.variables)):
                raise CircuitStructureError(f"leaf function {i}: unknown variable {f.variable}")
            domain = self.variables[f.variable].domain
            if set(f.table.keys()) != set(domain):
                raise DomainError(f"leaf function {i}: table keys must equal the domain")
            if not self.extended and any(v < 0 for v in f.table.values()):
                raise MonotonicityError(f"leaf function {i}: negative value in monotone circuit")
        n_nodes = len(self.nodes)
        if n_nodes == 0:
            raise CircuitStructureError("circuit has no nodes")
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise CircuitStructureError(f"node ids must be dense, got {node.id} at {i}")
            if isinstance(node, LeafNode):
                if not (0 <= node.leaf_function < len(self.leaf_functions)):
                    raise CircuitStructureError(f"node {i}: unknown leaf function")
            elif isinstance(node, ConstantNode):
                if not self.extended and node.value < 0:
                    raise MonotonicityError(f"node {i}: negative constant in monotone circuit")
            else:
                if len(node.children) < 1:
                    raise CircuitStructureError(f"node {i}: sum/product needs >= 1 child")
                for c in node.children:
                    if c < 0 or c >= n_nodes:
                        raise CircuitStructureError(f"node {i}: dangling child {c}")
                    if c >= i:
                        raise CycleError(f"node {i}: child {c} violates topological order")
                if isinstance(node, SumNode):
                    if len(node.weights) != len(node.children):
                        raise CircuitStructureError(f"node {i}: weights/children length mismatch")
                    if not self.extended and any(w < 0 for w in node.weights):
                        raise MonotonicityError(f"node {i}: negative weight in monotone circuit")
        if not (0 <= self.root < n_nodes):
            raise CircuitStructureError(f"root {self.root} out of range")
        has_parent = set()
        for node in self.nodes:
            has_parent.update(node_children(node))
        if self.root in has_parent:
            raise CircuitStructureError("root must have no parents")

    # -- scopes ----------------------------------------------------------

    def scopes(self) -> dict[int, tuple[frozenset[int], frozenset[int]]]:
        """Per node: (scope as leaf-function ids, dependency-scope as variable ids)."""
        if self._scopes is None:
            out = {}
            for node in self.nodes:
                if isinstance(node, LeafNode):
                    f = self.leaf_functions[node.leaf_function]
                    out[node.id] = (frozenset([f.id]), frozenset([f.variable]))
                elif isinstance(node, ConstantNode):
                    out[node.id] = (frozenset(), frozenset())
                else:
                    fs: set[int] = set()
                    vs: set[int] = set()
                    for c in node.children:
                        cf, cv = out[c]
                        fs |= cf
                        vs |= cv
                    out[node.id] = (frozenset(fs), frozenset(vs))
            self._scopes = out
        return self._scopes

    def dependency_scope(self, node: int | None = None) -> frozenset[int]:
        """Variable ids a node's output depends on (default: the root)."""
        return self.scopes()[self.root if node is None else node][1]

    def reachable(self, node: int | None = None) -> frozenset[int]:
        """Node ids in the subcircuit rooted at `node` (default: the root)."""
        start = self.root if node is None else node
        seen = {start}
        stack = [start]
        while stack:
            for c in node_children(self.nodes[stack.pop()]):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return frozenset(seen)

    # -- metrics ---------------------------------------------------------

    def metrics(self) -> CircuitMetrics:
        depth = [0] * len(self.nodes)
        pdepth = [0] * len(self.nodes)
        out_degree = [0] * len(self.nodes)
        for node in self.nodes:
            kids = node_children(node)
            depth[node.id] = 1 + max((depth[c] for c in kids), default=0)
            pdepth[node.id] = (1 if isinstance(node, ProductNode) else 0) + max(
                (pdepth[c] for c in kids), default=0
            )
            for c in kids:
                out_degree[c] += 1
        return CircuitMetrics(
            size=len(self.nodes),
            depth=max(depth),
            product_depth=max(pdepth),
            is_formula=all(d <= 1 for d in out_degree),
        )

    # -- evaluation ------------------------------------------------------

    def _eval_plan(self):
        # Flat per-node instruction list with integral Fractions unwrapped to
        # ints; this is the hot path for exhaustive enumeration.
        if self._plan is None:
            plan = []
            for node in self.nodes:
                if isinstance(node, LeafNode):
                    f = self.leaf_functions[node.leaf_function]
                    plan.append(("leaf", f.variable, {k: _fast(v) for k, v in f.table.items()}))
                elif isinstance(node, ConstantNode):
                    plan.append(("const", _fast(node.value), None))
                elif isinstance(node, SumNode):
                    plan.append(("sum", list(zip(node.children, map(_fast, node.weights))), None))
                else:
                    plan.append(("prod", node.children, None))
            self._plan = plan
        return self._plan

    def _normalize_assignment(self, assignment) -> Mapping:
        if isinstance(assignment, Mapping):
            return assignment
        if isinstance(assignment, Sequence):
            return dict(enumerate(assignment))
        raise UnknownVariableError("assignment must be a mapping or a sequence")

    def check_assignment(self, assignment) -> Mapping:
        """Validate that an assignment covers the dependency-scope with in-domain values."""
        assignment = self._normalize_assignment(assignment)
        for var in assignment:
            if not (0 <= var < len(self.variables)):
                raise UnknownVariableError(f"unknown variable {var}")
        for var in self.dependency_scope():
            if var not in assignment:
                raise UnknownVariableError(f"assignment misses variable {var}")
            if assignment[var] not in self.variables[var].domain:
                raise DomainError(f"value {assignment[var]} not in domain of variable {var}")
        return assignment

    def evaluate(self, assignment) -> Rational:
        """One bottom-up pass computing the circuit output at a full assignment."""
        assignment = self.check_assignment(assignment)
        values = self.evaluate_leafwise(lambda var, table: table[assignment[var]])
        return values[self.root]

    def evaluate_leafwise(self, leaf_value) -> list:
        """Bottom-up evaluation with leaf node values supplied by `leaf_value(var, table)`.

        This is the common engine behind point evaluation and marginal
        queries (where integrated leaves contribute partial sums).
        Returns the full per-node value list.
        """
        values = [0] * len(self.nodes)
        for i, (kind, a, b) in enumerate(self._eval_plan()):
            if kind == "leaf":
                values[i] = leaf_value(a, b)
            elif kind == "const":
                values[i] = a
            elif kind == "sum":
                acc = 0
                for c, w in a:
                    acc += w * values[c]
                values[i] = acc
            else:
                acc = 1
                for c in a:
                    acc *= values[c]
                values[i] = acc
        return values

    # -- misc ------------------------------------------------------------

    def iter_assignments(self, variables: Iterable[int] | None = None) -> Iterator[dict]:
        """All assignments over the given variables (default: dependency-scope)."""
        if variables is None:
            variables = sorted(self.dependency_scope())
        else:
            variables = list(variables)
        domains = [self.variables[v].domain for v in variables]
        for combo in iter_product(*domains):
            yield dict(zip(variables, combo))

    def structurally_equal(self, other: "Circuit") -> bool:
        return (
            self.variables == other.variables
            and len(self.leaf_functions) == len(other.leaf_functions)
            and all(
                a.id == b.id and a.variable == b.variable and a.table == b.table
                for a, b in zip(self.leaf_functions, other.leaf_functions)
            )
            and self.nodes == other.nodes
            and self.root == other.root
            and self.extended == other.extended
        )

    def __repr__(self):
        m = self.metrics()
        return (
            f"Circuit(n={len(self.variables)}, size={m.size}, depth={m.depth}, "
            f"root={self.root}, extended={self.extended})"
        )


class CircuitBuilder:
    """Incremental circuit construction enforcing topological numbering."""

    def __init__(self, extended: bool = False):
        self.extended = extended
        self._variables: list[VariableSpec] = []
        self._leaf_functions: list[LeafFunction] = []
        self._nodes: list[Node] = []

    def variable(self, domain: Iterable) -> int:
        vid = len(self._variables)
        self._variables.append(VariableSpec(vid, tuple(as_fraction(v) for v in domain)))
        return vid

    def leaf_function(self, variable: int, table: Mapping, name: str | None = None) -> int:
        fid = len(self._leaf_functions)
        tbl = {as_fraction(k): as_fraction(v) for k, v in table.items()}
        self._leaf_functions.append(LeafFunction(fid, variable, tbl, name))
        return fid

    def leaf(self, leaf_function: int) -> int:
        nid = len(self._nodes)
        self._nodes.append(LeafNode(nid, leaf_function))
        return nid

    def constant(self, value) -> int:
        nid = len(self._nodes)
        self._nodes.append(ConstantNode(nid, as_fraction(value)))
        return nid

    def sum(self, weighted_children: Iterable[tuple[int, object]]) -> int:
        nid = len(self._nodes)
        pairs = [(c, as_fraction(w)) for c, w in weighted_children]
        self._nodes.append(
            SumNode(nid, tuple(c for c, _ in pairs), tuple(w for _, w in pairs))
        )
        return nid

    def product(self, children: Iterable[int]) -> int:
        nid = len(self._nodes)
        self._nodes.append(ProductNode(nid, tuple(children)))
        return nid

    def build(self, root: int) -> Circuit:
        return Circuit(self._variables, self._leaf_functions, self._nodes, root, self.extended)


# -- JSON interchange ------------------------------------------------------


def to_json_dict(circuit: Circuit) -> dict:
    nodes = []
    for node in circuit.nodes:
        if isinstance(node, LeafNode):
            nodes.append({"id": node.id, "kind": "leaf", "leaf_function": node.leaf_function})
        elif isinstance(node, ConstantNode):
            nodes.append({"id": node.id, "kind": "constant", "value": format_rational(node.value)})
        elif isinstance(node, SumNode):
            nodes.append(
                {
                    "id": node.id,
                    "kind": "sum",
                    "children": list(node.children),
                    "weights": [format_rational(w) for w in node.weights],
                }
            )
        else:
            nodes.append({"id": node.id, "kind": "product", "children": list(node.children)})
    return {
        "variables": [
            {"id": v.id, "domain": [format_rational(x) for x in v.domain]}
            for v in circuit.variables
        ],
        "leaf_functions": [
            {
                "id": f.id,
                "variable": f.variable,
                "table": {
                    format_rational(k): format_rational(f.table[k])
                    for k in circuit.variables[f.variable].domain
                },
                **({"name": f.name} if f.name else {}),
            }
            for f in circuit.leaf_functions
        ],
        "nodes": nodes,
        "root": circuit.root,
        "extended": circuit.extended,
    }


def from_json_dict(doc: dict) -> Circuit:
    try:
        extended = bool(doc.get("extended", False))
        variables = [
            VariableSpec(v["id"], tuple(as_fraction(x) for x in v["domain"]))
            for v in doc["variables"]
        ]
        leaf_functions = [
            LeafFunction(
                f["id"],
                f["variable"],
                {as_fraction(k): as_fraction(v) for k, v in f["table"].items()},
                f.get("name"),
            )
            for f in doc["leaf_functions"]
        ]
        nodes: list[Node] = []
        for nd in doc["nodes"]:
            kind = nd["kind"]
            if kind == "leaf":
                nodes.append(LeafNode(nd["id"], nd["leaf_function"]))
            elif kind == "constant":
                nodes.append(ConstantNode(nd["id"], as_fraction(nd["value"])))
            elif kind == "sum":
                nodes.append(
                    SumNode(
                        nd["id"],
                        tuple(nd["children"]),
                        tuple(as_fraction(w) for w in nd["weights"]),
                    )
                )
            elif kind == "product":
                nodes.append(ProductNode(nd["id"], tuple(nd["children"])))
            else:
                raise SerializationError(f"unknown node kind {kind!r}")
        root = doc["root"]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise SerializationError(f"malformed circuit document: {exc}") from exc
    return Circuit(variables, leaf_functions, nodes, root, extended)


def serialize(circuit: Circuit, indent: int | None = None) -> str:
    return json.dumps(to_json_dict(circuit), indent=indent, sort_keys=True)


def deserialize(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SerializationError("circuit document must be a JSON object")
    return from_json_dict(doc)
