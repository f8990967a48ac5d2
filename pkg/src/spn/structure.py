"""Structural predicates and validity analysis.

Decomposability and completeness are exact scope checks; together with
non-degeneracy pruning they decide strong validity.  A bounded
brute-force oracle checks the marginal-substitution identity literally,
and a CNF reduction produces extended circuits whose validity encodes
unsatisfiability.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product as iter_product

from .circuit import (
    Circuit,
    CircuitBuilder,
    ConstantNode,
    LeafNode,
    ProductNode,
    SumNode,
    node_children,
)
from .errors import (
    DegenerateCircuitError,
    ExtendedCircuitError,
    InstanceTooLargeError,
    SpnError,
    TrivialVariableError,
    ZeroCircuitError,
)
from .polynomial import expand, is_set_multilinear


@dataclass(frozen=True)
class StructureReport:
    decomposable: bool
    decomposability_violations: tuple[int, ...]
    complete: bool
    completeness_violations: tuple[int, ...]
    non_degenerate: bool
    degeneracy_offenders: tuple[int, ...]
    all_variables_nontrivial: bool
    strongly_valid: bool


def _require_monotone(circuit: Circuit):
    if circuit.extended:
        raise ExtendedCircuitError("operation requires a monotone (non-extended) circuit")


def check_decomposable(circuit: Circuit) -> tuple[bool, tuple[int, ...]]:
    """Every product node's children must have pairwise disjoint dependency-scopes."""
    _require_monotone(circuit)
    scopes = circuit.scopes()
    violations = []
    for node in circuit.nodes:
        if isinstance(node, ProductNode):
            seen: set[int] = set()
            for c in node.children:
                dep = scopes[c][1]
                if seen & dep:
                    violations.append(node.id)
                    break
                seen |= dep
    return (not violations, tuple(violations))


def check_complete(circuit: Circuit) -> tuple[bool, tuple[int, ...]]:
    """Every sum node's children must share one dependency-scope."""
    _require_monotone(circuit)
    scopes = circuit.scopes()
    violations = []
    for node in circuit.nodes:
        if isinstance(node, SumNode):
            deps = {scopes[c][1] for c in node.children}
            if len(deps) > 1:
                violations.append(node.id)
    return (not violations, tuple(violations))


def is_dc(circuit: Circuit) -> bool:
    return check_decomposable(circuit)[0] and check_complete(circuit)[0]


def degeneracy_offenders(circuit: Circuit) -> tuple[int, ...]:
    """Node ids carrying a zero weight or computing a zero constant."""
    out = []
    for node in circuit.nodes:
        if isinstance(node, SumNode) and any(w == 0 for w in node.weights):
            out.append(node.id)
        elif isinstance(node, ConstantNode) and node.value == 0:
            out.append(node.id)
    return tuple(out)


def analyze(circuit: Circuit) -> StructureReport:
    dec, dec_v = check_decomposable(circuit)
    com, com_v = check_complete(circuit)
    offenders = degeneracy_offenders(circuit)
    return StructureReport(
        decomposable=dec,
        decomposability_violations=dec_v,
        complete=com,
        completeness_violations=com_v,
        non_degenerate=not offenders,
        degeneracy_offenders=offenders,
        all_variables_nontrivial=all(v.nontrivial for v in circuit.variables),
        strongly_valid=dec and com,
    )


def prune_degenerate(circuit: Circuit) -> Circuit:
    """Remove zero-weight edges, then dead nodes, preserving the output polynomial.

    Drops edges with weight 0, then repeatedly removes non-root nodes with
    no remaining parents and internal nodes with no remaining children,
    removing any product node that was a parent of a removed node.  Raises
    ZeroCircuitError if the root itself is eliminated.
    """
    _require_monotone(circuit)
    n = len(circuit.nodes)
    alive = [True] * n
    sum_edges: dict[int, list[tuple[int, Fraction]]] = {}
    prod_edges: dict[int, list[int]] = {}
    zero_constants = []
    for node in circuit.nodes:
        if isinstance(node, SumNode):
            sum_edges[node.id] = [
                (c, w) for c, w in zip(node.children, node.weights) if w != 0
            ]
        elif isinstance(node, ProductNode):
            prod_edges[node.id] = list(node.children)
        elif isinstance(node, ConstantNode) and node.value == 0:
            # A zero constant computes the zero polynomial; remove it like a
            # dead node so the result is non-degenerate.
            zero_constants.append(node.id)

    def children_of(i: int) -> list[int]:
        node = circuit.nodes[i]
        if isinstance(node, SumNode):
            return [c for c, _ in sum_edges[i]]
        if isinstance(node, ProductNode):
            return prod_edges[i]
        return []

    pending_zero = list(zero_constants)
    changed = True
    while changed:
        changed = False
        parents: dict[int, set[int]] = {i: set() for i in range(n)}
        for i in range(n):
            if alive[i]:
                for c in children_of(i):
                    parents[c].add(i)
        to_kill = set(i for i in pending_zero if alive[i])
        pending_zero = []
        for i in range(n):
            if not alive[i]:
                continue
            node = circuit.nodes[i]
            internal = isinstance(node, (SumNode, ProductNode))
            if i != circuit.root and not parents[i]:
                to_kill.add(i)
            elif internal and not children_of(i):
                to_kill.add(i)
        if to_kill:
            changed = True
            # Removing a node kills product parents outright and drops the
            # corresponding sum edges.
            stack = list(to_kill)
            while stack:
                i = stack.pop()
                if not alive[i]:
                    continue
                alive[i] = False
                for p in list(parents[i]):
                    if not alive[p]:
                        continue
                    if isinstance(circuit.nodes[p], ProductNode):
                        stack.append(p)
                    else:
                        sum_edges[p] = [(c, w) for c, w in sum_edges[p] if c != i]
                        if not sum_edges[p]:
                            stack.append(p)

    if not alive[circuit.root]:
        raise ZeroCircuitError("pruning removed the root: circuit computes the zero polynomial")

    remap: dict[int, int] = {}
    builder_nodes = []
    for i in range(n):
        if not alive[i]:
            continue
        remap[i] = len(builder_nodes)
        node = circuit.nodes[i]
        if isinstance(node, LeafNode):
            builder_nodes.append(LeafNode(remap[i], node.leaf_function))
        elif isinstance(node, ConstantNode):
            builder_nodes.append(ConstantNode(remap[i], node.value))
        elif isinstance(node, SumNode):
            builder_nodes.append(
                SumNode(
                    remap[i],
                    tuple(remap[c] for c, _ in sum_edges[i]),
                    tuple(w for _, w in sum_edges[i]),
                )
            )
        else:
            builder_nodes.append(ProductNode(remap[i], tuple(remap[c] for c in prod_edges[i])))
    return Circuit(
        circuit.variables,
        circuit.leaf_functions,
        builder_nodes,
        remap[circuit.root],
        circuit.extended,
    )


def complete_transform(circuit: Circuit) -> Circuit:
    """Interpose constant-one-function products so every sum node is complete.

    For each sum child whose dependency-scope misses variables of the sum's
    scope, the child is wrapped in a product with constant-1 leaf functions
    of the missing variables.  Evaluation at every assignment is unchanged,
    completeness holds afterwards, decomposability is preserved, and the
    size grows by at most (number of variables) + (total sum fan-in).
    """
    _require_monotone(circuit)
    scopes = circuit.scopes()
    b = CircuitBuilder(extended=circuit.extended)
    for v in circuit.variables:
        b.variable(v.domain)
    for f in circuit.leaf_functions:
        b.leaf_function(f.variable, f.table, f.name)

    one_fn: dict[int, int] = {}
    one_node: dict[int, int] = {}
    wrap_cache: dict[tuple[int, frozenset[int]], int] = {}
    remap: dict[int, int] = {}

    def const_one_node(var: int) -> int:
        if var not in one_node:
            if var not in one_fn:
                domain = circuit.variables[var].domain
                one_fn[var] = b.leaf_function(var, {x: 1 for x in domain}, name=f"one_x{var}")
            one_node[var] = b.leaf(one_fn[var])
        return one_node[var]

    def wrapped(child: int, missing: frozenset[int]) -> int:
        key = (child, missing)
        if key not in wrap_cache:
            extras = [const_one_node(v) for v in sorted(missing)]
            wrap_cache[key] = b.product([remap[child]] + extras)
        return wrap_cache[key]

    for node in circuit.nodes:
        if isinstance(node, LeafNode):
            remap[node.id] = b.leaf(node.leaf_function)
        elif isinstance(node, ConstantNode):
            remap[node.id] = b.constant(node.value)
        elif isinstance(node, ProductNode):
            remap[node.id] = b.product([remap[c] for c in node.children])
        else:
            own_dep = scopes[node.id][1]
            pairs = []
            for c, w in zip(node.children, node.weights):
                missing = own_dep - scopes[c][1]
                pairs.append(((wrapped(c, frozenset(missing)) if missing else remap[c]), w))
            remap[node.id] = b.sum(pairs)
    return b.build(remap[circuit.root])


def check_strong_validity(circuit: Circuit, audit: bool = False) -> bool:
    """Decide strong validity structurally: decomposable and complete.

    Requires a monotone, non-degenerate circuit whose variables all have
    at least two domain values (prune and trim first).  With audit=True the
    output polynomial is expanded and its set-multilinearity is asserted to
    agree (small circuits only).
    """
    _require_monotone(circuit)
    if not all(v.nontrivial for v in circuit.variables):
        raise TrivialVariableError("all variables must have at least two domain values")
    offenders = degeneracy_offenders(circuit)
    if offenders:
        raise DegenerateCircuitError(f"zero weights/constants at nodes {offenders}; prune first")
    result = is_dc(circuit)
    if audit:
        sml = is_set_multilinear(expand(circuit))
        if sml != result:
            raise SpnError(
                f"audit failure: D&C={result} but set-multilinear={sml}"
            )
    return result


# -- brute-force validity oracle --------------------------------------------


def _nonempty_subsets(domain):
    items = list(domain)
    return [
        combo
        for r in range(1, len(items) + 1)
        for combo in combinations(items, r)
    ]


def brute_force_validity(circuit: Circuit, max_vars: int = 4, max_domain: int = 3) -> bool:
    """Check the marginal-substitution identity exhaustively.

    Enumerates every subset I of the root's dependency-scope, every choice
    of non-empty value subsets S_i, and every assignment to the remaining
    variables, comparing the explicit sum of evaluations over the S grid
    against one substituted evaluation where each integrated leaf computes
    its partial table sum.  Extended circuits are allowed.  Variables the
    output does not depend on are excluded from I (integrating over them
    has no circuit-side counterpart).
    """
    dep = sorted(circuit.dependency_scope())
    if len(dep) > max_vars or any(
        len(circuit.variables[v].domain) > max_domain for v in dep
    ):
        raise InstanceTooLargeError(
            f"oracle bound exceeded: n <= {max_vars}, |domain| <= {max_domain}"
        )
    subset_choices = {v: _nonempty_subsets(circuit.variables[v].domain) for v in dep}

    for r in range(1, len(dep) + 1):
        for I in combinations(dep, r):
            rest = [v for v in dep if v not in I]
            rest_domains = [circuit.variables[v].domain for v in rest]
            for s_combo in iter_product(*(subset_choices[v] for v in I)):
                sets = dict(zip(I, s_combo))
                for rest_vals in iter_product(*rest_domains):
                    fixed = dict(zip(rest, rest_vals))
                    lhs = 0
                    for grid_vals in iter_product(*s_combo):
                        point = dict(fixed)
                        point.update(zip(I, grid_vals))
                        lhs += circuit.evaluate(point)
                    rhs = _substituted_evaluate(circuit, sets, fixed)
                    if lhs != rhs:
                        return False
    return True


def _substituted_evaluate(circuit: Circuit, sets: dict, fixed: dict):
    def leaf_value(var, table):
        if var in sets:
            total = 0
            for v in sets[var]:
                total += table[v]
            return total
        return table[fixed[var]]

    return circuit.evaluate_leafwise(leaf_value)[circuit.root]


# -- CNF reduction -----------------------------------------------------------


def cnf_to_extended_spn(clauses: list[list[int]], num_vars: int | None = None) -> Circuit:
    """Reduce a CNF to an extended circuit that is valid iff the CNF is unsatisfiable.

    Clauses are lists of non-zero DIMACS-style literals (variable indices
    start at 1; negative means negated).  Literals become identity/negation
    leaf functions, OR becomes a weight-1 sum, AND a product, and the result
    is multiplied by a guard that vanishes exactly on integrated inputs
    where both literal functions of some variable read as 1.  The output is
    positive at a Boolean assignment iff it satisfies the CNF.
    """
    if not clauses:
        raise SpnError("empty clause list")
    max_ref = max((abs(l) for cl in clauses for l in cl), default=0)
    n = max(max_ref, num_vars or 0)
    if n == 0:
        raise SpnError("CNF references no variables")
    if n > 20:
        raise InstanceTooLargeError("CNF reduction limited to 20 variables")

    b = CircuitBuilder(extended=True)
    pos_nodes, neg_nodes = [], []
    for i in range(n):
        b.variable([0, 1])
    for i in range(n):
        fpos = b.leaf_function(i, {0: 0, 1: 1}, name=f"x{i + 1}")
        fneg = b.leaf_function(i, {0: 1, 1: 0}, name=f"not_x{i + 1}")
        pos_nodes.append(b.leaf(fpos))
        neg_nodes.append(b.leaf(fneg))

    clause_nodes = []
    for cl in clauses:
        if not cl:
            clause_nodes.append(b.constant(0))
            continue
        pairs = []
        for lit in cl:
            if lit == 0 or abs(lit) > n:
                raise SpnError(f"bad literal {lit}")
            node = pos_nodes[lit - 1] if lit > 0 else neg_nodes[-lit - 1]
            pairs.append((node, 1))
        clause_nodes.append(b.sum(pairs))
    formula = clause_nodes[0] if len(clause_nodes) == 1 else b.product(clause_nodes)

    one = b.constant(1)
    guards = []
    for i in range(n):
        both = b.product([pos_nodes[i], neg_nodes[i]])
        guards.append(b.sum([(one, 1), (both, -1)]))
    root = b.product([formula] + guards)
    return b.build(root)


def parse_dimacs(text: str) -> tuple[list[list[int]], int]:
    """Parse DIMACS CNF; returns (clauses, num_vars)."""
    clauses: list[list[int]] = []
    declared = 0
    current: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) < 4 or parts[1] != "cnf":
                raise SpnError(f"bad DIMACS header: {line!r}")
            declared = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(current)
    return clauses, declared


def cnf_satisfiable(clauses: list[list[int]], num_vars: int) -> bool:
    """Decide satisfiability by exhaustive assignment (small instances only)."""
    if num_vars > 20:
        raise InstanceTooLargeError("exhaustive SAT limited to 20 variables")
    for bits in iter_product([False, True], repeat=num_vars):
        ok = True
        for cl in clauses:
            if not any((bits[l - 1] if l > 0 else not bits[-l - 1]) for l in cl):
                ok = False
                break
        if ok:
            return True
    return False
