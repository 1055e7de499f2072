"""
Ordering service: sharp partial order, identified set, tiers, topological
sorts, directed paths and exports.
"""
import logging
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from welfare_order import settings
from welfare_order.errors import ConsistencyError, InvalidInputError
from welfare_order.models.ordering import GapMatrix, PartialOrder, TopoSortList

logger = logging.getLogger(__name__)

EXACT_COUNT_LIMIT = 20
PATH_CAP = 100_000


def build_partial_order(
    gaps: GapMatrix, eps_sign: Optional[float] = None, labels: Sequence[str] = ()
) -> PartialOrder:
    """build_partial_order
    Edge k -> k' iff L_{k,k'} > eps_sign. Equal welfare never yields an edge.

    Raises:
        ConsistencyError: the edges contain a cycle
    """
    eps_sign = settings.EPS_SIGN if eps_sign is None else eps_sign
    order = PartialOrder(adjacency=gaps.lower > eps_sign, epsilon=eps_sign, labels=tuple(labels))
    topological_order(order)
    logger.info("Partial order has %d edges over %d regimes", len(order.edges), order.size)
    return order


def topological_order(order: PartialOrder) -> List[int]:
    """topological_order
    Kahn's algorithm, smallest available vertex first.

    Raises:
        ConsistencyError: carrying one cycle when the graph is not acyclic
    """
    in_degree = order.adjacency.sum(axis=0).astype(int)
    available = sorted(v for v in order.vertices if in_degree[v - 1] == 0)
    result = []
    while available:
        vertex = available.pop(0)
        result.append(vertex)
        for successor in order.successors(vertex):
            in_degree[successor - 1] -= 1
            if in_degree[successor - 1] == 0:
                available.append(successor)
                available.sort()
    if len(result) < order.size:
        cycle = _find_cycle(order, set(order.vertices) - set(result))
        raise ConsistencyError(f"welfare order contains the cycle {cycle}", cycle=cycle)
    return result


def _find_cycle(order: PartialOrder, candidates: Set[int]) -> List[int]:
    # Every vertex Kahn could not place has a predecessor among the unplaced ones.
    start = min(candidates)
    path = [start]
    seen = {start: 0}
    vertex = start
    while True:
        vertex = next(u for u in order.predecessors(vertex) if u in candidates)
        if vertex in seen:
            cycle = path[seen[vertex]:] + [vertex]
            return cycle[::-1]
        seen[vertex] = len(path)
        path.append(vertex)


def identified_set(order: PartialOrder) -> List[int]:
    """identified_set
    Maximal elements: regimes without an incoming edge.
    """
    incoming = order.adjacency.any(axis=0)
    return [v for v in order.vertices if not incoming[v - 1]]


def nth_best_tiers(order: PartialOrder) -> List[List[int]]:
    """nth_best_tiers
    Peel maximal elements repeatedly; tier n holds the n-th best regimes.
    """
    remaining = set(order.vertices)
    tiers = []
    while remaining:
        tier = sorted(
            v for v in remaining if not any(order.adjacency[u - 1, v - 1] for u in remaining)
        )
        if not tier:
            raise ConsistencyError("no maximal element left; the order is cyclic")
        tiers.append(tier)
        remaining -= set(tier)
    return tiers


def count_topological_sorts(order: PartialOrder) -> int:
    """count_topological_sorts
    Exact number of linear extensions by dynamic programming over subsets.

    Raises:
        InvalidInputError: more than EXACT_COUNT_LIMIT vertices
    """
    size = order.size
    if size > EXACT_COUNT_LIMIT:
        raise InvalidInputError(f"exact counting supports at most {EXACT_COUNT_LIMIT} regimes")
    predecessors = [0] * size
    for source, target in order.edges:
        predecessors[target - 1] |= 1 << (source - 1)
    ways = [0] * (1 << size)
    ways[0] = 1
    for placed in range(1 << size):
        if not ways[placed]:
            continue
        for vertex in range(size):
            bit = 1 << vertex
            if not placed & bit and predecessors[vertex] & placed == predecessors[vertex]:
                ways[placed | bit] += ways[placed]
    return ways[(1 << size) - 1]


def topological_sorts(order: PartialOrder, cap: Optional[int] = None) -> TopoSortList:
    """topological_sorts
    Enumerate linear extensions by in-degree peeling with backtracking.

    Args:
        order (PartialOrder): Acyclic order
        cap (int, optional): Maximal number of sorts listed. Defaults to settings.SORT_CAP.

    Returns:
        TopoSortList: Sorts in lexicographic order, truncation flag, exact count
    """
    cap = settings.SORT_CAP if cap is None else cap
    in_degree = order.adjacency.sum(axis=0).astype(int)
    sorts: List[Tuple[int, ...]] = []
    current: List[int] = []
    stopped = False

    def extend():
        nonlocal stopped
        if stopped:
            return
        if len(current) == order.size:
            if len(sorts) >= cap:
                stopped = True
                return
            sorts.append(tuple(current))
            return
        for vertex in order.vertices:
            if in_degree[vertex - 1] != 0 or vertex in current:
                continue
            current.append(vertex)
            for successor in order.successors(vertex):
                in_degree[successor - 1] -= 1
            extend()
            for successor in order.successors(vertex):
                in_degree[successor - 1] += 1
            current.pop()
            if stopped:
                return

    extend()
    count = count_topological_sorts(order) if order.size <= EXACT_COUNT_LIMIT else None
    truncated = stopped or (count is not None and count > len(sorts))
    return TopoSortList(sorts=tuple(sorts), truncated=truncated, count_exact=count, cap=cap)


def is_topological_sort(order: PartialOrder, sequence: Sequence[int]) -> bool:
    """is_topological_sort
    Whether `sequence` lists every regime once and respects every edge.
    """
    if sorted(sequence) != list(order.vertices):
        return False
    position = {vertex: rank for rank, vertex in enumerate(sequence)}
    return all(position[source] < position[target] for source, target in order.edges)


def transitive_reduction(order: PartialOrder) -> PartialOrder:
    """transitive_reduction
    Drop every edge implied by a longer path.
    """
    reach = transitive_closure(order)
    adjacency = order.adjacency.copy()
    for source, target in order.edges:
        for middle in order.successors(source):
            if middle != target and reach[middle - 1, target - 1]:
                adjacency[source - 1, target - 1] = False
                break
    return PartialOrder(adjacency=adjacency, epsilon=order.epsilon, labels=order.labels)


def transitive_closure(order: PartialOrder) -> np.ndarray:
    reach = order.adjacency.copy()
    for middle in range(order.size):
        reach |= np.outer(reach[:, middle], reach[middle, :])
    return reach


def directed_paths(order: PartialOrder, cap: int = PATH_CAP) -> List[Tuple[int, ...]]:
    """directed_paths
    Maximal directed paths of the transitive reduction, from each source to a
    sink. Isolated regimes are one-vertex paths. At most `cap` paths per source.
    """
    reduced = transitive_reduction(order)
    paths: List[Tuple[int, ...]] = []
    sources = identified_set(reduced)
    for source in sources:
        found = 0
        stack = [(source,)]
        while stack and found < cap:
            path = stack.pop()
            successors = reduced.successors(path[-1])
            if not successors:
                paths.append(path)
                found += 1
                continue
            for successor in reversed(successors):
                stack.append(path + (successor,))
    return paths


def identified_set_via_paths(order: PartialOrder) -> List[int]:
    """identified_set_via_paths
    Initial vertices over all maximal directed paths.

    Raises:
        ConsistencyError: result differs from identified_set
    """
    initials = sorted({path[0] for path in directed_paths(order)})
    maximal = identified_set(order)
    if initials != maximal:
        raise ConsistencyError(
            f"path characterization {initials} differs from maximal elements {maximal}"
        )
    return initials


def transitivity_violations(order: PartialOrder, gaps: GapMatrix) -> List[Tuple[int, int, int]]:
    """transitivity_violations
    Triples a -> b -> c of the order whose L_{a,c} is not strictly positive.
    """
    violations = []
    for a, b in order.edges:
        for c in order.successors(b):
            if c != a and gaps.lower[a - 1, c - 1] <= 0.0:
                violations.append((a, b, c))
    if violations:
        logger.warning("Gap bounds violate transitivity on %d triples", len(violations))
    return violations


def to_dot(order: PartialOrder, name: str = "welfare_order") -> str:
    """to_dot
    Graphviz digraph of the transitive reduction.
    """
    reduced = transitive_reduction(order)
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    for vertex in order.vertices:
        lines.append(f'  r{vertex} [label="{order.labels[vertex - 1]}"];')
    for source, target in reduced.edges:
        lines.append(f"  r{source} -> r{target};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def check_antisymmetry(gaps: GapMatrix, tolerance: float) -> Dict[Tuple[int, int], float]:
    """Pairs whose U_{k,k'} + L_{k',k} exceeds `tolerance` in absolute value."""
    residual = gaps.upper + gaps.lower.T
    offending = np.argwhere(np.abs(residual) > tolerance)
    return {(int(r) + 1, int(c) + 1): float(residual[r, c]) for r, c in offending}


def build_report(order: PartialOrder, gaps: GapMatrix, sort_cap: Optional[int] = None) -> Dict:
    """build_report
    Ordering fields of the JSON report: edges, identified set, tiers, sorts,
    maximal paths, the gap matrices and the transitivity audit.

    Raises:
        ConsistencyError: the three characterizations of the identified set disagree
    """
    sorts = topological_sorts(order, sort_cap)
    maximal = identified_set_via_paths(order)
    if sorts.sorts and not sorts.truncated and sorted(sorts.initial_vertices) != maximal:
        raise ConsistencyError(
            f"sort initial vertices {sorted(sorts.initial_vertices)} differ from {maximal}"
        )
    return {
        "epsilon": order.epsilon,
        "lower": gaps.lower.tolist(),
        "upper": gaps.upper.tolist(),
        "edges": [list(edge) for edge in order.edges],
        "identified_set": maximal,
        "tiers": nth_best_tiers(order),
        "sorts": [list(sort) for sort in sorts.sorts],
        "sorts_truncated": sorts.truncated,
        "sort_count": sorts.count_exact,
        "paths": [list(path) for path in directed_paths(order)],
        "transitivity_violations": [list(v) for v in transitivity_violations(order, gaps)],
    }
