"""
Tests for the partial order, identified set, tiers, sorts and paths
"""
import numpy as np
import pytest

from welfare_order.errors import ConsistencyError, InvalidInputError
from welfare_order.models.ordering import GapMatrix, PartialOrder
from welfare_order.utils.ordering import (
    build_partial_order,
    build_report,
    count_topological_sorts,
    directed_paths,
    identified_set,
    identified_set_via_paths,
    is_topological_sort,
    nth_best_tiers,
    to_dot,
    topological_order,
    topological_sorts,
    transitive_reduction,
    transitivity_violations,
)

# Two unrelated best regimes feeding one chain
FORKED = PartialOrder.from_edges(4, [(1, 2), (4, 2), (2, 3)])
# One best regime, two incomparable middles, one worst
DIAMOND = PartialOrder.from_edges(4, [(1, 2), (1, 3), (2, 4), (3, 4)])


def test_forked_order():
    """test_forked_order
    Identified set, tiers, sorts and paths of the forked order
    """
    assert identified_set(FORKED) == [1, 4]
    assert nth_best_tiers(FORKED) == [[1, 4], [2], [3]]
    sorts = topological_sorts(FORKED)
    assert sorts.sorts == ((1, 4, 2, 3), (4, 1, 2, 3))
    assert not sorts.truncated
    assert sorts.count_exact == 2
    assert sorted(directed_paths(FORKED)) == [(1, 2, 3), (4, 2, 3)]
    assert identified_set_via_paths(FORKED) == [1, 4]


def test_is_topological_sort():
    """test_is_topological_sort
    A sort lists every regime once and respects every edge
    """
    assert is_topological_sort(FORKED, (1, 4, 2, 3))
    assert not is_topological_sort(FORKED, (1, 2, 4, 3))
    assert not is_topological_sort(FORKED, (1, 4, 2))


def test_diamond_order():
    """test_diamond_order
    A single best regime with two incomparable successors
    """
    assert identified_set(DIAMOND) == [1]
    assert nth_best_tiers(DIAMOND) == [[1], [2, 3], [4]]
    assert topological_sorts(DIAMOND).sorts == ((1, 2, 3, 4), (1, 3, 2, 4))
    assert sorted(directed_paths(DIAMOND)) == [(1, 2, 4), (1, 3, 4)]


def test_empty_order_sort_cap():
    """test_empty_order_sort_cap
    Eight incomparable regimes have 8! sorts; the listing stops at the cap
    """
    order = PartialOrder.from_edges(8, [])
    assert identified_set(order) == list(range(1, 9))
    assert count_topological_sorts(order) == 40320
    sorts = topological_sorts(order, cap=1000)
    assert len(sorts.sorts) == 1000
    assert sorts.truncated
    assert sorts.count_exact == 40320
    assert sorts.sorts[0] == tuple(range(1, 9))
    assert len(directed_paths(order)) == 8


def test_transitive_reduction():
    """test_transitive_reduction
    Shortcut edges implied by a longer path are dropped
    """
    order = PartialOrder.from_edges(3, [(1, 2), (2, 3), (1, 3)])
    assert transitive_reduction(order).edges == [(1, 2), (2, 3)]
    assert directed_paths(order) == [(1, 2, 3)]


def test_edges_need_strict_positivity():
    """test_edges_need_strict_positivity
    Only lower gap bounds above the threshold become edges
    """
    lower = np.array([[0.0, 0.2, 1e-9], [-0.5, 0.0, 0.0], [-0.1, -0.3, 0.0]])
    order = build_partial_order(GapMatrix.from_lower(lower), eps_sign=1e-7)
    assert order.edges == [(1, 2)]
    assert identified_set(order) == [1, 3]


def test_cycle_is_reported():
    """test_cycle_is_reported
    A cyclic edge set raises a consistency error carrying the cycle
    """
    order = PartialOrder.from_edges(3, [(1, 2), (2, 3), (3, 1)])
    with pytest.raises(ConsistencyError) as error:
        topological_order(order)
    cycle = error.value.cycle
    assert cycle[0] == cycle[-1]
    assert sorted(set(cycle)) == [1, 2, 3]


def test_topological_order_smallest_first():
    """test_topological_order_smallest_first
    Kahn's algorithm takes the smallest available regime
    """
    assert topological_order(FORKED) == [1, 4, 2, 3]


def test_exact_count_limit():
    """test_exact_count_limit
    Exact counting is refused for large orders
    """
    with pytest.raises(InvalidInputError):
        count_topological_sorts(PartialOrder.from_edges(21, []))


def test_transitivity_violations():
    """test_transitivity_violations
    a -> b -> c with a non-positive L_{a,c} is flagged
    """
    lower = np.zeros((3, 3))
    lower[0, 1] = 0.3
    lower[1, 2] = 0.3
    gaps = GapMatrix.from_lower(lower)
    order = PartialOrder.from_edges(3, [(1, 2), (2, 3)])
    assert transitivity_violations(order, gaps) == [(1, 2, 3)]


def test_report_fields():
    """test_report_fields
    The ordering report collects every characterization of the order
    """
    lower = np.zeros((4, 4))
    for source, target in [(1, 2), (4, 2), (2, 3), (1, 3), (4, 3)]:
        lower[source - 1, target - 1] = 0.1
    gaps = GapMatrix.from_lower(lower)
    order = build_partial_order(gaps, eps_sign=1e-7)
    report = build_report(order, gaps)
    assert report["identified_set"] == [1, 4]
    assert report["tiers"] == [[1, 4], [2], [3]]
    assert report["sorts"] == [[1, 4, 2, 3], [4, 1, 2, 3]]
    assert sorted(report["paths"]) == [[1, 2, 3], [4, 2, 3]]
    assert report["sort_count"] == 2
    assert report["transitivity_violations"] == []


def test_dot_export():
    """test_dot_export
    DOT output draws the transitive reduction
    """
    dot = to_dot(PartialOrder.from_edges(3, [(1, 2), (2, 3), (1, 3)]))
    assert dot.startswith("digraph welfare_order {")
    assert "r1 -> r2;" in dot
    assert "r1 -> r3;" not in dot
