"""Tests for approximate APSP with zero-weight edges."""
import math
from fractions import Fraction

import pytest

from algorithms.approx import (
    ApproxConfig,
    approx_apsp,
    as_fraction,
    exact_subroutine,
    scale_weights,
    zero_reachability,
)
from congest.distance import INF
from congest.errors import EpsilonTooSmall
from congest.graph import Edge, WeightedGraph, validate
from oracle.reference import DistanceMatrix, dijkstra_apsp, zero_weight_closure


@pytest.fixture
def zero_chain():
    """u -> v with weight 0, v -> x with weight 2."""
    return validate(WeightedGraph(n=3, edges=(Edge(0, 1, 0), Edge(1, 2, 2))))


def assert_sandwich(graph, matrix, epsilon):
    exact = dijkstra_apsp(graph)
    for u in range(graph.n):
        for v in range(graph.n):
            d = exact.get(u, v)
            est = matrix.get(u, v)
            if d is INF:
                assert est is INF
                continue
            assert d <= est <= (1 + epsilon) * d


def test_as_fraction():
    """Test floats go through their decimal form."""
    assert as_fraction(0.1) == Fraction(1, 10)
    assert as_fraction("3/4") == Fraction(3, 4)
    assert ApproxConfig(epsilon=0.5).epsilon == Fraction(1, 2)
    assert ApproxConfig(epsilon=1).subroutine == "exact"


def test_zero_reachability(zero_chain, example_graph):
    """Test zero-weight paths are found and weighted edges ignored."""
    pairs, metrics = zero_reachability(zero_chain)
    assert pairs == {(0, 0), (1, 1), (2, 2), (0, 1)}
    assert metrics.rounds > 0

    reflexive, _ = zero_reachability(example_graph)
    assert reflexive == {(v, v) for v in range(4)}


def test_zero_reachability_is_transitive():
    """Test a zero chain u -> v -> x gives (u, x)."""
    graph = validate(WeightedGraph(n=3, edges=(Edge(0, 1, 0), Edge(1, 2, 0))))
    pairs, _ = zero_reachability(graph)
    assert {(0, 1), (1, 2), (0, 2)} <= pairs
    assert (2, 0) not in pairs


def test_scale_weights(zero_chain):
    """Test zero edges become 1 and others are multiplied by n squared."""
    scaled = scale_weights(zero_chain)
    assert [(e.u, e.v, e.w) for e in scaled.edges] == [(0, 1, 1), (1, 2, 18)]


def test_zero_chain_estimates(zero_chain):
    """Test est(u, x) = 19/9 for the u -> v -> x chain."""
    matrix, phases = approx_apsp(zero_chain, ApproxConfig(epsilon=2))
    assert matrix.get(0, 2) == Fraction(19, 9)
    assert matrix.get(0, 1) == 0
    assert matrix.get(1, 2) == 2
    assert matrix.get(2, 0) is INF
    assert set(phases.rounds_by_phase()) == {"zero-reachability", "scaled-apsp"}


def test_epsilon_must_exceed_three_over_n(zero_chain):
    """Test epsilon <= 3/n is rejected."""
    with pytest.raises(EpsilonTooSmall) as exc_info:
        approx_apsp(zero_chain, ApproxConfig(epsilon=1))
    assert exc_info.value.n == 3


@pytest.mark.parametrize("epsilon", [Fraction(1), Fraction(3, 2)])
def test_sandwich_on_random_graphs(seeded_graphs, epsilon):
    """Test d <= est <= (1 + eps) d on graphs with zero-weight edges."""
    for graph in seeded_graphs:
        matrix, _ = approx_apsp(graph, ApproxConfig(epsilon=epsilon))
        assert_sandwich(graph, matrix, epsilon)
        for u, v in zero_weight_closure(graph):
            assert matrix.get(u, v) == 0


def test_inflated_plugin_keeps_sandwich(seeded_graphs):
    """Test a subroutine off by up to (1 + eps/3) still meets the guarantee."""
    epsilon = Fraction(1)

    def inflated(scaled):
        exact, metrics = exact_subroutine(scaled)
        worse = DistanceMatrix(n=exact.n, sources=exact.sources)
        for (s, t), d in exact.dist.items():
            worse.set(s, t, math.floor(d * (1 + epsilon / 3)))
        return worse, metrics

    for graph in seeded_graphs:
        config = ApproxConfig(epsilon=epsilon, plugin=inflated)
        assert config.subroutine == "plugin"
        matrix, _ = approx_apsp(graph, config)
        assert_sandwich(graph, matrix, epsilon)
