"""Tests for pipelined short-range SSSP and distributed Bellman-Ford."""
from fractions import Fraction

import pytest

from algorithms.pipelined import (
    PipelineEnvelope,
    PipelineSchedule,
    ScheduleMode,
    ceil_sqrt,
    default_delta_cap,
    distributed_bellman_ford,
    multi_source_pipelined,
    rational_sqrt,
    short_range,
    short_range_extension,
)
from congest.errors import InvalidHopBound, InvalidParameter, NegativeCycle, NegativeWeight
from congest.graph import Edge, GeneratorSpec, GraphKind, WeightedGraph, WeightMode, generate, validate
from congest.trees import TreeEntry
from oracle.reference import hop_bounded_apsp
from tests.conftest import A, B, C, D


def table_rows(table, x):
    return {t: table.entry(x, t) for (s, t) in table.dist if s == x}


def tree_rows(tree):
    return {v: (e.dist, e.hops, e.parent) for v, e in tree.entries.items()}


def test_rational_sqrt():
    """Test exact roots of perfect squares and rounding down otherwise."""
    assert rational_sqrt(4) == 2
    assert rational_sqrt(Fraction(9, 4)) == Fraction(3, 2)
    assert rational_sqrt(2) ** 2 <= 2
    assert rational_sqrt(0) == 0
    with pytest.raises(InvalidParameter):
        rational_sqrt(-1)


def test_schedule_keys():
    """Test a pair (d, l) is due in round ceil(d * gamma + l)."""
    schedule = PipelineSchedule.short_range(4, 10)
    assert schedule.gamma == 2
    assert schedule.key(3, 1) == 7
    assert schedule.round_bound == 25
    multi = PipelineSchedule.multi_source(h=4, k=4, delta_cap=16)
    assert multi.gamma == 1


def test_short_range_example(example_graph):
    """Test the 2-hop trees from a and b on the example graph."""
    tree_b, metrics = short_range(example_graph, B, 2)
    assert tree_b.entries[C] == TreeEntry(2, 2, D)
    assert tree_b.entries[D] == TreeEntry(1, 1, B)
    assert A not in tree_b
    assert metrics.counters["late_sends"] == 0

    tree_a, _ = short_range(example_graph, A, 2)
    assert tree_a.entries[C] == TreeEntry(9, 2, B)
    assert tree_a.is_consistent(example_graph)


@pytest.mark.parametrize("h", [1, 2, 3])
def test_frontier_matches_hop_bounded_table(seeded_graphs, h):
    """Test the frontier schedule is exact, including hops and parents."""
    for graph in seeded_graphs:
        table = hop_bounded_apsp(graph, h)
        for x in (0, graph.n - 1):
            tree, metrics = short_range(graph, x, h)
            assert tree_rows(tree) == table_rows(table, x)
            assert metrics.counters["late_sends"] == 0


def test_single_mode_on_unit_path():
    """Test the single-estimate schedule sends once per node on a path."""
    graph = generate(GeneratorSpec(kind=GraphKind.PATH, n=6, weight_low=1, weight_high=1))
    tree, metrics = short_range(graph, 0, 5, mode=ScheduleMode.SINGLE)
    assert {v: e.dist for v, e in tree.entries.items()} == {v: v for v in range(6)}
    assert metrics.max_send_rounds(stream=0) == 1
    assert metrics.counters["late_sends"] == 0


def gnp_instances(count, seed_offset=0):
    for seed in range(seed_offset, seed_offset + count):
        yield generate(GeneratorSpec(
            kind=GraphKind.GNP,
            n=10 + (seed * 7) % 51,
            edge_probability=(0.1, 0.3, 0.6)[seed % 3],
            weight_low=0,
            weight_high=10,
            zero_fraction=0.2,
            seed=seed,
        ))


def test_ceil_sqrt():
    """Test the integer square root rounds up."""
    assert ceil_sqrt(0) == 0
    assert ceil_sqrt(16) == 4
    assert ceil_sqrt(17) == 5
    assert ceil_sqrt(9, 4) == 2
    assert ceil_sqrt(10, 4) == 2
    assert ceil_sqrt(17, 4) == 3


def test_envelope_values():
    """Test the single- and multi-source bounds."""
    single = PipelineEnvelope.short_range(h=4, delta_cap=10)
    assert single == PipelineEnvelope(rounds=25, sends=2, congestion=2)
    multi = PipelineEnvelope.multi_source(h=4, k=4, delta_cap=16)
    assert multi == PipelineEnvelope(rounds=21, sends=5, congestion=20)


@pytest.mark.parametrize("h", [2, 4, 9, 16])
def test_single_mode_stays_within_envelope(h):
    """Test zero late sends, and rounds, sends and congestion within the single-best bounds."""
    for graph in gnp_instances(6, seed_offset=h):
        envelope = PipelineEnvelope.short_range(h, default_delta_cap(graph))
        tree, metrics = short_range(graph, 0, h, mode=ScheduleMode.SINGLE)
        assert metrics.counters["late_sends"] == 0
        assert metrics.rounds <= envelope.rounds
        assert metrics.max_send_rounds(stream=0) <= ceil_sqrt(h)
        assert metrics.congestion() <= ceil_sqrt(h)
        assert all(envelope.check(metrics).values())
        assert tree.entries[0].dist == 0


@pytest.mark.parametrize("k", [2, 5, 10])
def test_multi_source_single_mode_stays_within_envelope(k):
    """Test rounds <= ceil(sqrt(dhk)) + h + 1 and per-source sends <= ceil(sqrt(dh/k)) + 1."""
    h = 4
    for graph in gnp_instances(4, seed_offset=10 * k):
        sources = range(min(k, graph.n))
        delta = max(1, default_delta_cap(graph))
        _, metrics = multi_source_pipelined(graph, sources, h, mode=ScheduleMode.SINGLE)
        assert metrics.counters["late_sends"] == 0
        assert metrics.rounds <= ceil_sqrt(delta * h * k) + h + 1
        for x in sources:
            assert metrics.congestion(stream=x) <= ceil_sqrt(delta * h, k) + 1
        assert all(PipelineEnvelope.multi_source(h, k, delta).check(metrics).values())


def test_frontier_mode_reports_envelope_overrun():
    """Test the flags pick up a frontier run that sends more than the single-best bound."""
    # node 1 hears (10, 1), (5, 2) and (0, 3); none dominates another
    graph = validate(WeightedGraph(n=5, edges=(
        Edge(0, 1, 10), Edge(0, 2, 0), Edge(2, 1, 5), Edge(2, 3, 0), Edge(3, 1, 0), Edge(1, 4, 0),
    )))
    envelope = PipelineEnvelope.short_range(4, default_delta_cap(graph))

    _, frontier = short_range(graph, 0, 4, mode=ScheduleMode.FRONTIER)
    flags = envelope.check(frontier)
    assert frontier.congestion(stream=0) == 3
    assert flags["late_sends_zero"]
    assert flags["rounds_within_envelope"]
    assert not flags["sends_within_envelope"]
    assert not flags["congestion_within_envelope"]

    _, single = short_range(graph, 0, 4, mode=ScheduleMode.SINGLE)
    assert single.congestion(stream=0) == 1
    assert all(envelope.check(single).values())


def test_delta_cap_drops_far_nodes(example_graph):
    """Test estimates above the distance cap are not propagated."""
    tree, _ = short_range(example_graph, B, 2, delta_cap=1)
    assert set(tree.nodes()) == {B, D}


def test_short_range_rejects_bad_input(example_graph):
    """Test hop bound and weight-mode preconditions."""
    with pytest.raises(InvalidHopBound):
        short_range(example_graph, A, 0)
    negative = validate(WeightedGraph(
        n=2, edges=(Edge(0, 1, -1),), weight_mode=WeightMode.ARBITRARY
    ))
    with pytest.raises(NegativeWeight):
        short_range(negative, 0, 1)


def test_extension_from_seeds(example_graph):
    """Test seeded nodes start at hop 0 and c improves through d."""
    entries, metrics = short_range_extension(example_graph, A, 1, seeds={B: 1, D: 2})
    assert entries[A] == TreeEntry(0, 0, None)
    assert entries[B] == TreeEntry(1, 0, None)
    assert entries[D] == TreeEntry(2, 0, None)
    assert entries[C] == TreeEntry(3, 1, D)
    assert metrics.rounds > 0


def test_extension_doubles_hop_reach(seeded_graphs):
    """Test extending h-hop distances by h more hops gives the 2h-hop distances."""
    h = 2
    for graph in seeded_graphs:
        short = hop_bounded_apsp(graph, h, [0])
        long = hop_bounded_apsp(graph, 2 * h, [0])
        seeds = {t: short.distance(0, t) for (s, t) in short.dist if s == 0}
        entries, _ = short_range_extension(graph, 0, h, seeds)
        for t in range(graph.n):
            expected = long.distance(0, t)
            if t in entries:
                assert entries[t].dist == expected
            else:
                assert (0, t) not in long.dist


def test_multi_source_matches_table(seeded_graphs):
    """Test all-sources pipelined trees equal the hop-bounded table."""
    for graph in seeded_graphs:
        table = hop_bounded_apsp(graph, 3)
        trees, _ = multi_source_pipelined(graph, range(graph.n), 3)
        for x in range(graph.n):
            assert tree_rows(trees[x]) == table_rows(table, x)


def test_multi_source_requires_sources(example_graph):
    """Test an empty source set is rejected."""
    with pytest.raises(InvalidParameter):
        multi_source_pipelined(example_graph, [], 2)


def test_distributed_bellman_ford_example(example_graph):
    """Test synchronous relaxation gives the 2-hop entries in h rounds."""
    trees, metrics = distributed_bellman_ford(example_graph, [A, B], 2)
    assert trees[A].entries[C] == TreeEntry(9, 2, B)
    assert trees[B].entries[C] == TreeEntry(2, 2, D)
    assert metrics.rounds <= 3


def test_distributed_bellman_ford_negative_weights():
    """Test negative edges and negative-cycle detection."""
    graph = validate(WeightedGraph(
        n=3, edges=(Edge(0, 1, 5), Edge(0, 2, 2), Edge(2, 1, -4)),
        weight_mode=WeightMode.ARBITRARY,
    ))
    trees, _ = distributed_bellman_ford(graph, [0], 2)
    assert trees[0].entries[1].dist == -2

    cycle = validate(WeightedGraph(
        n=3, edges=(Edge(0, 1, 1), Edge(1, 2, -3), Edge(2, 0, 1)),
        weight_mode=WeightMode.ARBITRARY,
    ))
    with pytest.raises(NegativeCycle):
        distributed_bellman_ford(cycle, [0], 3)
