"""Tests for the graph model, generators and the edge-list format."""
import pytest

from congest.errors import (
    DuplicateEdge,
    GraphFormatError,
    NegativeWeightInNonnegativeMode,
    NodeOutOfRange,
    SelfLoop,
)
from congest.graph import (
    Edge,
    GeneratorSpec,
    GraphKind,
    WeightedGraph,
    WeightMode,
    generate,
    parse_graph,
    serialize_graph,
    underlying_undirected,
    validate,
    write_graph,
    read_graph,
)
from tests.conftest import A, B, C, D


def test_example_fixture_loads(example_graph):
    """Test the fixture parses into the expected directed graph."""
    assert example_graph.n == 4
    assert example_graph.directed
    assert example_graph.weight(A, B) == 1
    assert example_graph.weight(B, C) == 8
    assert example_graph.weight(B, D) == 1
    assert example_graph.weight(D, C) == 1
    assert example_graph.weight(C, B) is None
    assert example_graph.max_weight == 8


def test_underlying_undirected_example(example_graph):
    """Test communication adjacency ignores edge direction."""
    adjacency = underlying_undirected(example_graph)
    assert adjacency[A] == (B,)
    assert adjacency[B] == (A, C, D)
    assert adjacency[C] == (B, D)
    assert adjacency[D] == (B, C)


def test_undirected_graph_exposes_both_arcs(path3):
    """Test an undirected edge is usable in both directions."""
    assert path3.has_arc(0, 1)
    assert path3.has_arc(1, 0)
    assert path3.in_edges(1) == ((0, 1), (2, 1))
    assert len(path3.arcs()) == 4


@pytest.mark.parametrize("edges,mode,error", [
    ((Edge(0, 0, 1),), WeightMode.NONNEGATIVE, SelfLoop),
    ((Edge(0, 5, 1),), WeightMode.NONNEGATIVE, NodeOutOfRange),
    ((Edge(0, 1, 1), Edge(0, 1, 2)), WeightMode.NONNEGATIVE, DuplicateEdge),
    ((Edge(0, 1, -1),), WeightMode.NONNEGATIVE, NegativeWeightInNonnegativeMode),
])
def test_validate_rejects_invalid_graphs(edges, mode, error):
    """Test each structural invariant is enforced."""
    with pytest.raises(error):
        validate(WeightedGraph(n=3, edges=edges, weight_mode=mode))


def test_validate_allows_negative_weight_in_arbitrary_mode():
    """Test arbitrary mode accepts negative weights."""
    graph = validate(WeightedGraph(
        n=2, edges=(Edge(0, 1, -3),), weight_mode=WeightMode.ARBITRARY
    ))
    assert graph.has_negative_weight


def test_undirected_duplicate_in_reverse_orientation():
    """Test {u, v} listed twice in an undirected graph is a duplicate."""
    with pytest.raises(DuplicateEdge):
        validate(WeightedGraph(n=2, edges=(Edge(0, 1, 1), Edge(1, 0, 1)), directed=False))


def test_parse_rejects_malformed_input():
    """Test parse errors report the offending line."""
    with pytest.raises(GraphFormatError, match="line 2"):
        parse_graph("p 2 1 1 nn\nx 0 1 1\n")
    with pytest.raises(GraphFormatError, match="missing header"):
        parse_graph("# nothing here\n")
    with pytest.raises(GraphFormatError, match="declares 2 edges"):
        parse_graph("p 3 2 1 nn\ne 0 1 1\n")
    with pytest.raises(GraphFormatError):
        parse_graph("p 2 1 1 nn\ne 0 one 1\n")


def test_serialize_parse_preserves_graph(example_graph):
    """Test the written form reads back to the same graph."""
    assert parse_graph(serialize_graph(example_graph, ["comment"])) == example_graph


def test_write_and_read_graph(tmp_path, example_graph):
    """Test graph files round-trip through disk."""
    path = tmp_path / "out" / "g.graph"
    write_graph(example_graph, str(path))
    assert read_graph(str(path)).fingerprint() == example_graph.fingerprint()


def test_generate_path():
    """Test a path of 4 nodes with unit weights has 3 edges."""
    graph = generate(GeneratorSpec(kind=GraphKind.PATH, n=4, weight_low=1, weight_high=1))
    assert [(e.u, e.v, e.w) for e in graph.edges] == [(0, 1, 1), (1, 2, 1), (2, 3, 1)]


def test_generate_cycle_closes():
    """Test the cycle generator adds the closing edge."""
    graph = generate(GeneratorSpec(kind=GraphKind.CYCLE, n=5))
    assert graph.m == 5
    assert graph.has_arc(4, 0)


def test_generate_is_deterministic():
    """Test equal seeds produce byte-identical graph files."""
    spec = GeneratorSpec(
        kind=GraphKind.GNP, n=40, edge_probability=0.3, weight_high=10,
        zero_fraction=0.2, seed=7,
    )
    assert serialize_graph(generate(spec)) == serialize_graph(generate(spec))
    other = GeneratorSpec(
        kind=GraphKind.GNP, n=40, edge_probability=0.3, weight_high=10,
        zero_fraction=0.2, seed=8,
    )
    assert generate(spec).fingerprint() != generate(other).fingerprint()


def test_generate_zero_fraction_produces_zero_weights():
    """Test zero_fraction introduces zero-weight edges."""
    graph = generate(GeneratorSpec(n=30, edge_probability=0.5, zero_fraction=0.5, seed=1))
    weights = [e.w for e in graph.edges]
    assert 0 in weights
    assert all(0 <= w <= 10 for w in weights)


def test_generate_layered_reaches_every_layer():
    """Test each layered node links forward to at least one node."""
    graph = generate(GeneratorSpec(kind=GraphKind.LAYERED, n=9, edge_probability=0.0, seed=3))
    width = 3
    for u in range(9 - width):
        assert graph.out_edges(u), f"node {u} has no forward edge"


def test_generator_spec_problems():
    """Test invalid generator flags are reported."""
    assert GeneratorSpec().problems() == []
    problems = GeneratorSpec(n=0, edge_probability=1.5, weight_low=5, weight_high=1).problems()
    assert len(problems) == 3
    assert GeneratorSpec(weight_low=-2).problems() == [
        "negative weights require arbitrary weight mode"
    ]
