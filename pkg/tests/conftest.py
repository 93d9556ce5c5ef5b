"""Pytest configuration and fixtures."""
import pytest
import os
from pathlib import Path
import tempfile

from congest.graph import Edge, GeneratorSpec, GraphKind, WeightedGraph, generate, read_graph, validate
from database.results_store import ResultsStore
from services.runner import oracle_cache

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

A, B, C, D = 0, 1, 2, 3


@pytest.fixture
def example_path():
    return str(FIXTURES / "fig1.graph")


@pytest.fixture
def example_graph(example_path):
    """Four-node graph a->b:1, b->c:8, b->d:1, d->c:1."""
    return read_graph(example_path)


@pytest.fixture
def path3():
    """Undirected path 0 - 1 - 2 with unit weights."""
    return validate(WeightedGraph(
        n=3, edges=(Edge(0, 1, 1), Edge(1, 2, 1)), directed=False
    ))


@pytest.fixture
def temp_store():
    """Create a temporary results database for testing."""
    temp_dir = tempfile.mkdtemp()
    db_path = os.path.join(temp_dir, "test.duckdb")

    store = ResultsStore(db_path)
    store.connect()
    store.initialize_schema()

    yield store

    store.close()
    # Clean up
    if os.path.exists(db_path):
        os.unlink(db_path)
    wal_path = db_path + ".wal"
    if os.path.exists(wal_path):
        os.unlink(wal_path)
    if os.path.exists(temp_dir):
        os.rmdir(temp_dir)


@pytest.fixture
def seeded_graphs():
    """Small non-negative gnp graphs with zero-weight edges, one per seed."""
    graphs = []
    for seed, (n, p) in enumerate([(6, 0.3), (8, 0.4), (10, 0.3), (12, 0.25), (9, 0.6)]):
        graphs.append(generate(GeneratorSpec(
            kind=GraphKind.GNP,
            n=n,
            edge_probability=p,
            weight_low=0,
            weight_high=10,
            zero_fraction=0.2,
            seed=seed,
        )))
    return graphs


@pytest.fixture(autouse=True)
def fresh_oracle_cache():
    oracle_cache.clear()
    yield
    oracle_cache.clear()
