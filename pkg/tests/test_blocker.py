"""Tests for the greedy blocker-set computation."""
import pytest

from algorithms.blocker import (
    ScoreTable,
    compute_blocker_set,
    cover_bound,
    init_scores,
    select_blocker,
    update_ancestors,
    update_descendants,
)
from algorithms.csssp import build_csssp
from algorithms.spanning import build_spanning_forest
from congest.engine import EngineConfig
from congest.errors import AllZero
from oracle.verify import recount_scores, verify_blocker
from tests.conftest import A, B, C, D


@pytest.fixture
def example_collection(example_graph):
    collection, _ = build_csssp(example_graph, [A, B], 2)
    return collection


def test_cover_bound():
    """Test the greedy size bound."""
    assert cover_bound(4, 2, 2) == 6
    assert cover_bound(1, 1, 1) == 1


def test_init_scores_count_depth_h_leaves(example_graph, example_collection):
    """Test b and d each lie on two depth-2 paths."""
    scores, metrics = init_scores(example_collection, example_graph)
    assert scores.as_dict() == recount_scores(example_collection)
    assert scores.totals() == {A: 1, B: 2, C: 1, D: 2}
    assert metrics.congestion() == 2


def test_select_blocker_ties_to_smallest_id(example_graph, example_collection):
    """Test b wins the tie with d."""
    forest, _ = build_spanning_forest(example_graph, EngineConfig.for_graph(example_graph))
    scores, _ = init_scores(example_collection, example_graph)
    chosen, _ = select_blocker(example_graph, scores, forest)
    assert chosen == B
    with pytest.raises(AllZero):
        select_blocker(example_graph, ScoreTable(n=4), forest)


def test_ancestor_then_descendant_update(example_graph, example_collection):
    """Test choosing b clears every score in two update passes."""
    scores, _ = init_scores(example_collection, example_graph)
    after_up, _ = update_ancestors(example_collection, B, scores, example_graph)
    assert after_up.as_dict() == {(B, A): 1, (D, A): 1, (B, B): 1, (D, B): 1, (C, B): 1}
    after_down, metrics = update_descendants(example_collection, B, after_up, example_graph)
    assert after_down.as_dict() == {}
    assert metrics.rounds <= example_collection.k + example_collection.h - 1


def test_example_blocker_set(example_graph, example_collection):
    """Test one blocker, b, hits both depth-2 paths."""
    blockers, scores, phases = compute_blocker_set(example_collection, example_graph)
    assert blockers.nodes == [B]
    assert scores.grand_total == 0
    assert verify_blocker(example_collection, 2, blockers).ok
    assert "blocker-forest" in phases.rounds_by_phase()


def test_example_all_sources(example_graph):
    """Test S = V still needs only b."""
    collection, _ = build_csssp(example_graph, range(4), 2)
    blockers, _, _ = compute_blocker_set(collection, example_graph)
    assert blockers.nodes == [B]


def test_scores_match_recount_every_iteration(seeded_graphs):
    """Test distributed score updates against a from-scratch recount."""
    for graph in seeded_graphs:
        collection, _ = build_csssp(graph, range(graph.n), 2)
        seen = []

        def check(blockers, scores):
            seen.append(len(blockers))
            assert scores.as_dict() == recount_scores(collection, blockers.nodes)

        blockers, _, _ = compute_blocker_set(collection, graph, on_iteration=check)
        assert seen == list(range(1, len(blockers) + 1))
        assert verify_blocker(collection, 2, blockers).ok
        assert len(blockers) <= cover_bound(graph.n, 2, collection.k)
        for rounds in blockers.descendant_rounds:
            assert rounds <= collection.k + collection.h - 1
        assert len(blockers.ancestor_rounds) == len(blockers)
        for rounds in blockers.ancestor_rounds:
            assert rounds <= graph.n + collection.k
        assert len(blockers.descendant_peak_receives) == len(blockers)


def test_no_depth_h_paths_means_empty_blocker_set(path3):
    """Test h beyond every tree's depth needs no blockers."""
    collection, _ = build_csssp(path3, [0], 3)
    blockers, _, phases = compute_blocker_set(collection, path3)
    assert len(blockers) == 0
    assert "blocker-select" not in phases.rounds_by_phase()
