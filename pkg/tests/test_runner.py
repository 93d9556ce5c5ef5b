"""Tests for running and verifying algorithms end to end."""
import math
import random
from fractions import Fraction

import pytest

from algorithms.blocker import compute_blocker_set
from algorithms.pipelined import PipelineEnvelope, ScheduleMode
from congest.graph import Edge, GeneratorSpec, GraphKind, WeightedGraph, generate, validate
from services.report import Verdict
from services.runner import (
    InvalidRequest,
    OracleCache,
    RunRequest,
    default_hop_bound,
    distances_csv,
    execute,
    oracle_cache,
)
from tests.conftest import A, B, C, D


def test_default_hop_bound():
    """Test the fallback hop bound is ceil(sqrt(n))."""
    assert default_hop_bound(1) == 1
    assert default_hop_bound(4) == 2
    assert default_hop_bound(16) == 4
    assert default_hop_bound(17) == 5


def test_ksp_example_report(example_graph):
    """Test the k-SSP report for S = {a, b} on the example graph."""
    outcome = execute(example_graph, RunRequest(algorithm="ksp", sources=(A, B), h=2))
    report = outcome.report
    assert report.verdict == Verdict.EXACT
    assert report.ok
    assert report.blocker_set == [B]
    assert report.violations == []
    assert report.phases[0].name == "forest"
    assert report.total_rounds == sum(p.rounds for p in report.phases)
    assert "theorem3" in report.envelopes
    assert report.config["h"] == 2
    assert outcome.distances.row(A) == {A: 0, B: 1, C: 3, D: 2}


@pytest.mark.parametrize("algorithm", [
    "short-range", "extension", "multi-source", "csssp", "blocker", "apsp", "rand-apsp",
])
def test_every_algorithm_verifies_on_example(example_graph, algorithm):
    """Test each algorithm passes its oracle check with default parameters."""
    report = execute(example_graph, RunRequest(algorithm=algorithm)).report
    assert report.verdict == Verdict.EXACT, report.violations


def test_blocker_report_lists_b(example_graph):
    """Test the blocker run over all sources picks b."""
    report = execute(example_graph, RunRequest(algorithm="blocker", h=2)).report
    assert report.blocker_set == [B]
    assert report.verdict == Verdict.EXACT


@pytest.mark.parametrize("algorithm", ["ksp", "csssp", "blocker", "multi-source"])
def test_random_graphs_verify(seeded_graphs, algorithm):
    """Test the hop-bounded algorithms verify on graphs with zero weights."""
    for graph in seeded_graphs:
        report = execute(graph, RunRequest(algorithm=algorithm, h=2)).report
        assert report.verdict == Verdict.EXACT, report.violations[:3]


def test_approx_verdicts(example_graph):
    """Test exact estimates report exact and inflated ones within-epsilon."""
    report = execute(example_graph, RunRequest(algorithm="approx", epsilon=Fraction(1))).report
    assert report.verdict == Verdict.EXACT

    chain = validate(WeightedGraph(n=3, edges=(Edge(0, 1, 0), Edge(1, 2, 2))))
    outcome = execute(chain, RunRequest(algorithm="approx", epsilon=Fraction(2)))
    assert outcome.report.verdict == Verdict.WITHIN_EPSILON
    assert outcome.distances.get(0, 2) == Fraction(19, 9)
    assert "0,2,19/9" in distances_csv(outcome.distances)


def test_invalid_requests(example_graph):
    """Test requests that cannot run are rejected before any work."""
    with pytest.raises(InvalidRequest):
        execute(example_graph, RunRequest(algorithm="dijkstra"))
    with pytest.raises(InvalidRequest):
        execute(example_graph, RunRequest(algorithm="approx"))
    with pytest.raises(InvalidRequest):
        execute(example_graph, RunRequest(algorithm="multi-source", sources=(9,)))
    with pytest.raises(InvalidRequest):
        execute(example_graph, RunRequest(algorithm="short-range", source=7))


def test_mismatch_gives_fail_verdict(example_graph, mocker):
    """Test any violation turns the verdict into FAIL."""
    mocker.patch(
        "services.runner.compare_matrices", return_value=["(0,2): got 3, expected 4"]
    )
    report = execute(example_graph, RunRequest(algorithm="ksp", sources=(A,), h=2)).report
    assert report.verdict == Verdict.FAIL
    assert not report.ok
    assert report.violations == ["(0,2): got 3, expected 4"]


def test_oracle_results_are_cached(example_graph):
    """Test repeated runs reuse the oracle table."""
    execute(example_graph, RunRequest(algorithm="ksp", sources=(A, B), h=2))
    assert oracle_cache.misses == 1
    execute(example_graph, RunRequest(algorithm="ksp", sources=(A, B), h=2))
    assert oracle_cache.hits == 1


def test_oracle_cache_size_from_environment(monkeypatch):
    """Test ORACLE_CACHE_SIZE bounds the cache."""
    monkeypatch.setenv("ORACLE_CACHE_SIZE", "2")
    cache = OracleCache()
    assert cache.cache.maxsize == 2
    for i in range(3):
        cache.get(WeightedGraph(n=i + 1), "dijkstra", (), lambda: i)
    assert len(cache.cache) == 2


def test_distances_csv(example_graph):
    """Test the CSV has one line per (source, target) and writes inf."""
    outcome = execute(example_graph, RunRequest(algorithm="ksp", sources=(B,), h=2))
    lines = distances_csv(outcome.distances).splitlines()
    assert lines[0] == "source,target,distance"
    assert lines[1:] == ["1,0,inf", "1,1,0", "1,2,2", "1,3,1"]


@pytest.mark.parametrize("schedule", [ScheduleMode.FRONTIER, ScheduleMode.SINGLE])
def test_short_range_reports_envelope_checks(example_graph, schedule):
    """Test the envelope flags are reported for both schedules."""
    report = execute(
        example_graph, RunRequest(algorithm="short-range", source=A, h=2, schedule=schedule)
    ).report
    assert set(report.envelope_checks) == {
        "late_sends_zero", "rounds_within_envelope",
        "sends_within_envelope", "congestion_within_envelope",
    }
    assert all(report.envelope_checks.values())
    assert report.verdict == Verdict.EXACT


@pytest.mark.parametrize("algorithm", ["short-range", "extension", "multi-source"])
def test_single_schedule_fails_outside_envelope(example_graph, mocker, algorithm):
    """Test an overrun fails the single-best schedule and only warns for the frontier one."""
    tight = PipelineEnvelope(rounds=0, sends=0, congestion=0)
    mocker.patch("services.runner.PipelineEnvelope.short_range", return_value=tight)
    mocker.patch("services.runner.PipelineEnvelope.multi_source", return_value=tight)

    single = execute(example_graph, RunRequest(
        algorithm=algorithm, sources=(A, B), h=2, schedule=ScheduleMode.SINGLE,
    )).report
    assert single.verdict == Verdict.FAIL
    assert not single.envelope_checks["rounds_within_envelope"]
    assert any("rounds_within_envelope failed" in v for v in single.violations)

    frontier = execute(example_graph, RunRequest(
        algorithm=algorithm, sources=(A, B), h=2, schedule=ScheduleMode.FRONTIER,
    )).report
    assert frontier.verdict == Verdict.EXACT
    assert not frontier.envelope_checks["rounds_within_envelope"]


@pytest.mark.parametrize("algorithm", ["ksp", "apsp"])
def test_ksp_round_envelope_is_enforced(example_graph, mocker, algorithm):
    """Test k-SSP fails when its rounds exceed eight times the composition bound."""
    report = execute(example_graph, RunRequest(algorithm=algorithm, sources=(A, B), h=2)).report
    assert report.envelope_checks == {"within_envelope": True}
    assert report.total_rounds <= 8 * report.envelopes["composition"]

    mocker.patch("services.runner.round_envelopes", return_value={"composition": 0.5})
    report = execute(example_graph, RunRequest(algorithm=algorithm, sources=(A, B), h=2)).report
    assert report.verdict == Verdict.FAIL
    assert report.envelope_checks == {"within_envelope": False}
    assert "rounds exceed 8 x 0.5" in report.violations[-1]


def test_randomized_round_envelope_is_enforced(example_graph, mocker):
    """Test rand-apsp fails when its rounds exceed eight times its budget."""
    report = execute(example_graph, RunRequest(algorithm="rand-apsp")).report
    assert report.envelope_checks == {"within_envelope": True}
    assert report.total_rounds <= 8 * report.envelopes["randomized"]

    mocker.patch("services.runner.round_envelope", return_value=0.5)
    report = execute(example_graph, RunRequest(algorithm="rand-apsp")).report
    assert report.verdict == Verdict.FAIL
    assert report.envelope_checks == {"within_envelope": False}


def test_slow_ancestor_update_fails_blocker_run(example_graph, mocker):
    """Test an ancestor update longer than n + k rounds is a violation."""
    def inflated(*args, **kwargs):
        blockers, scores, phases = compute_blocker_set(*args, **kwargs)
        blockers.ancestor_rounds = [example_graph.n + 3 for _ in blockers.ancestor_rounds]
        return blockers, scores, phases

    mocker.patch("services.runner.compute_blocker_set", side_effect=inflated)
    report = execute(example_graph, RunRequest(algorithm="blocker", sources=(A, B), h=2)).report
    assert report.verdict == Verdict.FAIL
    assert report.violations == ["ancestor update 0 took 7 rounds (limit 6)"]


def sweep_instances():
    """Seeded gnp graphs with n in [5, 60], zero-weight edges, S = V or ceil(sqrt(n)) sources."""
    for i in range(200):
        n = 5 + (i * 11) % 56
        graph = generate(GeneratorSpec(
            kind=GraphKind.GNP,
            n=n,
            edge_probability=(0.1, 0.3, 0.6)[i % 3],
            weight_low=0,
            weight_high=10,
            zero_fraction=0.2,
            seed=i,
        ))
        if i % 2:
            sources = tuple(sorted(random.Random(i).sample(range(n), math.isqrt(n - 1) + 1)))
        else:
            sources = tuple(range(n))
        yield i, graph, sources


@pytest.mark.slow
def test_blocker_and_ksp_sweep():
    """Test CSSSP, blocker bounds and k-SSP exactness over 200 seeded instances."""
    for i, graph, sources in sweep_instances():
        blocker = execute(graph, RunRequest(algorithm="blocker", sources=sources)).report
        assert blocker.verdict == Verdict.EXACT, (i, blocker.violations[:3])
        ksp = execute(graph, RunRequest(algorithm="ksp", sources=sources)).report
        assert ksp.verdict == Verdict.EXACT, (i, ksp.violations[:3])
        assert ksp.envelope_checks["within_envelope"]
        oracle_cache.clear()
