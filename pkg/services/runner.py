"""Run one algorithm on a graph and verify it against the matching oracle."""
import logging
import math
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from cachetools import LRUCache

from congest.distance import INF, format_distance
from congest.engine import BandwidthMode, EngineConfig, PhaseMetrics
from congest.graph import NodeId, WeightedGraph
from congest.trees import SpTree
from oracle.reference import (
    DistanceMatrix,
    HopBoundedTable,
    bellman_ford_apsp,
    dijkstra_apsp,
    hop_bounded_apsp,
)
from oracle.verify import recount_scores, verify_blocker, verify_csssp
from algorithms.approx import ApproxConfig, approx_apsp
from algorithms.blocker import BlockerSet, ScoreTable, compute_blocker_set, cover_bound
from algorithms.csssp import CsSspMethod, build_csssp
from algorithms.ksp import (
    ENVELOPE_FACTOR,
    HRule,
    KsspConfig,
    round_envelopes,
    run_ksp,
    within_envelope,
)
from algorithms.pipelined import (
    PipelineEnvelope,
    ScheduleMode,
    default_delta_cap,
    multi_source_pipelined,
    short_range,
    short_range_extension,
)
from algorithms.randomized import randomized_hop_bound, round_envelope, run_randomized_apsp
from services.report import GraphInfo, RunReport, Verdict, phase_reports

logger = logging.getLogger(__name__)

ALGORITHMS = (
    "short-range",
    "extension",
    "multi-source",
    "csssp",
    "blocker",
    "ksp",
    "apsp",
    "rand-apsp",
    "approx",
)

# algorithms that take a hop bound and fall back to ⌈√n⌉ without one
HOP_BOUNDED = ("short-range", "extension", "multi-source", "csssp", "blocker")


class InvalidRequest(ValueError):
    """A run request cannot be executed as given (maps to a usage error)."""


@dataclass
class RunRequest:
    algorithm: str
    sources: Tuple[NodeId, ...] = ()
    source: Optional[NodeId] = None
    h: Optional[int] = None
    delta_cap: Optional[int] = None
    schedule: ScheduleMode = ScheduleMode.FRONTIER
    method: CsSspMethod = CsSspMethod.PIPELINED
    h_rule: HRule = HRule.EXPLICIT
    epsilon: Optional[Fraction] = None
    seed: int = 0
    bandwidth: BandwidthMode = BandwidthMode.UNBOUNDED_METERED

    def config_echo(self) -> Dict[str, Any]:
        return {
            "sources": list(self.sources),
            "source": self.source,
            "h": self.h,
            "delta_cap": self.delta_cap,
            "schedule": self.schedule.value,
            "method": self.method.value,
            "h_rule": self.h_rule.value,
            "epsilon": None if self.epsilon is None else str(self.epsilon),
            "seed": self.seed,
            "bandwidth": self.bandwidth.value,
        }


@dataclass
class RunOutcome:
    report: RunReport
    distances: Optional[DistanceMatrix] = None


@dataclass
class _Result:
    phases: PhaseMetrics
    violations: List[str] = field(default_factory=list)
    distances: Optional[DistanceMatrix] = None
    approximate: bool = False
    approximate_exact: bool = False
    blockers: Optional[BlockerSet] = None
    envelopes: Dict[str, float] = field(default_factory=dict)
    envelope_checks: Dict[str, bool] = field(default_factory=dict)


class OracleCache:
    """Memoizes oracle tables per (graph fingerprint, oracle, parameters)."""

    def __init__(self, maxsize: Optional[int] = None):
        if maxsize is None:
            maxsize = int(os.getenv("ORACLE_CACHE_SIZE", "64"))
        self.cache = LRUCache(maxsize=max(1, maxsize))
        self.hits = 0
        self.misses = 0

    def get(self, graph: WeightedGraph, oracle: str, params: Tuple, compute: Callable[[], Any]):
        key = (graph.fingerprint(), oracle, params)
        if key in self.cache:
            self.hits += 1
            return self.cache[key]
        self.misses += 1
        value = compute()
        self.cache[key] = value
        return value

    def dijkstra(self, graph: WeightedGraph, sources: Tuple[NodeId, ...]) -> DistanceMatrix:
        return self.get(graph, "dijkstra", sources, lambda: dijkstra_apsp(graph, sources))

    def bellman_ford(self, graph: WeightedGraph, sources: Tuple[NodeId, ...]) -> DistanceMatrix:
        return self.get(graph, "bellman-ford", sources, lambda: bellman_ford_apsp(graph, sources))

    def hop_bounded(
        self, graph: WeightedGraph, h: int, sources: Tuple[NodeId, ...]
    ) -> HopBoundedTable:
        return self.get(
            graph, "hop-bounded", (h, sources), lambda: hop_bounded_apsp(graph, h, sources)
        )

    def clear(self):
        self.cache.clear()
        self.hits = 0
        self.misses = 0


oracle_cache = OracleCache()


def default_hop_bound(n: int) -> int:
    return max(1, math.isqrt(max(0, n - 1)) + 1)


def _describe(s: NodeId, t: NodeId, got, expected) -> str:
    return f"({s},{t}): got {format_distance(got)}, expected {format_distance(expected)}"


def compare_matrices(
    result: DistanceMatrix, expected: DistanceMatrix, sources: Iterable[NodeId]
) -> List[str]:
    return [_describe(s, t, mine, theirs) for s, t, mine, theirs in result.mismatches(expected, sources)]


def _tree_rows(
    trees: Dict[NodeId, SpTree], table: HopBoundedTable, cap: Optional[int]
) -> Tuple[DistanceMatrix, List[str]]:
    """Distance rows from trees, checked entry by entry against the h-hop DP."""
    matrix = DistanceMatrix(n=table.n, sources=tuple(sorted(trees)))
    violations = []
    for x, tree in trees.items():
        for v in range(table.n):
            expected = table.entry(x, v)
            got = tree.entry(v)
            if got is not None:
                matrix.set(x, v, got.dist)
            # entries beyond the distance cap are not propagated
            if cap is not None:
                if expected is not None and expected[0] > cap:
                    expected = None
                if got is not None and got.dist > cap:
                    got = None
            if expected is None and got is None:
                continue
            if expected is None or got is None or got.dist != expected[0]:
                violations.append(_describe(
                    x, v, INF if got is None else got.dist,
                    INF if expected is None else expected[0],
                ))
            elif got.parent != expected[2]:
                violations.append(
                    f"({x},{v}): parent {got.parent}, expected {expected[2]}"
                )
    return matrix, violations


def _resolve_sources(graph: WeightedGraph, request: RunRequest) -> Tuple[NodeId, ...]:
    sources = tuple(sorted(set(request.sources))) or tuple(range(graph.n))
    outside = [v for v in sources if not 0 <= v < graph.n]
    if outside:
        raise InvalidRequest(f"source {outside[0]} outside [0, {graph.n})")
    return sources


def _single_source(graph: WeightedGraph, request: RunRequest) -> NodeId:
    if request.source is not None:
        source = request.source
    elif request.sources:
        source = min(request.sources)
    else:
        source = 0
    if not 0 <= source < graph.n:
        raise InvalidRequest(f"source {source} outside [0, {graph.n})")
    return source


def _pipeline_checks(
    request: RunRequest, envelope: PipelineEnvelope, metrics
) -> Tuple[Dict[str, bool], List[str]]:
    """Envelope flags for a pipelined run; only the single-best schedule is held to them."""
    checks = envelope.check(metrics)
    failed = [name for name, passed in checks.items() if not passed]
    if not failed:
        return checks, []
    if request.schedule == ScheduleMode.SINGLE:
        return checks, [
            f"{name} failed: {metrics.rounds} rounds, congestion {metrics.congestion()}, "
            f"late sends {metrics.counters.get('late_sends', 0)} ({envelope})"
            for name in failed
        ]
    logger.warning(f"Frontier schedule outside the single-best envelope: {', '.join(failed)}")
    return checks, []


def _run_short_range(graph, request, engine, h) -> _Result:
    x = _single_source(graph, request)
    tree, metrics = short_range(graph, x, h, request.delta_cap, request.schedule, engine)
    phases = PhaseMetrics()
    phases.add("short-range", metrics)
    table = oracle_cache.hop_bounded(graph, h, (x,))
    matrix, violations = _tree_rows({x: tree}, table, request.delta_cap)
    cap = default_delta_cap(graph) if request.delta_cap is None else request.delta_cap
    checks, failed = _pipeline_checks(request, PipelineEnvelope.short_range(h, cap), metrics)
    return _Result(
        phases=phases, violations=violations + failed, distances=matrix, envelope_checks=checks
    )


def _run_extension(graph, request, engine, h) -> _Result:
    x = _single_source(graph, request)
    seeded = oracle_cache.hop_bounded(graph, h, (x,))
    seeds = {v: seeded.distance(x, v) for v in range(graph.n) if seeded.distance(x, v) is not INF}
    entries, metrics = short_range_extension(
        graph, x, h, seeds, request.delta_cap, request.schedule, engine
    )
    phases = PhaseMetrics()
    phases.add("extension", metrics)

    matrix = DistanceMatrix(n=graph.n, sources=(x,))
    for v, entry in entries.items():
        matrix.set(x, v, entry.dist)
    expected = oracle_cache.hop_bounded(graph, 2 * h, (x,)).as_matrix()
    cap = default_delta_cap(graph) if request.delta_cap is None else request.delta_cap
    cap = max([cap, *seeds.values()])
    checks, failed = _pipeline_checks(request, PipelineEnvelope.short_range(h, cap), metrics)
    return _Result(
        phases=phases,
        violations=compare_matrices(matrix, expected, (x,)) + failed,
        distances=matrix,
        envelope_checks=checks,
    )


def _run_multi_source(graph, request, engine, h) -> _Result:
    sources = _resolve_sources(graph, request)
    trees, metrics = multi_source_pipelined(
        graph, sources, h, request.delta_cap, request.schedule, engine
    )
    phases = PhaseMetrics()
    phases.add("multi-source", metrics)
    table = oracle_cache.hop_bounded(graph, h, sources)
    matrix, violations = _tree_rows(trees, table, request.delta_cap)
    cap = max(1, default_delta_cap(graph)) if request.delta_cap is None else request.delta_cap
    envelope = PipelineEnvelope.multi_source(h, len(sources), cap)
    checks, failed = _pipeline_checks(request, envelope, metrics)
    return _Result(
        phases=phases, violations=violations + failed, distances=matrix, envelope_checks=checks
    )


def _collection_matrix(graph: WeightedGraph, collection) -> DistanceMatrix:
    matrix = DistanceMatrix(n=graph.n, sources=collection.sources)
    for tree in collection:
        for v, entry in tree.entries.items():
            matrix.set(tree.root, v, entry.dist)
    return matrix


def _csssp_violations(graph, request, collection) -> List[str]:
    table = oracle_cache.hop_bounded(graph, collection.h, collection.sources)
    exact = oracle_cache.dijkstra(graph, collection.sources)
    report = verify_csssp(collection, graph, request.delta_cap, table=table, exact=exact)
    return [
        f"{v.kind}{'/' + v.case if v.case else ''} ({v.source},{v.target}): {v.detail}"
        for v in report.violations
    ]


def _run_csssp(graph, request, engine, h) -> _Result:
    sources = _resolve_sources(graph, request)
    collection, phases = build_csssp(
        graph, sources, h, request.delta_cap, request.method, request.schedule, engine
    )
    return _Result(
        phases=phases,
        violations=_csssp_violations(graph, request, collection),
        distances=_collection_matrix(graph, collection),
    )


def _run_blocker(graph, request, engine, h) -> _Result:
    sources = _resolve_sources(graph, request)
    collection, phases = build_csssp(
        graph, sources, h, request.delta_cap, request.method, request.schedule, engine
    )
    violations = _csssp_violations(graph, request, collection)

    def check_scores(blockers: BlockerSet, scores: ScoreTable):
        expected = recount_scores(collection, blockers.nodes)
        if scores.as_dict() != expected:
            violations.append(
                f"score table after choosing {blockers.nodes[-1]} differs from recount"
            )

    blockers, _, blocker_phases = compute_blocker_set(
        collection, graph, config=engine, on_iteration=check_scores
    )
    phases.extend(blocker_phases)

    coverage = verify_blocker(collection, h, blockers.nodes)
    violations += [f"uncovered ({v.source},{v.target}): {v.detail}" for v in coverage.violations]
    bound = cover_bound(graph.n, h, len(sources))
    if len(blockers) > bound:
        violations.append(f"|Q|={len(blockers)} exceeds the greedy bound {bound}")
    for i, rounds in enumerate(blockers.descendant_rounds):
        if rounds > len(sources) + h - 1:
            violations.append(
                f"descendant update {i} took {rounds} rounds (limit {len(sources) + h - 1})"
            )
    for i, rounds in enumerate(blockers.ancestor_rounds):
        if rounds > graph.n + len(sources):
            violations.append(
                f"ancestor update {i} took {rounds} rounds (limit {graph.n + len(sources)})"
            )

    return _Result(
        phases=phases,
        violations=violations,
        distances=_collection_matrix(graph, collection),
        blockers=blockers,
    )


def _round_check(phases: PhaseMetrics, envelope: float) -> Tuple[Dict[str, bool], List[str]]:
    total = phases.total_rounds
    if within_envelope(total, envelope):
        return {"within_envelope": True}, []
    return {"within_envelope": False}, [
        f"{total} rounds exceed {ENVELOPE_FACTOR} x {envelope:.1f} "
        f"({', '.join(f'{name}={r}' for name, r in phases.rounds_by_phase().items())})"
    ]


def _run_ksp(graph, request, engine, all_sources: bool) -> _Result:
    sources = tuple(range(graph.n)) if all_sources else _resolve_sources(graph, request)
    h_rule = request.h_rule
    if h_rule == HRule.EXPLICIT and request.h is None:
        h_rule = HRule.THEOREM3
    config = KsspConfig(
        sources=sources,
        h=request.h,
        delta_cap=request.delta_cap,
        h_rule=h_rule,
        method=request.method,
        mode=request.schedule,
    )
    h = config.resolve_h(graph)
    matrix, phases, blockers = run_ksp(graph, config, engine)
    expected = oracle_cache.dijkstra(graph, sources)
    cap = default_delta_cap(graph) if request.delta_cap is None else request.delta_cap
    envelopes = round_envelopes(graph.n, len(sources), h, cap, graph.max_weight)
    checks, failed = _round_check(phases, envelopes["composition"])
    return _Result(
        phases=phases,
        violations=compare_matrices(matrix, expected, sources) + failed,
        distances=matrix,
        blockers=blockers,
        envelopes=envelopes,
        envelope_checks=checks,
    )


def _run_randomized(graph, request, engine) -> _Result:
    sources = tuple(sorted(set(request.sources))) or None
    matrix, phases, centers = run_randomized_apsp(
        graph, sources, seed=request.seed, config=engine
    )
    expected = oracle_cache.bellman_ford(graph, matrix.sources)
    violations = []
    for s, t, mine, theirs in matrix.mismatches(expected, matrix.sources):
        if mine < theirs:
            violations.append(_describe(s, t, mine, theirs) + " (below the true distance)")
        else:
            violations.append(_describe(s, t, mine, theirs))
    logger.info(f"Randomized APSP used {len(centers)} centers: {list(centers.centers)}")
    k = len(matrix.sources)
    budget = round_envelope(graph.n, k, randomized_hop_bound(graph.n, k), len(centers))
    checks, failed = _round_check(phases, budget)
    return _Result(
        phases=phases,
        violations=violations + failed,
        distances=matrix,
        envelopes={"randomized": budget},
        envelope_checks=checks,
    )


def _run_approx(graph, request, engine) -> _Result:
    if request.epsilon is None:
        raise InvalidRequest("approx requires an epsilon")
    config = ApproxConfig(epsilon=request.epsilon)
    matrix, phases = approx_apsp(graph, config, engine)
    expected = oracle_cache.dijkstra(graph, tuple(range(graph.n)))

    violations = []
    all_equal = True
    for s in range(graph.n):
        for t in range(graph.n):
            est, true = matrix.get(s, t), expected.get(s, t)
            if est != true:
                all_equal = False
            if true is INF:
                if est is not INF:
                    violations.append(_describe(s, t, est, true))
            elif est is INF or not true <= est <= (1 + config.epsilon) * true:
                violations.append(_describe(s, t, est, true) + f" outside (1+{config.epsilon})")
    return _Result(
        phases=phases,
        violations=violations,
        distances=matrix,
        approximate=True,
        approximate_exact=all_equal,
    )


def _dispatch(graph: WeightedGraph, request: RunRequest, engine: EngineConfig) -> _Result:
    algorithm = request.algorithm
    if algorithm in HOP_BOUNDED:
        h = request.h if request.h is not None else default_hop_bound(graph.n)
        if algorithm == "short-range":
            return _run_short_range(graph, request, engine, h)
        if algorithm == "extension":
            return _run_extension(graph, request, engine, h)
        if algorithm == "multi-source":
            return _run_multi_source(graph, request, engine, h)
        if algorithm == "csssp":
            return _run_csssp(graph, request, engine, h)
        return _run_blocker(graph, request, engine, h)
    if algorithm in ("ksp", "apsp"):
        return _run_ksp(graph, request, engine, all_sources=algorithm == "apsp")
    if algorithm == "rand-apsp":
        return _run_randomized(graph, request, engine)
    if algorithm == "approx":
        return _run_approx(graph, request, engine)
    raise InvalidRequest(f"unknown algorithm '{algorithm}'")


def execute(graph: WeightedGraph, request: RunRequest) -> RunOutcome:
    """
    Run ``request.algorithm`` on ``graph`` and verify the result.

    Args:
        graph: Validated input graph
        request: Algorithm and parameters

    Returns:
        RunOutcome with the report and the computed distances

    Raises:
        InvalidRequest: unknown algorithm or inconsistent parameters
        CongestError: the algorithm or engine failed
    """
    if request.algorithm not in ALGORITHMS:
        raise InvalidRequest(f"unknown algorithm '{request.algorithm}'")

    started_at = datetime.now(timezone.utc)
    start = time.perf_counter()
    engine = EngineConfig.for_graph(graph, bandwidth_mode=request.bandwidth)
    result = _dispatch(graph, request, engine)
    elapsed = time.perf_counter() - start

    if result.violations:
        verdict = Verdict.FAIL
    elif result.approximate and not result.approximate_exact:
        verdict = Verdict.WITHIN_EPSILON
    else:
        verdict = Verdict.EXACT

    counters = result.phases.merged().counters
    report = RunReport(
        algorithm=request.algorithm,
        graph=GraphInfo.from_graph(graph),
        config=request.config_echo(),
        phases=phase_reports(result.phases),
        total_rounds=result.phases.total_rounds,
        congestion=result.phases.congestion(),
        verdict=verdict,
        violations=result.violations,
        blocker_set=None if result.blockers is None else list(result.blockers.nodes),
        counters=dict(counters),
        envelopes=result.envelopes,
        envelope_checks=result.envelope_checks,
        wall_time_seconds=elapsed,
        started_at=started_at,
    )
    logger.info(
        f"{request.algorithm} on n={graph.n} m={graph.m}: {verdict.value}, "
        f"{report.total_rounds} rounds, congestion {report.congestion}"
    )
    return RunOutcome(report=report, distances=result.distances)


def distances_csv(matrix: DistanceMatrix) -> str:
    """CSV ``source,target,distance`` over every source row; unreachable is ``inf``."""
    lines = ["source,target,distance"]
    for s in matrix.sources:
        for t in range(matrix.n):
            lines.append(f"{s},{t},{format_distance(matrix.get(s, t))}")
    return "\n".join(lines) + "\n"
