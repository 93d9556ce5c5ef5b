"""Randomized APSP for arbitrary edge weights via sampled centers."""
import logging
import math
import random
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from congest.distance import INF, Distance, add
from congest.engine import EngineConfig, PhaseMetrics
from congest.errors import InvalidParameter, NegativeCycle
from congest.graph import NodeId, WeightedGraph
from oracle.reference import DistanceMatrix
from algorithms.pipelined import distributed_bellman_ford, relax_from_estimates
from algorithms.spanning import broadcast_over_forest, build_spanning_forest

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CenterSet:
    centers: Tuple[NodeId, ...]
    q: int
    seed: int

    def __contains__(self, v: NodeId) -> bool:
        return v in self.centers

    def __len__(self) -> int:
        return len(self.centers)


def ceil_cube_root(num: int, den: int = 1) -> int:
    """Smallest integer r >= 0 with r³ >= num/den."""
    r = max(0, round((num / den) ** (1 / 3)))
    while r ** 3 * den < num:
        r += 1
    while r > 0 and (r - 1) ** 3 * den >= num:
        r -= 1
    return r


def _cube_root(m: int) -> float:
    r = ceil_cube_root(m)
    return float(r) if r ** 3 == m else m ** (1 / 3)


def center_count(n: int, k: int) -> int:
    """q = ⌈(nk)^{1/3}·ln n⌉ clamped to [1, n]."""
    value = _cube_root(n * k) * math.log(n) if n > 1 else 0.0
    return min(n, max(1, math.ceil(value - 1e-9)))


def sample_centers(n: int, k: int, seed: int) -> CenterSet:
    """Uniform sample of q centers without replacement, deterministic in ``seed``."""
    if n < 1 or k < 1:
        raise InvalidParameter(f"need n >= 1 and k >= 1 (got n={n}, k={k})")
    q = center_count(n, k)
    centers = tuple(sorted(random.Random(seed).sample(range(n), q)))
    return CenterSet(centers=centers, q=q, seed=seed)


def randomized_hop_bound(n: int, k: int) -> int:
    """h = ⌈(n²/k)^{1/3}⌉ clamped to [1, max(1, n - 1)]."""
    return min(max(1, n - 1), max(1, ceil_cube_root(n * n, max(1, k))))


def round_envelope(n: int, k: int, h: int, q: int) -> float:
    """kh + n + √(nkq)·log₂n, the round budget before the constant factor."""
    log_n = math.log2(n) if n > 1 else 0.0
    return k * h + n + math.sqrt(n * k * q) * log_n


def _closure(centers: Tuple[NodeId, ...], known: Dict[Tuple[NodeId, NodeId], Distance]):
    """Floyd-Warshall over the center overlay; a negative diagonal means a negative cycle."""
    dist = {(a, b): known.get((a, b), INF) for a in centers for b in centers}
    for c in centers:
        dist[(c, c)] = min(0, dist[(c, c)])
    for mid in centers:
        for a in centers:
            if dist[(a, mid)] is INF:
                continue
            for b in centers:
                if dist[(mid, b)] is INF:
                    continue
                candidate = add(dist[(a, mid)], dist[(mid, b)])
                if candidate < dist[(a, b)]:
                    dist[(a, b)] = candidate
    for c in centers:
        if dist[(c, c)] < 0:
            raise NegativeCycle(f"negative cycle through center {c}")
    return dist


def run_randomized_apsp(
    graph: WeightedGraph,
    sources: Optional[Iterable[NodeId]] = None,
    seed: int = 0,
    centers: Optional[CenterSet] = None,
    config: Optional[EngineConfig] = None,
) -> Tuple[DistanceMatrix, PhaseMetrics, CenterSet]:
    """
    Shortest paths from ``sources`` (all nodes by default) with one-sided error.

    Phases: ``forest``; ``bellman-ford`` for h hops from sources and centers;
    ``center-exchange`` of center-to-center h-hop distances, closed locally at
    every center; ``source-to-centers`` and ``centers-to-nodes`` broadcasts;
    then a local minimum at every node. A final ``cycle-check`` relaxes from
    the combined estimates so negative cycles that avoid every center are caught.

    Raises:
        NegativeCycle: a negative cycle is reachable from a source or closes on the overlay
    """
    source_list = tuple(sorted(set(range(graph.n) if sources is None else sources)))
    if not source_list:
        raise InvalidParameter("at least one source is required")
    k = len(source_list)
    centers = centers or sample_centers(graph.n, k, seed)
    h = randomized_hop_bound(graph.n, k)
    config = config or EngineConfig.for_graph(graph)
    phases = PhaseMetrics()

    forest, forest_metrics = build_spanning_forest(graph, config)
    phases.add("forest", forest_metrics)

    origins = sorted(set(source_list) | set(centers.centers))
    trees, bf_metrics = distributed_bellman_ford(
        graph, origins, h, config=config, detect_negative_cycles=False
    )
    phases.add("bellman-ford", bf_metrics)

    def h_hop(y: NodeId, v: NodeId) -> Distance:
        entry = trees[y].entry(v)
        return INF if entry is None else entry.dist

    # every center c announces δ_h(c', c) for all centers c'
    exchange_items = {
        c: [(c2, c, h_hop(c2, c)) for c2 in centers.centers if h_hop(c2, c) is not INF]
        for c in centers.centers
    }
    received, exchange_metrics = broadcast_over_forest(graph, forest, exchange_items, config)
    phases.add("center-exchange", exchange_metrics)
    # each center closes what reached it; the union covers every component
    known = {(a, b): d for c in centers.centers for a, b, d in received[c]}
    overlay = _closure(centers.centers, known)

    # centers learn δ_h(x, c1) and derive δ(x, c2) through the overlay
    source_items = {
        c: [(x, c, h_hop(x, c)) for x in source_list if h_hop(x, c) is not INF]
        for c in centers.centers
    }
    received, source_metrics = broadcast_over_forest(graph, forest, source_items, config)
    phases.add("source-to-centers", source_metrics)
    to_center = _through_overlay(source_list, centers.centers, received, overlay)

    center_items = {
        c2: [(x, c2, to_center[(x, c2)]) for x in source_list if (x, c2) in to_center]
        for c2 in centers.centers
    }
    received, center_metrics = broadcast_over_forest(graph, forest, center_items, config)
    phases.add("centers-to-nodes", center_metrics)

    matrix = DistanceMatrix(n=graph.n, sources=source_list)
    for v in range(graph.n):
        best = {x: h_hop(x, v) for x in source_list}
        for x, c2, d_xc in received[v]:
            d_cv = h_hop(c2, v)
            if d_cv is INF:
                continue
            candidate = add(d_xc, d_cv)
            if candidate < best[x]:
                best[x] = candidate
        for x, d in best.items():
            matrix.set(x, v, d)

    seeds = {
        v: {x: matrix.get(x, v) for x in source_list if matrix.get(x, v) is not INF}
        for v in range(graph.n)
    }
    improved, check_metrics = relax_from_estimates(graph, seeds, config)
    check_metrics.bump("check_improvements", improved)
    phases.add("cycle-check", check_metrics)

    logger.info(
        f"Randomized APSP k={k} q={len(centers)} h={h}: {phases.total_rounds} rounds, "
        f"congestion {phases.congestion()}"
    )
    return matrix, phases, centers


def _through_overlay(
    sources: Tuple[NodeId, ...],
    centers: Tuple[NodeId, ...],
    received: Dict[NodeId, List[Tuple[int, ...]]],
    overlay: Dict[Tuple[NodeId, NodeId], Distance],
) -> Dict[Tuple[NodeId, NodeId], Distance]:
    """At each center c2: δ(x, c2) = min over c1 of δ_h(x, c1) + D(c1, c2)."""
    result: Dict[Tuple[NodeId, NodeId], Distance] = {}
    for c2 in centers:
        for x, c1, d_xc1 in received[c2]:
            through = overlay[(c1, c2)]
            if through is INF:
                continue
            candidate = add(d_xc1, through)
            if candidate < result.get((x, c2), INF):
                result[(x, c2)] = candidate
    return {pair: d for pair, d in result.items() if pair[0] in sources}
