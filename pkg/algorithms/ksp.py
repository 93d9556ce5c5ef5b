"""k-source shortest paths: CSSSP, blocker set, per-blocker SSSP, broadcast, local combine."""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Mapping, Optional, Tuple

from congest.distance import INF, Distance, add
from congest.engine import EngineConfig, PhaseMetrics
from congest.errors import InvalidHopBound, InvalidParameter, NegativeWeight
from congest.graph import NodeId, WeightedGraph
from congest.trees import CsSspCollection
from oracle.reference import DistanceMatrix
from algorithms.blocker import BlockerSet, compute_blocker_set
from algorithms.csssp import CsSspMethod, build_csssp
from algorithms.pipelined import ScheduleMode, default_delta_cap, distributed_bellman_ford
from algorithms.spanning import broadcast_over_forest, build_spanning_forest

logger = logging.getLogger(__name__)


class HRule(Enum):
    EXPLICIT = "explicit"
    THEOREM2 = "theorem2"
    THEOREM3 = "theorem3"


@dataclass
class KsspConfig:
    """Parameters of one k-SSP run; ``h`` is required for the explicit rule only."""
    sources: Tuple[NodeId, ...]
    h: Optional[int] = None
    delta_cap: Optional[int] = None
    h_rule: HRule = HRule.EXPLICIT
    method: CsSspMethod = CsSspMethod.PIPELINED
    mode: ScheduleMode = ScheduleMode.FRONTIER

    def resolve_h(self, graph: WeightedGraph) -> int:
        delta = default_delta_cap(graph) if self.delta_cap is None else self.delta_cap
        return choose_h(
            graph.n, len(self.sources), delta, graph.max_weight, self.h_rule, explicit=self.h
        )


def _log2(n: int) -> float:
    return math.log2(n) if n > 1 else 0.0


def choose_h(
    n: int,
    k: int,
    delta_cap: int,
    lam: int,
    rule: HRule = HRule.EXPLICIT,
    explicit: Optional[int] = None,
) -> int:
    """
    Hop parameter for k-SSP.

    theorem3: n^{4/3}·(log2 n)^{2/3} / (2kΔ)^{1/3}
    theorem2: n·(log2 n)^{1/2} / (λ^{1/4}·k^{1/4})

    Formula values are rounded up and clamped to [1, max(1, n - 1)].
    """
    upper = max(1, n - 1)
    if rule == HRule.EXPLICIT:
        if explicit is None or explicit < 1:
            raise InvalidHopBound(f"explicit rule needs h >= 1 (got {explicit})")
        return explicit
    if k < 1:
        raise InvalidParameter(f"k must be positive (got {k})")

    log_n = _log2(n)
    if rule == HRule.THEOREM3:
        value = n ** (4 / 3) * log_n ** (2 / 3) / (2 * k * max(1, delta_cap)) ** (1 / 3)
    else:
        value = n * math.sqrt(log_n) / (max(1, lam) ** 0.25 * k ** 0.25)
    return min(upper, max(1, math.ceil(value - 1e-9)))


ENVELOPE_FACTOR = 8


def round_envelopes(n: int, k: int, h: int, delta_cap: int, lam: int) -> Dict[str, float]:
    """
    Asymptotic round expressions evaluated without constants.

    Only ``composition`` is enforced: a k-SSP run may take at most
    ENVELOPE_FACTOR times that many rounds.
    """
    log_n = _log2(n)
    delta = max(1, delta_cap)
    return {
        "composition": n * n * log_n / max(1, h) + math.sqrt(delta * h * k) + n + k,
        "theorem3": (delta * k * n * n * log_n ** 2) ** (1 / 3),
        "theorem2": max(1, lam) ** 0.25 * n * k ** 0.25 * math.sqrt(log_n),
        "pipelined_short_range": 2 * math.sqrt(delta * k * h) + k + h,
        "pipelined_sssp": 2 * n * math.sqrt(delta) + 2 * n,
        "pipelined_apsp": 2 * math.sqrt(delta * k * n) + n + k,
    }


def within_envelope(total_rounds: int, envelope: float) -> bool:
    return total_rounds <= ENVELOPE_FACTOR * envelope


def local_combine(
    sources: Iterable[NodeId],
    own_row: Mapping[NodeId, Distance],
    triples: Iterable[Tuple[NodeId, NodeId, Distance]],
    from_blockers: Mapping[NodeId, Distance],
) -> Dict[NodeId, Distance]:
    """
    δ(x, v) = min(δ_h(x, v), min over c of δ_h(x, c) + δ(c, v)) at one node v.

    Args:
        sources: Sources x to produce values for
        own_row: δ_h(x, v) known at v (missing means unreachable within h hops)
        triples: Broadcast (c, x, δ_h(x, c)) values
        from_blockers: δ(c, v) from each blocker's SSSP tree
    """
    result = {x: own_row.get(x, INF) for x in sources}
    for c, x, d_xc in triples:
        if x not in result:
            continue
        d_cv = from_blockers.get(c, INF)
        if d_xc is INF or d_cv is INF:
            continue
        candidate = add(d_xc, d_cv)
        if candidate < result[x]:
            result[x] = candidate
    return result


def run_ksp(
    graph: WeightedGraph,
    config: KsspConfig,
    engine_config: Optional[EngineConfig] = None,
) -> Tuple[DistanceMatrix, PhaseMetrics, BlockerSet]:
    """
    Exact shortest-path distances from every source in ``config.sources``.

    Phases, in order: ``forest``, CSSSP (``csssp-*``), blocker
    (``blocker-*``), ``sssp`` from each blocker in sequence, ``broadcast`` of
    (c, x, δ_h(x, c)) over the spanning forest, then a local combine.

    Returns:
        Tuple of (distance rows for the sources, phases, blocker set)
    """
    if graph.has_negative_weight:
        raise NegativeWeight("k-SSP requires non-negative weights")
    sources = tuple(sorted(set(config.sources)))
    if not sources:
        raise InvalidParameter("at least one source is required")
    h = config.resolve_h(graph)
    engine_config = engine_config or EngineConfig.for_graph(graph)
    phases = PhaseMetrics()

    forest, forest_metrics = build_spanning_forest(graph, engine_config)
    phases.add("forest", forest_metrics)

    collection, csssp_phases = build_csssp(
        graph, sources, h, delta_cap=config.delta_cap, method=config.method,
        mode=config.mode, config=engine_config,
    )
    phases.extend(csssp_phases)

    blockers, _, blocker_phases = compute_blocker_set(
        collection, graph, config=engine_config, forest=forest
    )
    phases.extend(blocker_phases)

    from_blockers: Dict[NodeId, Dict[NodeId, Distance]] = {v: {} for v in range(graph.n)}
    for c in blockers:
        trees, sssp_metrics = distributed_bellman_ford(
            graph, [c], max(0, graph.n - 1), config=engine_config
        )
        phases.add("sssp", sssp_metrics)
        for v, entry in trees[c].entries.items():
            from_blockers[v][c] = entry.dist

    items = _broadcast_items(collection, blockers)
    received, broadcast_metrics = broadcast_over_forest(graph, forest, items, engine_config)
    if blockers.nodes:
        phases.add("broadcast", broadcast_metrics)

    matrix = DistanceMatrix(n=graph.n, sources=sources)
    for v in range(graph.n):
        own_row = {
            x: collection.tree(x).entries[v].dist for x in sources if v in collection.tree(x)
        }
        row = local_combine(sources, own_row, received[v], from_blockers[v])
        for x, d in row.items():
            matrix.set(x, v, d)

    logger.info(
        f"k-SSP k={len(sources)} h={h} |Q|={len(blockers)}: "
        f"{phases.total_rounds} rounds, congestion {phases.congestion()}"
    )
    return matrix, phases, blockers


def _broadcast_items(collection: CsSspCollection, blockers: BlockerSet):
    """Each blocker c announces (c, x, δ_h(x, c)) for the trees it belongs to."""
    items = {}
    for c in blockers:
        items[c] = [
            (c, x, collection.tree(x).entries[c].dist)
            for x in collection.sources
            if c in collection.tree(x)
        ]
    return items
