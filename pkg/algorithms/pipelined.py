"""Pipelined short-range SSSP (single and multi-source) and distributed Bellman-Ford."""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from congest.distance import INF, Distance
from congest.engine import EngineConfig, Message, NodeProgram, RoundMetrics, run_program
from congest.errors import InvalidHopBound, InvalidParameter, NegativeCycle, NegativeWeight
from congest.graph import NodeId, WeightedGraph
from congest.trees import SpTree, TreeEntry

logger = logging.getLogger(__name__)

SQRT_SCALE = 1 << 20

Seed = Union[int, Tuple[int, int]]


class ScheduleMode(Enum):
    """``frontier`` keeps every Pareto-optimal (distance, hops) pair; ``single`` only the best."""
    FRONTIER = "frontier"
    SINGLE = "single"


def rational_sqrt(value: Union[int, Fraction]) -> Fraction:
    """Square root rounded down to a multiple of 2**-20; exact for perfect squares."""
    value = Fraction(value)
    if value < 0:
        raise InvalidParameter(f"cannot take the square root of {value}")
    root = math.isqrt(value.numerator * SQRT_SCALE * SQRT_SCALE // value.denominator)
    return Fraction(root, SQRT_SCALE)


def default_delta_cap(graph: WeightedGraph) -> int:
    """n·λ bounds every shortest-path distance."""
    return graph.n * graph.max_weight


@dataclass(frozen=True)
class PipelineSchedule:
    """A pair (d, l) is sent in round ⌈d·γ + l⌉."""
    gamma: Fraction
    h: int
    delta_cap: int
    k: int = 1

    def key(self, d: int, l: int) -> int:
        return math.ceil(d * self.gamma + l)

    @property
    def round_bound(self) -> int:
        """Last round any pair within the caps can be scheduled in, plus one."""
        return self.key(self.delta_cap, self.h) + 1

    @classmethod
    def short_range(cls, h: int, delta_cap: int) -> "PipelineSchedule":
        return cls(gamma=rational_sqrt(h), h=h, delta_cap=delta_cap, k=1)

    @classmethod
    def multi_source(cls, h: int, k: int, delta_cap: int) -> "PipelineSchedule":
        delta = max(1, delta_cap)
        gamma = max(rational_sqrt(Fraction(h * k, delta)), Fraction(1, SQRT_SCALE))
        return cls(gamma=gamma, h=h, delta_cap=delta_cap, k=k)


def ceil_sqrt(num: int, den: int = 1) -> int:
    """Smallest integer r >= 0 with r² >= num/den."""
    r = math.isqrt(max(0, num) // den)
    while r * r * den < num:
        r += 1
    return r


@dataclass(frozen=True)
class PipelineEnvelope:
    """Round, per-node send and congestion bounds of a single-best pipelined run.

    ``sends`` counts pairs one node sends for one source.
    """
    rounds: int
    sends: int
    congestion: int

    @classmethod
    def short_range(cls, h: int, delta_cap: int) -> "PipelineEnvelope":
        per_node = ceil_sqrt(h)
        rounds = ceil_sqrt(delta_cap * delta_cap * h) + h + 1
        return cls(rounds=rounds, sends=per_node, congestion=per_node)

    @classmethod
    def multi_source(cls, h: int, k: int, delta_cap: int) -> "PipelineEnvelope":
        delta = max(1, delta_cap)
        per_source = ceil_sqrt(delta * h, k) + 1
        rounds = ceil_sqrt(delta * h * k) + h + 1
        return cls(rounds=rounds, sends=per_source, congestion=k * per_source)

    def check(self, metrics: RoundMetrics) -> Dict[str, bool]:
        """Named pass/fail flags for one run's metrics."""
        sends = max(metrics.stream_congestion().values(), default=0)
        return {
            "late_sends_zero": metrics.counters.get("late_sends", 0) == 0,
            "rounds_within_envelope": metrics.rounds <= self.rounds,
            "sends_within_envelope": sends <= self.sends,
            "congestion_within_envelope": metrics.congestion() <= self.congestion,
        }


@dataclass
class ShortRangeState:
    """Per-source state keeping only the current best (d*, l*)."""
    d_star: Distance = INF
    l_star: int = 0
    parent: Optional[NodeId] = None
    due_round: Optional[int] = None
    sent_round_last: int = -1
    sends_made: int = 0

    def best(self) -> Optional[Tuple[int, int, Optional[NodeId]]]:
        if self.d_star is INF:
            return None
        return self.d_star, self.l_star, self.parent


@dataclass
class FrontierState:
    """Per-source Pareto set: hops -> (distance, parent), plus unsent hops -> due round."""
    entries: Dict[int, Tuple[int, Optional[NodeId]]] = field(default_factory=dict)
    pending: Dict[int, int] = field(default_factory=dict)
    sends_made: int = 0

    def best(self) -> Optional[Tuple[int, int, Optional[NodeId]]]:
        if not self.entries:
            return None
        hops = min(self.entries, key=lambda l: (self.entries[l][0], l))
        d, parent = self.entries[hops]
        return d, hops, parent


@dataclass
class PipelineNodeState:
    per_source: Dict[NodeId, Union[ShortRangeState, FrontierState]]
    late_sends: int = 0
    adoptions: int = 0


class PipelinedProgram(NodeProgram):
    """Every node forwards each source's estimates along its out-edges on the γ schedule."""

    name = "pipelined-sssp"

    def __init__(
        self,
        sources: Tuple[NodeId, ...],
        schedule: PipelineSchedule,
        mode: ScheduleMode,
        seeds: Mapping[NodeId, Mapping[NodeId, int]],
    ):
        self.sources = sources
        self.schedule = schedule
        self.mode = mode
        self.seeds = seeds

    def init(self, view):
        per_source = {}
        for x in self.sources:
            seed = self.seeds.get(x, {}).get(view.node)
            if self.mode == ScheduleMode.SINGLE:
                state = ShortRangeState()
                if seed is not None:
                    state.d_star, state.l_star = seed, 0
                    state.due_round = self.schedule.key(seed, 0)
            else:
                state = FrontierState()
                if seed is not None:
                    state.entries[0] = (seed, None)
                    if self.schedule.h > 0:
                        state.pending[0] = self.schedule.key(seed, 0)
            per_source[x] = state
        return PipelineNodeState(per_source=per_source)

    def send(self, view, state, rnd):
        outgoing = []
        for x, s in state.per_source.items():
            due = []
            if self.mode == ScheduleMode.SINGLE:
                if s.due_round == rnd:
                    due.append((s.d_star, s.l_star))
                    s.due_round = None
                    s.sent_round_last = rnd
            else:
                for l in sorted(l for l, r in s.pending.items() if r == rnd):
                    due.append((s.entries[l][0], l))
                    del s.pending[l]
            if not due:
                continue
            s.sends_made += len(due)
            for d, l in due:
                outgoing += [(v, Message((x, d, l), stream=x)) for v, _ in view.out_edges]
        return outgoing

    def receive(self, view, state, rnd, inbox):
        for sender, msg in inbox:
            x, d, l = msg.payload
            weight = view.weight_from(sender)
            if weight is None:
                continue
            candidate_d, candidate_l = d + weight, l + 1
            if candidate_l > self.schedule.h or candidate_d > self.schedule.delta_cap:
                continue
            s = state.per_source[x]
            if self.mode == ScheduleMode.SINGLE:
                self._offer_single(state, s, candidate_d, candidate_l, sender, rnd)
            else:
                self._offer_frontier(state, s, candidate_d, candidate_l, sender, rnd)
        return state

    def _due(self, state: PipelineNodeState, d: int, l: int, rnd: int) -> int:
        due = self.schedule.key(d, l)
        if due <= rnd:
            state.late_sends += 1
            due = rnd + 1
        return due

    def _offer_single(self, state, s: ShortRangeState, d, l, sender, rnd):
        if s.d_star is INF or (d, l) < (s.d_star, s.l_star):
            s.d_star, s.l_star, s.parent = d, l, sender
            s.due_round = self._due(state, d, l, rnd)
            state.adoptions += 1
        elif (d, l) == (s.d_star, s.l_star) and s.parent is not None and sender < s.parent:
            s.parent = sender

    def _offer_frontier(self, state, s: FrontierState, d, l, sender, rnd):
        for hops, (dist, parent) in s.entries.items():
            if hops <= l and dist <= d:
                if hops == l and dist == d and parent is not None and sender < parent:
                    s.entries[hops] = (dist, sender)
                return
        for hops in [h for h, (dist, _) in s.entries.items() if h >= l and dist >= d]:
            del s.entries[hops]
            s.pending.pop(hops, None)
        s.entries[l] = (d, sender)
        if l < self.schedule.h:
            s.pending[l] = self._due(state, d, l, rnd)
        state.adoptions += 1

    def is_quiescent(self, view, state):
        for s in state.per_source.values():
            if isinstance(s, ShortRangeState):
                if s.due_round is not None:
                    return False
            elif s.pending:
                return False
        return True


def _normalize_seeds(seeds: Mapping[NodeId, Seed]) -> Dict[NodeId, int]:
    return {v: (seed[0] if isinstance(seed, tuple) else seed) for v, seed in seeds.items()}


def _run_pipeline(
    graph: WeightedGraph,
    sources: Tuple[NodeId, ...],
    schedule: PipelineSchedule,
    mode: ScheduleMode,
    seeds: Mapping[NodeId, Mapping[NodeId, int]],
    config: Optional[EngineConfig],
) -> Tuple[Dict[NodeId, Dict[NodeId, Tuple[int, int, Optional[NodeId]]]], RoundMetrics]:
    if graph.has_negative_weight:
        raise NegativeWeight("pipelined shortest paths require non-negative weights")
    if schedule.h < 1:
        raise InvalidHopBound(f"hop bound must be at least 1 (got {schedule.h})")
    config = (config or EngineConfig.for_graph(graph)).with_directed_only()

    program = PipelinedProgram(sources, schedule, mode, seeds)
    states, metrics = run_program(graph, program, config)

    results: Dict[NodeId, Dict[NodeId, Tuple[int, int, Optional[NodeId]]]] = {x: {} for x in sources}
    for v, node_state in states.items():
        metrics.bump("late_sends", node_state.late_sends)
        metrics.bump("adoptions", node_state.adoptions)
        for x, s in node_state.per_source.items():
            best = s.best()
            if best is not None:
                results[x][v] = best
    if metrics.counters["late_sends"]:
        logger.warning(f"{metrics.counters['late_sends']} late sends in pipelined run")
    return results, metrics


def _as_tree(root: NodeId, entries: Dict[NodeId, Tuple[int, int, Optional[NodeId]]]) -> SpTree:
    return SpTree(
        root=root,
        entries={v: TreeEntry(dist=d, hops=l, parent=p) for v, (d, l, p) in entries.items()},
    )


def short_range(
    graph: WeightedGraph,
    source: NodeId,
    h: int,
    delta_cap: Optional[int] = None,
    mode: ScheduleMode = ScheduleMode.FRONTIER,
    config: Optional[EngineConfig] = None,
) -> Tuple[SpTree, RoundMetrics]:
    """
    h-hop shortest-path tree from one source with γ = √h.

    Args:
        graph: Non-negative graph
        source: Root
        h: Hop bound (>= 1)
        delta_cap: Largest distance propagated (defaults to n·λ)
        mode: Schedule variant
        config: Engine settings (derived from the graph when omitted)

    Returns:
        Tuple of (tree, metrics); ``metrics.counters`` holds late_sends and adoptions
    """
    if h < 1:
        raise InvalidHopBound(f"hop bound must be at least 1 (got {h})")
    cap = default_delta_cap(graph) if delta_cap is None else delta_cap
    schedule = PipelineSchedule.short_range(h, cap)
    results, metrics = _run_pipeline(graph, (source,), schedule, mode, {source: {source: 0}}, config)
    tree = _as_tree(source, results[source])
    logger.debug(f"short_range from {source}: {len(tree)} nodes in {metrics.rounds} rounds")
    return tree, metrics


def short_range_extension(
    graph: WeightedGraph,
    source: NodeId,
    h: int,
    seeds: Mapping[NodeId, Seed],
    delta_cap: Optional[int] = None,
    mode: ScheduleMode = ScheduleMode.FRONTIER,
    config: Optional[EngineConfig] = None,
) -> Tuple[Dict[NodeId, TreeEntry], RoundMetrics]:
    """
    Extend already known distances by up to h more hops.

    Seeded nodes start at (seed distance, 0 hops) and the source at (0, 0).
    Returned entries count only the extension hops; a seeded node that never
    improves keeps parent None.
    """
    if h < 1:
        raise InvalidHopBound(f"hop bound must be at least 1 (got {h})")
    start = _normalize_seeds(seeds)
    start.setdefault(source, 0)
    cap = default_delta_cap(graph) if delta_cap is None else delta_cap
    cap = max(cap, max(start.values()))
    schedule = PipelineSchedule.short_range(h, cap)
    results, metrics = _run_pipeline(graph, (source,), schedule, mode, {source: start}, config)
    entries = {v: TreeEntry(dist=d, hops=l, parent=p) for v, (d, l, p) in results[source].items()}
    logger.debug(
        f"extension from {source}: {metrics.counters['adoptions']} adoptions "
        f"in {metrics.rounds} rounds"
    )
    return entries, metrics


def multi_source_pipelined(
    graph: WeightedGraph,
    sources: Iterable[NodeId],
    h: int,
    delta_cap: Optional[int] = None,
    mode: ScheduleMode = ScheduleMode.FRONTIER,
    config: Optional[EngineConfig] = None,
) -> Tuple[Dict[NodeId, SpTree], RoundMetrics]:
    """h-hop trees for all sources at once, scheduled with γ = √(hk/Δ)."""
    source_list = tuple(sorted(set(sources)))
    if not source_list:
        raise InvalidParameter("at least one source is required")
    cap = max(1, default_delta_cap(graph)) if delta_cap is None else delta_cap
    schedule = PipelineSchedule.multi_source(h, len(source_list), cap)
    results, metrics = _run_pipeline(
        graph, source_list, schedule, mode, {x: {x: 0} for x in source_list}, config
    )
    trees = {x: _as_tree(x, results[x]) for x in source_list}
    logger.debug(
        f"multi-source pipelined k={len(source_list)} h={h}: {metrics.rounds} rounds, "
        f"congestion {metrics.congestion()}"
    )
    return trees, metrics


@dataclass
class RelaxationState:
    dist: Dict[NodeId, int]
    hops: Dict[NodeId, int]
    parent: Dict[NodeId, Optional[NodeId]]
    changed: List[NodeId]
    next_round: int = 0


class BellmanFordProgram(NodeProgram):
    """Synchronous relaxation for many sources; a node sends a source's value only after it changes."""

    name = "bellman-ford"

    def __init__(
        self,
        sources: Tuple[NodeId, ...],
        h: int,
        n: int,
        detect_cycles: bool,
        seeds: Optional[Mapping[NodeId, Mapping[NodeId, int]]] = None,
    ):
        self.sources = sources
        self.h = h
        self.n = n
        self.detect_cycles = detect_cycles
        self.seeds = seeds or {}

    def init(self, view):
        start = {x: d for x, d in self.seeds.get(view.node, {}).items() if x in self.sources}
        if view.node in self.sources:
            start[view.node] = min(0, start.get(view.node, 0))
        return RelaxationState(
            dist=dict(start),
            hops={x: 0 for x in start},
            parent={x: None for x in start},
            changed=sorted(start),
        )

    def send(self, view, state, rnd):
        if rnd >= self.h or not state.changed:
            return []
        outgoing = []
        for x in state.changed:
            d = state.dist[x]
            outgoing += [(v, Message((x, d), stream=x)) for v, _ in view.out_edges]
        return outgoing

    def receive(self, view, state, rnd, inbox):
        best: Dict[NodeId, Tuple[int, NodeId]] = {}
        for sender, msg in inbox:
            x, d = msg.payload
            weight = view.weight_from(sender)
            if weight is None:
                continue
            candidate = (d + weight, sender)
            if x not in best or candidate < best[x]:
                best[x] = candidate

        changed = []
        for x in sorted(best):
            d, sender = best[x]
            if x not in state.dist or d < state.dist[x]:
                state.dist[x] = d
                state.hops[x] = rnd + 1
                state.parent[x] = sender
                changed.append(x)
        if changed and self.detect_cycles and rnd + 1 >= self.n:
            raise NegativeCycle(
                f"node {view.node} still improving for source {changed[0]} after {rnd + 1} rounds"
            )
        state.changed = changed
        state.next_round = rnd + 1
        return state

    def is_quiescent(self, view, state):
        return not state.changed or state.next_round >= self.h


def distributed_bellman_ford(
    graph: WeightedGraph,
    sources: Iterable[NodeId],
    h: int,
    config: Optional[EngineConfig] = None,
    detect_negative_cycles: Optional[bool] = None,
) -> Tuple[Dict[NodeId, SpTree], RoundMetrics]:
    """
    h rounds of synchronous Bellman-Ford from all sources concurrently.

    Args:
        graph: Graph in either weight mode
        sources: Source set
        h: Number of relaxation rounds (hop bound)
        config: Engine settings (derived from the graph when omitted)
        detect_negative_cycles: Raise when a value improves at round >= n (default: h >= n)

    Returns:
        Tuple of (per-source trees of h-hop distances, metrics)

    Raises:
        InvalidHopBound: h < 0
        NegativeCycle: detection enabled and a negative cycle is reachable
    """
    if h < 0:
        raise InvalidHopBound(f"hop bound must be non-negative (got {h})")
    source_list = tuple(sorted(set(sources)))
    detect = h >= graph.n if detect_negative_cycles is None else detect_negative_cycles
    config = config or EngineConfig.for_graph(graph)

    program = BellmanFordProgram(source_list, h, graph.n, detect)
    states, metrics = run_program(graph, program, config)

    entries: Dict[NodeId, Dict[NodeId, TreeEntry]] = {x: {} for x in source_list}
    for v, s in states.items():
        for x, d in s.dist.items():
            entries[x][v] = TreeEntry(dist=d, hops=s.hops[x], parent=s.parent[x])
    trees = {x: SpTree(root=x, entries=entries[x]) for x in source_list}
    logger.debug(
        f"Bellman-Ford k={len(source_list)} h={h}: {metrics.rounds} rounds, "
        f"{metrics.total_messages} messages"
    )
    return trees, metrics


def relax_from_estimates(
    graph: WeightedGraph,
    estimates: Mapping[NodeId, Mapping[NodeId, int]],
    config: Optional[EngineConfig] = None,
) -> Tuple[int, RoundMetrics]:
    """
    Relax again from walk-length estimates for up to n rounds, raising on a negative cycle.

    ``estimates`` maps node v to {source x: a length of some x-to-v walk}. Without a
    negative cycle every value settles within n - 1 rounds; a value that still drops
    at round n means one is reachable from its source.

    Returns:
        Tuple of (number of estimates that improved, metrics)

    Raises:
        NegativeCycle: a negative cycle is reachable from one of the sources
    """
    source_list = tuple(sorted({x for row in estimates.values() for x in row}))
    config = config or EngineConfig.for_graph(graph)
    program = BellmanFordProgram(source_list, graph.n, graph.n, True, seeds=estimates)
    states, metrics = run_program(graph, program, config)

    improved = sum(
        1
        for v, s in states.items()
        for x, d in s.dist.items()
        if d < estimates.get(v, {}).get(x, INF)
    )
    if improved:
        logger.warning(f"Relaxation improved {improved} estimates after the combine")
    return improved, metrics
