"""Deterministic round-synchronous CONGEST execution engine."""
import logging
import math
import os
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Deque, Dict, List, Optional, Tuple

from congest.errors import LocalityViolation, MessageTooLarge, RoundLimitExceeded
from congest.graph import NodeId, WeightedGraph, WeightMode, underlying_undirected

logger = logging.getLogger(__name__)

DEFAULT_BIT_CONSTANT = 4


class BandwidthMode(Enum):
    """How queued messages on an edge direction are delivered."""
    UNBOUNDED_METERED = "unbounded-metered"
    FIFO = "one-message-per-edge-direction-FIFO"


def field_bits(value: int) -> int:
    """Bits needed for one integer field (magnitude plus a sign bit if negative)."""
    bits = max(1, abs(value).bit_length())
    return bits + 1 if value < 0 else bits


@dataclass(frozen=True)
class Message:
    """A bounded payload of integer fields.

    ``stream`` only labels the message for metering (typically the source ID
    the message belongs to) and is not part of the transmitted bits.
    """
    payload: Tuple[int, ...]
    stream: Optional[int] = None

    @property
    def bit_size(self) -> int:
        return sum(field_bits(x) for x in self.payload)


def bit_budget(
    n: int,
    max_weight: int,
    weight_mode: WeightMode = WeightMode.NONNEGATIVE,
    constant: Optional[int] = None,
) -> int:
    """B = c·⌈log2(max(n, W+2))⌉, plus one sign bit per field in arbitrary mode."""
    if constant is None:
        constant = int(os.getenv("CONGEST_BIT_CONSTANT", str(DEFAULT_BIT_CONSTANT)))
    width = (max(n, max_weight + 2) - 1).bit_length()
    budget = constant * width
    if weight_mode == WeightMode.ARBITRARY:
        budget += constant
    return budget


def default_round_limit(n: int, max_weight: int) -> int:
    """CONGEST_ROUND_LIMIT if set, else 10·n·√(n·max(λ, 1))."""
    override = os.getenv("CONGEST_ROUND_LIMIT")
    if override:
        return int(override)
    return max(1, math.ceil(10 * n * math.sqrt(n * max(max_weight, 1))))


@dataclass(frozen=True)
class EngineConfig:
    round_limit: int
    bandwidth_mode: BandwidthMode = BandwidthMode.UNBOUNDED_METERED
    message_bit_budget: int = 64
    directed_only: bool = False

    def __post_init__(self):
        if self.round_limit <= 0:
            raise ValueError(f"round_limit must be positive (got {self.round_limit})")

    @classmethod
    def for_graph(cls, graph: WeightedGraph, **overrides) -> "EngineConfig":
        """Defaults derived from the graph (bit budget, round limit)."""
        settings = {
            "round_limit": default_round_limit(graph.n, graph.max_weight),
            "message_bit_budget": bit_budget(graph.n, graph.max_weight, graph.weight_mode),
        }
        settings.update(overrides)
        return cls(**settings)

    def with_directed_only(self, directed_only: bool = True) -> "EngineConfig":
        return replace(self, directed_only=directed_only)


@dataclass(frozen=True)
class LocalView:
    """Everything a node may read: its ID, n, and its incident edges."""
    node: NodeId
    n: int
    out_edges: Tuple[Tuple[NodeId, int], ...]
    in_edges: Tuple[Tuple[NodeId, int], ...]
    neighbors: Tuple[NodeId, ...]

    @property
    def out_neighbors(self) -> Tuple[NodeId, ...]:
        return tuple(v for v, _ in self.out_edges)

    def weight_from(self, u: NodeId) -> Optional[int]:
        """Weight of the arc u→node, if any."""
        for v, w in self.in_edges:
            if v == u:
                return w
        return None


class NodeProgram:
    """Behaviour contract for per-node programs.

    Programs keep all mutable data in the per-node state object returned by
    :meth:`init`; the program instance itself holds only parameters every
    node knows and node-local inputs indexed by ``view.node``.
    """

    name = "program"

    def init(self, view: LocalView) -> Any:
        raise NotImplementedError

    def send(self, view: LocalView, state: Any, rnd: int) -> List[Tuple[NodeId, Message]]:
        return []

    def receive(
        self,
        view: LocalView,
        state: Any,
        rnd: int,
        inbox: List[Tuple[NodeId, Message]],
    ) -> Any:
        return state

    def is_quiescent(self, view: LocalView, state: Any) -> bool:
        return True


@dataclass
class RoundMetrics:
    """Round and per-edge message accounting for one or more executions."""
    rounds: int = 0
    per_edge_messages: Dict[Tuple[NodeId, NodeId], int] = field(default_factory=dict)
    per_round_totals: List[int] = field(default_factory=list)
    per_stream_edge_messages: Dict[Tuple[Optional[int], NodeId, NodeId], int] = field(
        default_factory=dict
    )
    node_send_rounds: Dict[NodeId, int] = field(default_factory=dict)
    stream_send_rounds: Dict[Tuple[Optional[int], NodeId], int] = field(default_factory=dict)
    peak_receives: Dict[NodeId, int] = field(default_factory=dict)
    counters: Dict[str, int] = field(default_factory=dict)

    @property
    def total_messages(self) -> int:
        return sum(self.per_round_totals)

    def dilation(self) -> int:
        return self.rounds

    def congestion(self, stream: Optional[int] = None) -> int:
        """Max messages over one edge direction, optionally for one stream."""
        if stream is None:
            return max(self.per_edge_messages.values(), default=0)
        return max(
            (count for (s, _, _), count in self.per_stream_edge_messages.items() if s == stream),
            default=0,
        )

    def stream_congestion(self) -> Dict[Optional[int], int]:
        result: Dict[Optional[int], int] = {}
        for (s, _, _), count in self.per_stream_edge_messages.items():
            result[s] = max(result.get(s, 0), count)
        return result

    def max_send_rounds(self, stream: Optional[int] = None) -> int:
        """Largest number of rounds in which any single node sent (per stream if given)."""
        if stream is None:
            return max(self.node_send_rounds.values(), default=0)
        return max(
            (count for (s, _), count in self.stream_send_rounds.items() if s == stream),
            default=0,
        )

    def max_receives_per_round(self) -> int:
        return max(self.peak_receives.values(), default=0)

    def bump(self, counter: str, amount: int = 1):
        self.counters[counter] = self.counters.get(counter, 0) + amount

    def combine(self, other: "RoundMetrics") -> "RoundMetrics":
        """Metrics of running ``self`` then ``other`` sequentially."""
        merged = RoundMetrics(
            rounds=self.rounds + other.rounds,
            per_round_totals=self.per_round_totals + other.per_round_totals,
        )
        for mine, theirs, target in (
            (self.per_edge_messages, other.per_edge_messages, merged.per_edge_messages),
            (self.per_stream_edge_messages, other.per_stream_edge_messages,
             merged.per_stream_edge_messages),
            (self.node_send_rounds, other.node_send_rounds, merged.node_send_rounds),
            (self.stream_send_rounds, other.stream_send_rounds, merged.stream_send_rounds),
            (self.counters, other.counters, merged.counters),
        ):
            for source in (mine, theirs):
                for key, value in source.items():
                    target[key] = target.get(key, 0) + value
        for source in (self.peak_receives, other.peak_receives):
            for key, value in source.items():
                merged.peak_receives[key] = max(merged.peak_receives.get(key, 0), value)
        return merged

    def summary(self) -> Dict[str, int]:
        return {
            "rounds": self.rounds,
            "congestion": self.congestion(),
            "messages": self.total_messages,
        }


def congestion(metrics: RoundMetrics) -> int:
    return metrics.congestion()


@dataclass
class PhaseMetrics:
    """Named, ordered phases of a composed algorithm."""
    phases: Dict[str, RoundMetrics] = field(default_factory=dict)

    def add(self, name: str, metrics: RoundMetrics):
        if name in self.phases:
            self.phases[name] = self.phases[name].combine(metrics)
        else:
            self.phases[name] = metrics

    def extend(self, other: "PhaseMetrics", prefix: str = ""):
        for name, metrics in other.phases.items():
            self.add(f"{prefix}{name}", metrics)

    @property
    def total_rounds(self) -> int:
        return sum(m.rounds for m in self.phases.values())

    def congestion(self) -> int:
        return max((m.congestion() for m in self.phases.values()), default=0)

    def rounds_by_phase(self) -> Dict[str, int]:
        return {name: m.rounds for name, m in self.phases.items()}

    def merged(self) -> RoundMetrics:
        result = RoundMetrics()
        for metrics in self.phases.values():
            result = result.combine(metrics)
        return result


def build_views(graph: WeightedGraph) -> Dict[NodeId, LocalView]:
    adjacency = underlying_undirected(graph)
    return {
        v: LocalView(
            node=v,
            n=graph.n,
            out_edges=graph.out_edges(v),
            in_edges=graph.in_edges(v),
            neighbors=adjacency[v],
        )
        for v in range(graph.n)
    }


def run_program(
    graph: WeightedGraph,
    program: NodeProgram,
    config: EngineConfig,
) -> Tuple[Dict[NodeId, Any], RoundMetrics]:
    """
    Execute a node program round by round until quiescence.

    Args:
        graph: Validated graph; communication uses its underlying undirected graph
        program: Program run at every node
        config: Round limit, bandwidth mode and bit budget

    Returns:
        Tuple of (final state per node, metrics)

    Raises:
        RoundLimitExceeded: nodes still active at the round limit
        MessageTooLarge: a payload exceeds the bit budget
        LocalityViolation: a node addressed a non-neighbour
    """
    views = build_views(graph)
    allowed = {
        v: frozenset(view.out_neighbors if config.directed_only else view.neighbors)
        for v, view in views.items()
    }
    states = {v: program.init(views[v]) for v in range(graph.n)}
    fifo = config.bandwidth_mode == BandwidthMode.FIFO
    queues: Dict[Tuple[NodeId, NodeId], Deque[Message]] = {}
    metrics = RoundMetrics()

    rnd = 0
    while True:
        in_flight = fifo and any(queues.values())
        if not in_flight and all(program.is_quiescent(views[v], states[v]) for v in states):
            break
        if rnd >= config.round_limit:
            logger.warning(f"{program.name}: round limit {config.round_limit} reached")
            raise RoundLimitExceeded(config.round_limit)

        inboxes: Dict[NodeId, List[Tuple[NodeId, Message]]] = {v: [] for v in states}
        delivered = 0

        for u in range(graph.n):
            outgoing = program.send(views[u], states[u], rnd) or []
            if not outgoing:
                continue
            metrics.node_send_rounds[u] = metrics.node_send_rounds.get(u, 0) + 1
            for stream in {msg.stream for _, msg in outgoing}:
                key = (stream, u)
                metrics.stream_send_rounds[key] = metrics.stream_send_rounds.get(key, 0) + 1

            for target, msg in outgoing:
                if target not in allowed[u]:
                    raise LocalityViolation(
                        f"{program.name}: node {u} addressed non-neighbour {target}"
                    )
                if msg.bit_size > config.message_bit_budget:
                    raise MessageTooLarge(u, msg.bit_size, config.message_bit_budget)
                if fifo:
                    queues.setdefault((u, target), deque()).append(msg)
                else:
                    inboxes[target].append((u, msg))
                    _meter(metrics, u, target, msg)
                    delivered += 1

        if fifo:
            for (u, target) in sorted(queues):
                queue = queues[(u, target)]
                if queue:
                    msg = queue.popleft()
                    inboxes[target].append((u, msg))
                    _meter(metrics, u, target, msg)
                    delivered += 1
            for target in inboxes:
                inboxes[target].sort(key=lambda item: item[0])

        for v in range(graph.n):
            if inboxes[v]:
                count = len(inboxes[v])
                if count > metrics.peak_receives.get(v, 0):
                    metrics.peak_receives[v] = count
            states[v] = program.receive(views[v], states[v], rnd, inboxes[v])

        metrics.per_round_totals.append(delivered)
        rnd += 1

    metrics.rounds = rnd
    logger.debug(
        f"{program.name}: {metrics.rounds} rounds, {metrics.total_messages} messages, "
        f"congestion {metrics.congestion()}"
    )
    return states, metrics


def _meter(metrics: RoundMetrics, u: NodeId, v: NodeId, msg: Message):
    metrics.per_edge_messages[(u, v)] = metrics.per_edge_messages.get((u, v), 0) + 1
    key = (msg.stream, u, v)
    metrics.per_stream_edge_messages[key] = metrics.per_stream_edge_messages.get(key, 0) + 1
