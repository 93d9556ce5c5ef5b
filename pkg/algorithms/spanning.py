"""Flooding, BFS spanning forests, tree convergecast and pipelined tree broadcast."""
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, Dict, Iterable, List, Optional, Tuple

from congest.engine import EngineConfig, LocalView, Message, NodeProgram, RoundMetrics, run_program
from congest.graph import NodeId, WeightedGraph

logger = logging.getLogger(__name__)

# (view) -> targets a reached node forwards the flood to
EdgeFilter = Callable[[LocalView], Iterable[NodeId]]


@dataclass
class FloodState:
    reached_at: Optional[int] = None
    forwarded: bool = False


class FloodProgram(NodeProgram):
    """Single-message flood from ``origin``; reached nodes forward once."""

    name = "flood"

    def __init__(self, origin: NodeId, edge_filter: Optional[EdgeFilter] = None):
        self.origin = origin
        self.edge_filter = edge_filter

    def init(self, view: LocalView) -> FloodState:
        return FloodState(reached_at=0 if view.node == self.origin else None)

    def send(self, view, state, rnd):
        if state.reached_at is None or state.forwarded:
            return []
        state.forwarded = True
        targets = self.edge_filter(view) if self.edge_filter else view.neighbors
        return [(v, Message((self.origin,), stream=self.origin)) for v in targets]

    def receive(self, view, state, rnd, inbox):
        if inbox and state.reached_at is None:
            state.reached_at = rnd + 1
        return state

    def is_quiescent(self, view, state):
        return state.reached_at is None or state.forwarded


def flood(
    graph: WeightedGraph,
    origin: NodeId,
    config: EngineConfig,
    edge_filter: Optional[EdgeFilter] = None,
) -> Tuple[Dict[NodeId, int], RoundMetrics]:
    """Nodes reached from ``origin`` mapped to the round count at which they were reached."""
    states, metrics = run_program(graph, FloodProgram(origin, edge_filter), config)
    reached = {v: s.reached_at for v, s in states.items() if s.reached_at is not None}
    return reached, metrics


@dataclass
class SpanningForest:
    """BFS forest of the communication graph, one tree per component rooted at its min ID."""
    root: Dict[NodeId, NodeId]
    parent: Dict[NodeId, Optional[NodeId]]
    depth: Dict[NodeId, int]
    children: Dict[NodeId, Tuple[NodeId, ...]] = field(default_factory=dict)

    @property
    def roots(self) -> List[NodeId]:
        return sorted(v for v, p in self.parent.items() if p is None)

    def tree_neighbors(self, v: NodeId) -> Tuple[NodeId, ...]:
        parent = self.parent[v]
        above = () if parent is None else (parent,)
        return tuple(sorted(above + self.children.get(v, ())))

    def component(self, root: NodeId) -> List[NodeId]:
        return sorted(v for v, r in self.root.items() if r == root)

    @property
    def height(self) -> int:
        return max(self.depth.values(), default=0)


@dataclass
class ForestState:
    key: Tuple[int, int, int]
    changed: bool = True


class SpanningForestProgram(NodeProgram):
    """Min-ID flooding: adopt the lexicographically least (root, depth, parent)."""

    name = "bfs-forest"

    def init(self, view):
        return ForestState(key=(view.node, 0, -1))

    def send(self, view, state, rnd):
        if not state.changed:
            return []
        state.changed = False
        root, depth, _ = state.key
        return [(v, Message((root, depth))) for v in view.neighbors]

    def receive(self, view, state, rnd, inbox):
        for sender, msg in inbox:
            root, depth = msg.payload
            candidate = (root, depth + 1, sender)
            if candidate < state.key:
                state.key = candidate
                state.changed = True
        return state

    def is_quiescent(self, view, state):
        return not state.changed


class ChildRegistrationProgram(NodeProgram):
    """One round: every node tells each of its parents (one per stream) that it is a child.

    ``parents`` maps node -> [(stream, parent)]; the result state of each node
    maps stream -> sorted child IDs.
    """

    name = "child-registration"

    def __init__(self, parents: Dict[NodeId, List[Tuple[Optional[int], NodeId]]]):
        self.parents = parents

    def init(self, view):
        return {"sent": False, "children": {}}

    def send(self, view, state, rnd):
        if state["sent"]:
            return []
        state["sent"] = True
        return [
            (parent, Message(() if stream is None else (stream,), stream=stream))
            for stream, parent in self.parents.get(view.node, [])
        ]

    def receive(self, view, state, rnd, inbox):
        for sender, msg in inbox:
            stream = msg.payload[0] if msg.payload else None
            state["children"].setdefault(stream, []).append(sender)
        return state

    def is_quiescent(self, view, state):
        return state["sent"]


def register_children(
    graph: WeightedGraph,
    parents: Dict[NodeId, List[Tuple[Optional[int], NodeId]]],
    config: EngineConfig,
) -> Tuple[Dict[NodeId, Dict[Optional[int], Tuple[NodeId, ...]]], RoundMetrics]:
    states, metrics = run_program(graph, ChildRegistrationProgram(parents), config)
    children = {
        v: {stream: tuple(sorted(kids)) for stream, kids in s["children"].items()}
        for v, s in states.items()
    }
    return children, metrics


def build_spanning_forest(
    graph: WeightedGraph, config: EngineConfig
) -> Tuple[SpanningForest, RoundMetrics]:
    """
    Build a BFS spanning forest and tell every node its children.

    Args:
        graph: Communication graph (its underlying undirected graph is used)
        config: Engine settings; ``directed_only`` must be off

    Returns:
        Tuple of (forest, metrics of flooding plus child registration)
    """
    config = config.with_directed_only(False)
    states, flood_metrics = run_program(graph, SpanningForestProgram(), config)
    root = {v: s.key[0] for v, s in states.items()}
    depth = {v: s.key[1] for v, s in states.items()}
    parent = {v: (s.key[2] if s.key[2] >= 0 else None) for v, s in states.items()}

    registrations = {v: [(None, p)] for v, p in parent.items() if p is not None}
    children, registration_metrics = register_children(graph, registrations, config)
    forest = SpanningForest(
        root=root,
        parent=parent,
        depth=depth,
        children={v: kids.get(None, ()) for v, kids in children.items()},
    )
    logger.debug(
        f"Spanning forest: {len(forest.roots)} component(s), height {forest.height}"
    )
    return forest, flood_metrics.combine(registration_metrics)


@dataclass
class MaxState:
    pending: set
    best: Tuple[int, int]
    reported: bool = False
    winner: Optional[Tuple[int, int]] = None
    announced: bool = False


class ConvergecastMaxProgram(NodeProgram):
    """Reduce (value, -id) maxima to each root, then broadcast the winner down."""

    name = "convergecast-max"
    UP, DOWN = 0, 1

    def __init__(self, forest: SpanningForest, values: Dict[NodeId, int]):
        self.forest = forest
        self.values = values

    def init(self, view):
        v = view.node
        return MaxState(
            pending=set(self.forest.children.get(v, ())),
            best=(self.values.get(v, 0), -v),
        )

    def send(self, view, state, rnd):
        v = view.node
        parent = self.forest.parent[v]
        if state.pending:
            return []
        if parent is not None and not state.reported:
            state.reported = True
            value, neg_id = state.best
            return [(parent, Message((self.UP, value, -neg_id)))]
        if parent is None and state.winner is None:
            state.winner = state.best
        if state.winner is not None and not state.announced:
            state.announced = True
            value, neg_id = state.winner
            return [
                (child, Message((self.DOWN, value, -neg_id)))
                for child in self.forest.children.get(v, ())
            ]
        return []

    def receive(self, view, state, rnd, inbox):
        for sender, msg in inbox:
            tag, value, node = msg.payload
            if tag == self.UP:
                state.best = max(state.best, (value, -node))
                state.pending.discard(sender)
            else:
                state.winner = (value, -node)
        return state

    def is_quiescent(self, view, state):
        return state.announced


def convergecast_max(
    graph: WeightedGraph,
    forest: SpanningForest,
    values: Dict[NodeId, int],
    config: EngineConfig,
) -> Tuple[Dict[NodeId, Tuple[int, NodeId]], RoundMetrics]:
    """
    Find the max value per component, ties to the smallest ID.

    Returns:
        Tuple of (map node -> (winning value, winning node) as learnt by that node, metrics)
    """
    program = ConvergecastMaxProgram(forest, values)
    states, metrics = run_program(graph, program, config.with_directed_only(False))
    learnt = {v: (s.winner[0], -s.winner[1]) for v, s in states.items()}
    return learnt, metrics


@dataclass
class BroadcastState:
    queue: Deque[Tuple[Tuple[int, ...], Optional[NodeId]]]
    received: List[Tuple[int, ...]]


class TreeBroadcastProgram(NodeProgram):
    """Pipelined broadcast: each node forwards one queued item per round along the forest."""

    name = "tree-broadcast"

    def __init__(self, forest: SpanningForest, items: Dict[NodeId, List[Tuple[int, ...]]]):
        self.forest = forest
        self.items = items

    def init(self, view):
        own = [tuple(item) for item in self.items.get(view.node, [])]
        return BroadcastState(queue=deque((item, None) for item in own), received=list(own))

    def send(self, view, state, rnd):
        if not state.queue:
            return []
        item, came_from = state.queue.popleft()
        return [
            (v, Message(item))
            for v in self.forest.tree_neighbors(view.node)
            if v != came_from
        ]

    def receive(self, view, state, rnd, inbox):
        for sender, msg in inbox:
            state.queue.append((msg.payload, sender))
            state.received.append(msg.payload)
        return state

    def is_quiescent(self, view, state):
        return not state.queue


def broadcast_over_forest(
    graph: WeightedGraph,
    forest: SpanningForest,
    items: Dict[NodeId, List[Tuple[int, ...]]],
    config: EngineConfig,
) -> Tuple[Dict[NodeId, List[Tuple[int, ...]]], RoundMetrics]:
    """Deliver every node's items to all nodes of its component."""
    program = TreeBroadcastProgram(forest, items)
    states, metrics = run_program(graph, program, config.with_directed_only(False))
    return {v: s.received for v, s in states.items()}, metrics


def merge_component_winners(learnt: Dict[NodeId, Tuple[int, NodeId]]) -> Tuple[int, NodeId]:
    """Global (max value, smallest ID among maxima) from per-component winners."""
    return max(set(learnt.values()), key=lambda item: (item[0], -item[1]))

