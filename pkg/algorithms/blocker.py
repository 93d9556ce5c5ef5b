"""Greedy blocker-set computation over a CSSSP collection."""
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, Dict, List, Optional, Tuple

from congest.engine import EngineConfig, Message, NodeProgram, PhaseMetrics, RoundMetrics, run_program
from congest.errors import AllZero
from congest.graph import NodeId, WeightedGraph
from congest.trees import CsSspCollection
from algorithms.spanning import (
    SpanningForest,
    build_spanning_forest,
    convergecast_max,
    merge_component_winners,
)

logger = logging.getLogger(__name__)


@dataclass
class ScoreTable:
    """score_x(v) for every node v and source x; only positive scores are stored."""
    n: int
    per_tree: Dict[Tuple[NodeId, NodeId], int] = field(default_factory=dict)

    def score(self, v: NodeId, x: NodeId) -> int:
        return self.per_tree.get((v, x), 0)

    def set(self, v: NodeId, x: NodeId, value: int):
        if value:
            self.per_tree[(v, x)] = value
        else:
            self.per_tree.pop((v, x), None)

    def total(self, v: NodeId) -> int:
        return sum(s for (node, _), s in self.per_tree.items() if node == v)

    def totals(self) -> Dict[NodeId, int]:
        result = {v: 0 for v in range(self.n)}
        for (v, _), s in self.per_tree.items():
            result[v] += s
        return result

    def of_node(self, v: NodeId) -> Dict[NodeId, int]:
        return {x: s for (node, x), s in self.per_tree.items() if node == v}

    def as_dict(self) -> Dict[Tuple[NodeId, NodeId], int]:
        return dict(self.per_tree)

    @property
    def grand_total(self) -> int:
        return sum(self.per_tree.values())


@dataclass
class BlockerSet:
    """Chosen vertices Q in selection order, with per-iteration round counts."""
    nodes: List[NodeId] = field(default_factory=list)
    ancestor_rounds: List[int] = field(default_factory=list)
    descendant_rounds: List[int] = field(default_factory=list)
    descendant_peak_receives: List[int] = field(default_factory=list)

    def __contains__(self, v: NodeId) -> bool:
        return v in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


def cover_bound(n: int, h: int, k: int) -> int:
    """Greedy hitting-set size bound ⌈(n/h)·ln(max(1, n·k))⌉ + 1."""
    return math.ceil((n / h) * math.log(max(1, n * k))) + 1


def _table_from_states(n: int, states: Dict[NodeId, Dict[NodeId, int]]) -> ScoreTable:
    table = ScoreTable(n=n)
    for v, own in states.items():
        for x, s in own.items():
            table.set(v, x, s)
    return table


@dataclass
class ScoreInitState:
    counts: Dict[NodeId, int]
    pending: Dict[NodeId, int]


class ScoreInitProgram(NodeProgram):
    """Per-tree convergecast of depth-h leaf counts; tree x's wave is offset by x's index."""

    name = "score-init"

    def __init__(self, collection: CsSspCollection):
        self.collection = collection
        self.index = {x: i for i, x in enumerate(collection.sources)}

    def init(self, view):
        h = self.collection.h
        counts, pending = {}, {}
        for tree in self.collection:
            entry = tree.entry(view.node)
            if entry is None:
                continue
            counts[tree.root] = 1 if entry.hops == h else 0
            if entry.parent is not None:
                pending[tree.root] = (h - entry.hops) + self.index[tree.root]
        return ScoreInitState(counts=counts, pending=pending)

    def send(self, view, state, rnd):
        outgoing = []
        for x in sorted(x for x, r in state.pending.items() if r == rnd):
            del state.pending[x]
            if state.counts[x] > 0:
                parent = self.collection.tree(x).entries[view.node].parent
                outgoing.append((parent, Message((x, state.counts[x]), stream=x)))
        return outgoing

    def receive(self, view, state, rnd, inbox):
        for _, msg in inbox:
            x, count = msg.payload
            state.counts[x] += count
        return state

    def is_quiescent(self, view, state):
        return not state.pending


def init_scores(
    collection: CsSspCollection, graph: WeightedGraph, config: Optional[EngineConfig] = None
) -> Tuple[ScoreTable, RoundMetrics]:
    """
    Count, for every node and tree, the depth-h nodes in its subtree.

    A node at depth j of T_x reports to its parent in round (h - j) + index(x),
    after all its children have reported.
    """
    config = (config or EngineConfig.for_graph(graph)).with_directed_only(False)
    states, metrics = run_program(graph, ScoreInitProgram(collection), config)
    table = _table_from_states(graph.n, {v: s.counts for v, s in states.items()})
    logger.debug(f"Initial scores: total {table.grand_total} in {metrics.rounds} rounds")
    return table, metrics


def select_blocker(
    graph: WeightedGraph,
    scores: ScoreTable,
    forest: SpanningForest,
    config: Optional[EngineConfig] = None,
) -> Tuple[NodeId, RoundMetrics]:
    """
    Node with the largest total score, ties to the smallest ID.

    Raises:
        AllZero: every score is zero
    """
    config = config or EngineConfig.for_graph(graph)
    learnt, metrics = convergecast_max(graph, forest, scores.totals(), config)
    value, winner = merge_component_winners(learnt)
    if value <= 0:
        raise AllZero("no node has a positive score")
    return winner, metrics


@dataclass
class AncestorState:
    scores: Dict[NodeId, int]
    queue: Deque[Tuple[NodeId, int]]


class AncestorUpdateProgram(NodeProgram):
    """c pushes (x, score_x(c)) to its T_x parents; ancestors subtract and forward, one per round."""

    name = "update-ancestors"

    def __init__(self, collection: CsSspCollection, chosen: NodeId, scores: ScoreTable):
        self.collection = collection
        self.chosen = chosen
        self.scores = scores

    def init(self, view):
        own = self.scores.of_node(view.node)
        queue: Deque[Tuple[NodeId, int]] = deque()
        if view.node == self.chosen:
            for x in sorted(own):
                if self.collection.tree(x).entries[view.node].parent is not None:
                    queue.append((x, own[x]))
        return AncestorState(scores=own, queue=queue)

    def send(self, view, state, rnd):
        if not state.queue:
            return []
        x, amount = state.queue.popleft()
        parent = self.collection.tree(x).entries[view.node].parent
        return [(parent, Message((x, amount), stream=x))]

    def receive(self, view, state, rnd, inbox):
        for _, msg in inbox:
            x, amount = msg.payload
            state.scores[x] = state.scores.get(x, 0) - amount
            if view.node != x:
                state.queue.append((x, amount))
        return state

    def is_quiescent(self, view, state):
        return not state.queue


def update_ancestors(
    collection: CsSspCollection,
    chosen: NodeId,
    scores: ScoreTable,
    graph: WeightedGraph,
    config: Optional[EngineConfig] = None,
) -> Tuple[ScoreTable, RoundMetrics]:
    """Subtract score_x(c) from every strict ancestor of c in each T_x."""
    config = (config or EngineConfig.for_graph(graph)).with_directed_only(False)
    program = AncestorUpdateProgram(collection, chosen, scores)
    states, metrics = run_program(graph, program, config)
    return _table_from_states(graph.n, {v: s.scores for v, s in states.items()}), metrics


@dataclass
class DescendantState:
    scores: Dict[NodeId, int]
    list_c: List[NodeId] = field(default_factory=list)
    cursor: int = 0
    forward: List[NodeId] = field(default_factory=list)


class DescendantUpdateProgram(NodeProgram):
    """c zeroes itself, then in round i sends the i-th tree of list_c down that tree."""

    name = "update-descendants"

    def __init__(self, collection: CsSspCollection, chosen: NodeId, scores: ScoreTable):
        self.collection = collection
        self.chosen = chosen
        self.scores = scores

    def init(self, view):
        own = self.scores.of_node(view.node)
        state = DescendantState(scores=own)
        if view.node == self.chosen:
            state.list_c = sorted(x for x, s in own.items() if s != 0)
            state.scores = {}
        return state

    def send(self, view, state, rnd):
        trees = list(state.forward)
        state.forward = []
        if state.cursor < len(state.list_c):
            trees.append(state.list_c[state.cursor])
            state.cursor += 1
        outgoing = []
        for x in trees:
            for child in self.collection.tree(x).children(view.node):
                outgoing.append((child, Message((x,), stream=x)))
        return outgoing

    def receive(self, view, state, rnd, inbox):
        for _, msg in inbox:
            (x,) = msg.payload
            state.scores.pop(x, None)
            if view.node != x and self.collection.tree(x).children(view.node):
                state.forward.append(x)
        return state

    def is_quiescent(self, view, state):
        return not state.forward and state.cursor >= len(state.list_c)


def update_descendants(
    collection: CsSspCollection,
    chosen: NodeId,
    scores: ScoreTable,
    graph: WeightedGraph,
    config: Optional[EngineConfig] = None,
) -> Tuple[ScoreTable, RoundMetrics]:
    """Zero score_x(v) for c and every descendant v of c in each T_x with score_x(c) != 0."""
    config = (config or EngineConfig.for_graph(graph)).with_directed_only(False)
    program = DescendantUpdateProgram(collection, chosen, scores)
    states, metrics = run_program(graph, program, config)
    return _table_from_states(graph.n, {v: s.scores for v, s in states.items()}), metrics


IterationHook = Callable[[BlockerSet, ScoreTable], None]


def compute_blocker_set(
    collection: CsSspCollection,
    graph: WeightedGraph,
    config: Optional[EngineConfig] = None,
    forest: Optional[SpanningForest] = None,
    on_iteration: Optional[IterationHook] = None,
) -> Tuple[BlockerSet, ScoreTable, PhaseMetrics]:
    """
    Greedily pick vertices until every depth-h path of the collection is hit.

    Args:
        collection: CSSSP collection
        graph: Graph the collection was built on
        config: Engine settings (derived from the graph when omitted)
        forest: Spanning forest to reuse; built (and metered) when omitted
        on_iteration: Called after each iteration with the blockers and scores so far

    Returns:
        Tuple of (blocker set, final scores, phases)
    """
    config = config or EngineConfig.for_graph(graph)
    phases = PhaseMetrics()
    if forest is None:
        forest, forest_metrics = build_spanning_forest(graph, config)
        phases.add("blocker-forest", forest_metrics)

    scores, init_metrics = init_scores(collection, graph, config)
    phases.add("blocker-init", init_metrics)

    blockers = BlockerSet()
    while True:
        try:
            chosen, select_metrics = select_blocker(graph, scores, forest, config)
        except AllZero:
            break
        phases.add("blocker-select", select_metrics)

        before = scores.grand_total
        scores, ancestor_metrics = update_ancestors(collection, chosen, scores, graph, config)
        scores, descendant_metrics = update_descendants(collection, chosen, scores, graph, config)
        phases.add("blocker-ancestors", ancestor_metrics)
        phases.add("blocker-descendants", descendant_metrics)

        blockers.nodes.append(chosen)
        blockers.ancestor_rounds.append(ancestor_metrics.rounds)
        blockers.descendant_rounds.append(descendant_metrics.rounds)
        blockers.descendant_peak_receives.append(descendant_metrics.max_receives_per_round())
        logger.debug(f"Blocker {chosen} selected; score total {before} -> {scores.grand_total}")
        if on_iteration is not None:
            on_iteration(blockers, scores)

    logger.info(
        f"Blocker set of size {len(blockers)} for k={collection.k} h={collection.h}: "
        f"{phases.total_rounds} rounds"
    )
    return blockers, scores, phases
