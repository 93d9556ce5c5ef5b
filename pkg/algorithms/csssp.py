"""Consistent h-hop shortest-path tree collections built by 2h-hop truncation."""
import logging
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from congest.engine import EngineConfig, PhaseMetrics
from congest.errors import InvalidHopBound, InvalidParameter, NegativeWeight, NotATree
from congest.graph import NodeId, WeightedGraph
from congest.trees import CsSspCollection, SpTree, TreeEntry
from algorithms.pipelined import (
    ScheduleMode,
    default_delta_cap,
    distributed_bellman_ford,
    multi_source_pipelined,
)
from algorithms.spanning import register_children

logger = logging.getLogger(__name__)


class CsSspMethod(Enum):
    PIPELINED = "pipelined"
    BELLMAN_FORD = "bellman_ford"


def truncate_to_h(
    trees: Mapping[NodeId, SpTree],
    h: int,
    graph: Optional[WeightedGraph] = None,
) -> CsSspCollection:
    """
    Keep the first h hops of every tree.

    Entries deeper than h are dropped. An entry whose parent chain no longer
    reaches the root with matching hop counts (and, given ``graph``, matching
    edge weights) is dropped as well; every other entry is kept unchanged.
    """
    if h < 0:
        raise InvalidHopBound(f"hop bound must be non-negative (got {h})")
    truncated: Dict[NodeId, SpTree] = {}
    pruned = 0
    for x in sorted(trees):
        tree = trees[x]
        kept: Dict[NodeId, TreeEntry] = {}
        for v in sorted(tree.entries, key=lambda node: (tree.entries[node].hops, node)):
            entry = tree.entries[v]
            if entry.hops > h:
                continue
            if v == x:
                if entry.parent is None and entry.hops == 0:
                    kept[v] = entry
                continue
            parent = kept.get(entry.parent) if entry.parent is not None else None
            if parent is None or parent.hops + 1 != entry.hops:
                pruned += 1
                continue
            if graph is not None:
                weight = graph.weight(entry.parent, v)
                if weight is None or parent.dist + weight != entry.dist:
                    pruned += 1
                    continue
            kept[v] = entry
        truncated[x] = SpTree(root=x, entries=kept)
    if pruned:
        logger.debug(f"Truncation to h={h} pruned {pruned} entries with broken parent chains")
    return CsSspCollection(h=h, sources=tuple(sorted(trees)), trees=truncated)


def build_csssp(
    graph: WeightedGraph,
    sources: Iterable[NodeId],
    h: int,
    delta_cap: Optional[int] = None,
    method: CsSspMethod = CsSspMethod.PIPELINED,
    mode: ScheduleMode = ScheduleMode.FRONTIER,
    config: Optional[EngineConfig] = None,
) -> Tuple[CsSspCollection, PhaseMetrics]:
    """
    Build an h-hop CSSSP collection for ``sources``.

    Runs the chosen multi-source algorithm with hop bound 2h, truncates the
    trees to h hops, then lets every node register with its parents.

    Args:
        graph: Non-negative graph
        sources: Source set S
        h: Hop bound (>= 1)
        delta_cap: Distance cap for the pipelined back-end (defaults to n·λ)
        method: Construction back-end
        mode: Pipelined schedule variant
        config: Engine settings (derived from the graph when omitted)

    Returns:
        Tuple of (collection, phases ``csssp-2h`` and ``csssp-children``)
    """
    if h < 1:
        raise InvalidHopBound(f"hop bound must be at least 1 (got {h})")
    if graph.has_negative_weight:
        raise NegativeWeight("CSSSP construction requires non-negative weights")
    source_list = tuple(sorted(set(sources)))
    if not source_list:
        raise InvalidParameter("at least one source is required")
    config = config or EngineConfig.for_graph(graph)
    cap = max(1, default_delta_cap(graph)) if delta_cap is None else delta_cap

    if method == CsSspMethod.PIPELINED:
        raw, construction = multi_source_pipelined(
            graph, source_list, 2 * h, delta_cap=cap, mode=mode, config=config
        )
    else:
        raw, construction = distributed_bellman_ford(
            graph, source_list, 2 * h, config=config, detect_negative_cycles=False
        )

    collection = truncate_to_h(raw, h, graph)

    parents: Dict[NodeId, List[Tuple[int, NodeId]]] = {}
    for tree in collection:
        for v, entry in tree.entries.items():
            if entry.parent is not None:
                parents.setdefault(v, []).append((tree.root, entry.parent))
    _, registration = register_children(graph, parents, config.with_directed_only(False))

    phases = PhaseMetrics()
    phases.add("csssp-2h", construction)
    phases.add("csssp-children", registration)
    logger.info(
        f"CSSSP k={len(source_list)} h={h} via {method.value}: "
        f"{phases.total_rounds} rounds, congestion {phases.congestion()}"
    )
    return collection, phases


def _check_acyclic(pointers: Dict[NodeId, Optional[NodeId]], anchor: NodeId):
    for start in pointers:
        node, steps = start, 0
        while node != anchor:
            node = pointers.get(node)
            steps += 1
            if node is None or steps > len(pointers):
                raise NotATree(f"node {start} does not lead to {anchor}")


def subtree_out_tree(collection: CsSspCollection, c: NodeId) -> Dict[NodeId, Optional[NodeId]]:
    """
    Union over all trees of the subtree below ``c``.

    Returns:
        Map node -> parent in the out-tree rooted at c (c maps to None); empty if c is in no tree

    Raises:
        NotATree: a node receives two different parents or the union has a cycle
    """
    parent_of: Dict[NodeId, Optional[NodeId]] = {}
    for tree in collection:
        if c not in tree:
            continue
        parent_of[c] = None
        for v in tree.subtree(c)[1:]:
            p = tree.entries[v].parent
            if parent_of.get(v, p) != p:
                raise NotATree(f"node {v} has parents {parent_of[v]} and {p} below {c}")
            parent_of[v] = p
    _check_acyclic(parent_of, c)
    return parent_of


def paths_in_tree(collection: CsSspCollection, c: NodeId) -> Dict[NodeId, Optional[NodeId]]:
    """
    Union over sources x of the x-to-c path in T_x.

    Returns:
        Map node -> next node toward c (c maps to None); empty if c is in no tree

    Raises:
        NotATree: a node has two different successors toward c
    """
    successor: Dict[NodeId, Optional[NodeId]] = {}
    for tree in collection:
        if c not in tree:
            continue
        path = tree.path(c)
        successor[c] = None
        for u, nxt in zip(path, path[1:]):
            if successor.get(u, nxt) != nxt:
                raise NotATree(f"node {u} has successors {successor[u]} and {nxt} toward {c}")
            successor[u] = nxt
    _check_acyclic(successor, c)
    return successor
