"""Brute-force checkers for CSSSP collections, blocker sets and score tables."""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from congest.distance import INF
from congest.errors import NotATree
from congest.graph import NodeId, WeightedGraph
from congest.trees import CsSspCollection, SpTree
from oracle.reference import DistanceMatrix, HopBoundedTable, dijkstra_apsp, hop_bounded_apsp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Violation:
    """One failed check.

    ``kind`` is one of ``agreement``, ``distance``, ``structure``,
    ``containment`` or ``uncovered``; ``case`` refines path-agreement
    failures into ``weight``, ``hops`` or ``predecessor``.
    """
    kind: str
    source: NodeId
    target: NodeId
    detail: str = ""
    case: Optional[str] = None


@dataclass
class VerificationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, violation: Violation):
        self.violations.append(violation)

    def of_kind(self, kind: str) -> List[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def pairs(self, kind: Optional[str] = None) -> List[Tuple[NodeId, NodeId]]:
        return sorted({
            (v.source, v.target) for v in self.violations if kind is None or v.kind == kind
        })


def _safe_path(tree: SpTree, v: NodeId) -> Optional[List[NodeId]]:
    try:
        return tree.path(v)
    except NotATree:
        return None


def _segments(tree: SpTree) -> Dict[Tuple[NodeId, NodeId], Tuple[int, int, Tuple[NodeId, ...]]]:
    """(u, v) -> (weight, hops, node sequence) for every ancestor/descendant pair."""
    segments = {}
    for v in tree.nodes():
        path = _safe_path(tree, v)
        if path is None:
            continue
        for i, u in enumerate(path):
            weight = tree.entries[v].dist - tree.entries[u].dist
            hops = tree.entries[v].hops - tree.entries[u].hops
            segments[(u, v)] = (weight, hops, tuple(path[i:]))
    return segments


def verify_csssp(
    collection: CsSspCollection,
    graph: WeightedGraph,
    delta_cap: Optional[int] = None,
    table: Optional[HopBoundedTable] = None,
    exact: Optional[DistanceMatrix] = None,
) -> VerificationReport:
    """
    Check path agreement across trees, h-hop optimality and root containment.

    Args:
        collection: Trees to check
        graph: Non-negative graph the trees were built on
        delta_cap: Pairs whose true distance exceeds this are exempt from containment
        table: Precomputed h-hop table for the sources (computed if omitted)
        exact: Precomputed exact distances for the sources (computed if omitted)

    Returns:
        VerificationReport listing every violation found
    """
    report = VerificationReport()
    h = collection.h
    if table is None:
        table = hop_bounded_apsp(graph, h, collection.sources)
    if exact is None:
        exact = dijkstra_apsp(graph, collection.sources)

    # (b) every tree is a consistent h-hop shortest-path tree of its root
    for tree in collection:
        x = tree.root
        if not tree.is_consistent(graph):
            report.add(Violation("structure", x, x, "parent chain inconsistent"))
        for v in tree.nodes():
            entry = tree.entries[v]
            if entry.hops > h:
                report.add(Violation("structure", x, v, f"{entry.hops} hops exceed h={h}"))
            expected = table.distance(x, v)
            if entry.dist != expected:
                report.add(Violation(
                    "distance", x, v, f"tree distance {entry.dist}, h-hop distance {expected}"
                ))

    # (a) shared (u, v) paths must coincide
    seen: Dict[Tuple[NodeId, NodeId], Tuple[NodeId, Tuple[int, int, Tuple[NodeId, ...]]]] = {}
    for tree in collection:
        for pair, segment in sorted(_segments(tree).items()):
            if pair[0] == pair[1]:
                continue
            if pair not in seen:
                seen[pair] = (tree.root, segment)
                continue
            other_root, other = seen[pair]
            if segment == other:
                continue
            if segment[0] != other[0]:
                case = "weight"
            elif segment[1] != other[1]:
                case = "hops"
            else:
                case = "predecessor"
            report.add(Violation(
                "agreement", pair[0], pair[1],
                f"T_{other_root} path {list(other[2])} vs T_{tree.root} path {list(segment[2])}",
                case=case,
            ))

    # (c) every v whose shortest path fits in h hops belongs to its root's tree
    for x in collection.sources:
        tree = collection.tree(x)
        for v in range(graph.n):
            true_distance = exact.get(x, v)
            if true_distance is INF or v in tree:
                continue
            if delta_cap is not None and true_distance > delta_cap:
                continue
            if table.distance(x, v) == true_distance:
                report.add(Violation(
                    "containment", x, v, f"shortest path of weight {true_distance} within {h} hops"
                ))

    if not report.ok:
        logger.debug(f"CSSSP verification found {len(report.violations)} violations")
    return report


def verify_blocker(
    collection: CsSspCollection, h: int, blockers: Iterable[NodeId]
) -> VerificationReport:
    """Every root-to-node path of exactly h hops must contain a blocker (endpoints count)."""
    chosen = set(blockers)
    report = VerificationReport()
    for tree in collection:
        for v in tree.nodes_at_depth(h):
            path = _safe_path(tree, v)
            if path is None:
                report.add(Violation("structure", tree.root, v, "no path to root"))
            elif not chosen.intersection(path):
                report.add(Violation("uncovered", tree.root, v, f"path {path}"))
    return report


def recount_scores(
    collection: CsSspCollection, blockers: Iterable[NodeId] = ()
) -> Dict[Tuple[NodeId, NodeId], int]:
    """
    Count, from scratch, the uncovered depth-h leaves below each node.

    Returns:
        Map (node, source) -> score for every positive score
    """
    chosen = set(blockers)
    scores: Dict[Tuple[NodeId, NodeId], int] = {}
    for tree in collection:
        for leaf in tree.nodes_at_depth(collection.h):
            path = tree.path(leaf)
            if chosen.intersection(path):
                continue
            for v in path:
                key = (v, tree.root)
                scores[key] = scores.get(key, 0) + 1
    return scores
