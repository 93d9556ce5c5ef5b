"""Sequential reference shortest-path algorithms used to check distributed results."""
import heapq
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from congest.distance import INF, Distance
from congest.errors import InvalidHopBound, NegativeCycle, NegativeWeight
from congest.graph import NodeId, WeightedGraph

logger = logging.getLogger(__name__)


@dataclass
class DistanceMatrix:
    """Rows of distances for a set of sources; missing pairs are INF."""
    n: int
    sources: Tuple[NodeId, ...]
    dist: Dict[Tuple[NodeId, NodeId], Distance] = field(default_factory=dict)

    def get(self, s: NodeId, t: NodeId) -> Distance:
        return self.dist.get((s, t), INF)

    def row(self, s: NodeId) -> Dict[NodeId, Distance]:
        return {t: self.get(s, t) for t in range(self.n)}

    def set(self, s: NodeId, t: NodeId, value: Distance):
        if value is INF:
            self.dist.pop((s, t), None)
        else:
            self.dist[(s, t)] = value

    def mismatches(
        self, other: "DistanceMatrix", sources: Optional[Iterable[NodeId]] = None
    ) -> List[Tuple[NodeId, NodeId, Distance, Distance]]:
        """(s, t, mine, theirs) for every differing pair over ``sources``."""
        result = []
        for s in (self.sources if sources is None else sources):
            for t in range(self.n):
                mine, theirs = self.get(s, t), other.get(s, t)
                if mine != theirs:
                    result.append((s, t, mine, theirs))
        return result


@dataclass
class HopBoundedTable:
    """h-hop distances plus the per-layer values D_0..D_h for each source.

    ``hops[(s, t)]`` is the smallest j with D_j(s, t) = D_h(s, t) and
    ``parent[(s, t)]`` the smallest-ID in-neighbour that attains it.
    """
    n: int
    h: int
    sources: Tuple[NodeId, ...]
    dist: Dict[Tuple[NodeId, NodeId], Distance] = field(default_factory=dict)
    hops: Dict[Tuple[NodeId, NodeId], int] = field(default_factory=dict)
    parent: Dict[Tuple[NodeId, NodeId], Optional[NodeId]] = field(default_factory=dict)
    layers: Dict[NodeId, List[Dict[NodeId, int]]] = field(default_factory=dict)

    def distance(self, s: NodeId, t: NodeId, hop_bound: Optional[int] = None) -> Distance:
        if hop_bound is None:
            return self.dist.get((s, t), INF)
        if hop_bound < 0 or hop_bound > self.h:
            raise InvalidHopBound(f"hop bound {hop_bound} outside [0, {self.h}]")
        layers = self.layers[s]
        layer = layers[min(hop_bound, len(layers) - 1)]
        return layer.get(t, INF)

    def entry(self, s: NodeId, t: NodeId) -> Optional[Tuple[int, int, Optional[NodeId]]]:
        if (s, t) not in self.dist:
            return None
        return self.dist[(s, t)], self.hops[(s, t)], self.parent[(s, t)]

    def row(self, s: NodeId) -> Dict[NodeId, Distance]:
        return {t: self.distance(s, t) for t in range(self.n)}

    def as_matrix(self) -> DistanceMatrix:
        return DistanceMatrix(n=self.n, sources=self.sources, dist=dict(self.dist))


@dataclass
class _Relaxation:
    dist: Dict[NodeId, int]
    hops: Dict[NodeId, int]
    parent: Dict[NodeId, Optional[NodeId]]
    layers: List[Dict[NodeId, int]]


def _relax_rounds(
    graph: WeightedGraph, source: NodeId, max_hops: int, detect_cycles: bool = False
) -> _Relaxation:
    """Jacobi Bellman-Ford: round j computes D_j from D_{j-1} exactly."""
    dist: Dict[NodeId, int] = {source: 0}
    hops: Dict[NodeId, int] = {source: 0}
    parent: Dict[NodeId, Optional[NodeId]] = {source: None}
    layers = [dict(dist)]
    changed = {source}

    for j in range(1, max_hops + 1):
        if not changed:
            break
        best: Dict[NodeId, Tuple[int, NodeId]] = {}
        for u in sorted(changed):
            du = dist[u]
            for v, w in graph.out_edges(u):
                candidate = (du + w, u)
                if v not in best or candidate < best[v]:
                    best[v] = candidate

        changed = set()
        for v, (d, u) in best.items():
            if v not in dist or d < dist[v]:
                dist[v] = d
                hops[v] = j
                parent[v] = u
                changed.add(v)
        layers.append(dict(dist))

        if changed and detect_cycles and j >= graph.n:
            raise NegativeCycle(
                f"distance from {source} still improving after {j} rounds"
            )

    return _Relaxation(dist=dist, hops=hops, parent=parent, layers=layers)


def bellman_ford_oracle(
    graph: WeightedGraph, source: NodeId, max_hops: int
) -> Dict[NodeId, Tuple[Distance, Optional[int]]]:
    """
    Hop-bounded single-source distances by synchronous relaxation.

    Args:
        graph: Graph, possibly with negative weights
        source: Source node
        max_hops: Hop bound h >= 0

    Returns:
        Map node -> (D_h(source, node), first round attaining it), (INF, None) if unreachable

    Raises:
        InvalidHopBound: max_hops < 0
        NegativeCycle: max_hops >= n and a round >= n still improves a value
    """
    if max_hops < 0:
        raise InvalidHopBound(f"hop bound must be non-negative (got {max_hops})")
    result = _relax_rounds(graph, source, max_hops, detect_cycles=max_hops >= graph.n)
    return {
        v: (result.dist[v], result.hops[v]) if v in result.dist else (INF, None)
        for v in range(graph.n)
    }


def hop_bounded_apsp(
    graph: WeightedGraph, h: int, sources: Optional[Iterable[NodeId]] = None
) -> HopBoundedTable:
    """Exact h-hop distances from every source (all nodes by default)."""
    if h < 0:
        raise InvalidHopBound(f"hop bound must be non-negative (got {h})")
    if graph.has_negative_weight:
        raise NegativeWeight("hop-bounded tables require non-negative weights")
    source_list = tuple(sorted(set(range(graph.n) if sources is None else sources)))
    table = HopBoundedTable(n=graph.n, h=h, sources=source_list)
    for s in source_list:
        result = _relax_rounds(graph, s, h)
        for v, d in result.dist.items():
            table.dist[(s, v)] = d
            table.hops[(s, v)] = result.hops[v]
            table.parent[(s, v)] = result.parent[v]
        table.layers[s] = result.layers
    return table


def bellman_ford_apsp(
    graph: WeightedGraph, sources: Optional[Iterable[NodeId]] = None
) -> DistanceMatrix:
    """Unbounded distances from each source; raises NegativeCycle when one is reachable."""
    source_list = tuple(sorted(set(range(graph.n) if sources is None else sources)))
    matrix = DistanceMatrix(n=graph.n, sources=source_list)
    for s in source_list:
        result = _relax_rounds(graph, s, graph.n, detect_cycles=True)
        for v, d in result.dist.items():
            matrix.set(s, v, d)
    return matrix


def dijkstra_apsp(
    graph: WeightedGraph, sources: Optional[Iterable[NodeId]] = None
) -> DistanceMatrix:
    """
    Exact distances from each source with a binary heap.

    Raises:
        NegativeWeight: the graph has a negative edge
    """
    if graph.has_negative_weight:
        raise NegativeWeight("Dijkstra requires non-negative weights")
    source_list = tuple(sorted(set(range(graph.n) if sources is None else sources)))
    matrix = DistanceMatrix(n=graph.n, sources=source_list)

    for s in source_list:
        dist: Dict[NodeId, int] = {s: 0}
        heap = [(0, s)]
        done: Set[NodeId] = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v, w in graph.out_edges(u):
                candidate = d + w
                if v not in dist or candidate < dist[v]:
                    dist[v] = candidate
                    heapq.heappush(heap, (candidate, v))
        for v, d in dist.items():
            matrix.set(s, v, d)

    logger.debug(f"Dijkstra APSP over {len(source_list)} sources on {graph}")
    return matrix


def zero_weight_closure(graph: WeightedGraph) -> Set[Tuple[NodeId, NodeId]]:
    """Pairs (x, v), x != v, with a directed path of zero-weight edges from x to v."""
    zero_out: Dict[NodeId, List[NodeId]] = {v: [] for v in range(graph.n)}
    for u, v, w in graph.arcs():
        if w == 0:
            zero_out[u].append(v)

    pairs = set()
    for x in range(graph.n):
        stack = [x]
        seen = {x}
        while stack:
            u = stack.pop()
            for v in zero_out[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        pairs.update((x, v) for v in seen if v != x)
    return pairs
