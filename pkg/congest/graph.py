"""Weighted graph model, validation, generators and the edge-list file format."""
import hashlib
import logging
import math
import random
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from congest.errors import (
    DuplicateEdge,
    GraphFormatError,
    NegativeWeightInNonnegativeMode,
    NodeOutOfRange,
    SelfLoop,
)

logger = logging.getLogger(__name__)

NodeId = int


class WeightMode(Enum):
    """Admissible edge weights."""
    NONNEGATIVE = "nn"
    ARBITRARY = "arb"


class GraphKind(Enum):
    """Generator families."""
    GNP = "gnp"
    PATH = "path"
    CYCLE = "cycle"
    GRID = "grid"
    LAYERED = "layered"


@dataclass(frozen=True, order=True)
class Edge:
    u: NodeId
    v: NodeId
    w: int


@dataclass(frozen=True)
class WeightedGraph:
    """Directed or undirected graph with integer edge weights.

    Undirected graphs list each edge once; :meth:`arcs` yields both
    directions. Communication always happens on the underlying undirected
    graph regardless of ``directed``.
    """
    n: int
    edges: Tuple[Edge, ...] = ()
    directed: bool = True
    weight_mode: WeightMode = WeightMode.NONNEGATIVE

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def _out(self) -> Dict[NodeId, Tuple[Tuple[NodeId, int], ...]]:
        out: Dict[NodeId, List[Tuple[NodeId, int]]] = {v: [] for v in range(self.n)}
        for u, v, w in self.arcs():
            out[u].append((v, w))
        return {v: tuple(sorted(nbrs)) for v, nbrs in out.items()}

    @cached_property
    def _in(self) -> Dict[NodeId, Tuple[Tuple[NodeId, int], ...]]:
        inc: Dict[NodeId, List[Tuple[NodeId, int]]] = {v: [] for v in range(self.n)}
        for u, v, w in self.arcs():
            inc[v].append((u, w))
        return {v: tuple(sorted(nbrs)) for v, nbrs in inc.items()}

    @cached_property
    def _weights(self) -> Dict[Tuple[NodeId, NodeId], int]:
        return {(u, v): w for u, v, w in self.arcs()}

    def arcs(self) -> List[Tuple[NodeId, NodeId, int]]:
        """All directed arcs (u, v, w); undirected edges contribute both."""
        result = []
        for e in self.edges:
            result.append((e.u, e.v, e.w))
            if not self.directed:
                result.append((e.v, e.u, e.w))
        return result

    def out_edges(self, u: NodeId) -> Tuple[Tuple[NodeId, int], ...]:
        return self._out[u]

    def in_edges(self, v: NodeId) -> Tuple[Tuple[NodeId, int], ...]:
        return self._in[v]

    def weight(self, u: NodeId, v: NodeId) -> Optional[int]:
        return self._weights.get((u, v))

    def has_arc(self, u: NodeId, v: NodeId) -> bool:
        return (u, v) in self._weights

    @property
    def max_weight(self) -> int:
        """λ: the largest absolute edge weight (0 for an edgeless graph)."""
        return max((abs(e.w) for e in self.edges), default=0)

    @property
    def has_negative_weight(self) -> bool:
        return any(e.w < 0 for e in self.edges)

    def fingerprint(self) -> str:
        return hashlib.sha256(serialize_graph(self).encode()).hexdigest()

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"WeightedGraph(n={self.n}, m={self.m}, {kind}, mode={self.weight_mode.value})"


def validate(graph: WeightedGraph) -> WeightedGraph:
    """
    Check graph invariants and return a normalized copy.

    Args:
        graph: Graph to check

    Returns:
        Graph with edges sorted by (u, v)

    Raises:
        NodeOutOfRange, SelfLoop, DuplicateEdge, NegativeWeightInNonnegativeMode
    """
    seen = set()
    for e in graph.edges:
        if not (0 <= e.u < graph.n and 0 <= e.v < graph.n):
            raise NodeOutOfRange(f"Edge ({e.u}, {e.v}) outside [0, {graph.n})")
        if e.u == e.v:
            raise SelfLoop(f"Self loop at node {e.u}")
        if graph.weight_mode == WeightMode.NONNEGATIVE and e.w < 0:
            raise NegativeWeightInNonnegativeMode(
                f"Edge ({e.u}, {e.v}) has weight {e.w} in nonnegative mode"
            )
        key = (e.u, e.v) if graph.directed else (min(e.u, e.v), max(e.u, e.v))
        if key in seen:
            raise DuplicateEdge(f"Duplicate edge {key}")
        seen.add(key)

    return replace(graph, edges=tuple(sorted(graph.edges)))


def underlying_undirected(graph: WeightedGraph) -> Dict[NodeId, Tuple[NodeId, ...]]:
    """Communication adjacency: u ~ v iff (u, v) or (v, u) is an edge."""
    adjacency: Dict[NodeId, set] = {v: set() for v in range(graph.n)}
    for e in graph.edges:
        adjacency[e.u].add(e.v)
        adjacency[e.v].add(e.u)
    return {v: tuple(sorted(nbrs)) for v, nbrs in adjacency.items()}


@dataclass
class GeneratorSpec:
    """Parameters for :func:`generate`; ``weight_high`` plays the role of λ."""
    kind: GraphKind = GraphKind.GNP
    n: int = 10
    edge_probability: float = 0.3
    weight_low: int = 1
    weight_high: int = 10
    zero_fraction: float = 0.0
    seed: int = 0
    directed: bool = True
    weight_mode: WeightMode = WeightMode.NONNEGATIVE

    def problems(self) -> List[str]:
        """Return every invariant this spec violates (empty when valid)."""
        issues = []
        if self.n < 1:
            issues.append(f"n must be at least 1 (got {self.n})")
        if not 0.0 <= self.edge_probability <= 1.0:
            issues.append(f"edge probability must lie in [0, 1] (got {self.edge_probability})")
        if self.weight_low > self.weight_high:
            issues.append(
                f"weight_low ({self.weight_low}) exceeds weight_high ({self.weight_high})"
            )
        if not 0.0 <= self.zero_fraction <= 1.0:
            issues.append(f"zero fraction must lie in [0, 1] (got {self.zero_fraction})")
        if self.weight_mode == WeightMode.NONNEGATIVE and self.weight_low < 0:
            issues.append("negative weights require arbitrary weight mode")
        return issues


def _draw_weight(rng: random.Random, spec: GeneratorSpec) -> int:
    if spec.zero_fraction > 0 and rng.random() < spec.zero_fraction:
        return 0
    if spec.weight_mode == WeightMode.ARBITRARY:
        return rng.randint(spec.weight_low, spec.weight_high)
    low = max(1, spec.weight_low)
    if spec.weight_high < low:
        return 0
    return rng.randint(low, spec.weight_high)


def _pairs(spec: GeneratorSpec, rng: random.Random) -> List[Tuple[NodeId, NodeId]]:
    n = spec.n
    if spec.kind == GraphKind.PATH:
        return [(i, i + 1) for i in range(n - 1)]

    if spec.kind == GraphKind.CYCLE:
        pairs = [(i, i + 1) for i in range(n - 1)]
        if n > 2:
            pairs.append((n - 1, 0))
        return pairs

    if spec.kind == GraphKind.GRID:
        cols = max(1, math.isqrt(n))
        pairs = []
        for v in range(n):
            if (v + 1) % cols != 0 and v + 1 < n:
                pairs.append((v, v + 1))
            if v + cols < n:
                pairs.append((v, v + cols))
        if spec.directed:
            pairs += [(b, a) for a, b in pairs]
        return pairs

    if spec.kind == GraphKind.LAYERED:
        width = math.isqrt(n - 1) + 1
        layers = [list(range(start, min(start + width, n))) for start in range(0, n, width)]
        pairs = []
        for current, following in zip(layers, layers[1:]):
            for u in current:
                chosen = [v for v in following if rng.random() < spec.edge_probability]
                if not chosen:
                    chosen = [rng.choice(following)]
                pairs += [(u, v) for v in chosen]
        return pairs

    # gnp
    pairs = []
    for u in range(n):
        for v in range(n):
            if u == v or (not spec.directed and v < u):
                continue
            if rng.random() < spec.edge_probability:
                pairs.append((u, v))
    return pairs


def generate(spec: GeneratorSpec) -> WeightedGraph:
    """
    Generate a graph deterministically from a spec.

    Args:
        spec: Generator parameters (validated by the caller)

    Returns:
        Validated WeightedGraph
    """
    rng = random.Random(spec.seed)
    pairs = _pairs(spec, rng)
    edges = tuple(Edge(u, v, _draw_weight(rng, spec)) for u, v in pairs)
    graph = validate(WeightedGraph(
        n=spec.n,
        edges=edges,
        directed=spec.directed,
        weight_mode=spec.weight_mode,
    ))
    logger.debug(f"Generated {graph} from {spec.kind.value} seed={spec.seed}")
    return graph


def serialize_graph(graph: WeightedGraph, comments: Optional[List[str]] = None) -> str:
    lines = [f"# {c}" for c in (comments or [])]
    lines.append(
        f"p {graph.n} {graph.m} {1 if graph.directed else 0} {graph.weight_mode.value}"
    )
    lines += [f"e {e.u} {e.v} {e.w}" for e in graph.edges]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> WeightedGraph:
    """Parse the line-oriented edge-list format and validate the result."""
    header = None
    edges: List[Edge] = []

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "p":
                if header is not None:
                    raise GraphFormatError("duplicate header", number)
                if len(parts) != 5 or parts[3] not in ("0", "1"):
                    raise GraphFormatError("expected 'p <n> <m> <0|1> <nn|arb>'", number)
                header = (int(parts[1]), int(parts[2]), parts[3] == "1", WeightMode(parts[4]))
            elif parts[0] == "e":
                if header is None:
                    raise GraphFormatError("edge before header", number)
                if len(parts) != 4:
                    raise GraphFormatError("expected 'e <u> <v> <w>'", number)
                edges.append(Edge(int(parts[1]), int(parts[2]), int(parts[3])))
            else:
                raise GraphFormatError(f"unknown record type '{parts[0]}'", number)
        except ValueError as e:
            raise GraphFormatError(str(e), number) from e

    if header is None:
        raise GraphFormatError("missing header")

    n, m, directed, mode = header
    if m != len(edges):
        raise GraphFormatError(f"header declares {m} edges, found {len(edges)}")

    return validate(WeightedGraph(n=n, edges=tuple(edges), directed=directed, weight_mode=mode))


def read_graph(path: str) -> WeightedGraph:
    graph = parse_graph(Path(path).read_text())
    logger.info(f"Loaded {graph} from {path}")
    return graph


def write_graph(graph: WeightedGraph, path: str, comments: Optional[List[str]] = None):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(serialize_graph(graph, comments))
    logger.info(f"Wrote {graph} to {path}")
