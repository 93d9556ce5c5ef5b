"""(1+ε)-approximate APSP with zero-weight edges via n²-scaling."""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Set, Tuple, Union

from congest.distance import INF
from congest.engine import EngineConfig, PhaseMetrics, RoundMetrics
from congest.errors import AlgorithmError, EpsilonTooSmall, NegativeWeight
from congest.graph import Edge, NodeId, WeightedGraph, WeightMode, validate
from oracle.reference import DistanceMatrix, zero_weight_closure
from algorithms.pipelined import distributed_bellman_ford
from algorithms.spanning import flood

logger = logging.getLogger(__name__)

# positive-weight APSP: scaled graph -> (distances, metrics)
Subroutine = Callable[[WeightedGraph], Tuple[DistanceMatrix, RoundMetrics]]


@dataclass
class ApproxConfig:
    epsilon: Fraction
    plugin: Optional[Subroutine] = None

    def __post_init__(self):
        self.epsilon = as_fraction(self.epsilon)

    @property
    def subroutine(self) -> str:
        return "exact" if self.plugin is None else "plugin"


def as_fraction(value: Union[Fraction, float, int, str]) -> Fraction:
    """Exact rational from user input; floats go through their decimal form."""
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


def zero_reachability(
    graph: WeightedGraph, config: Optional[EngineConfig] = None, cross_check: bool = True
) -> Tuple[Set[Tuple[NodeId, NodeId]], RoundMetrics]:
    """
    Ordered pairs joined by a path of zero-weight edges, reflexive pairs included.

    One flood per source over zero-weight out-edges, run in sequence.

    Raises:
        AlgorithmError: the distributed result disagrees with the sequential closure
    """
    if graph.has_negative_weight:
        raise NegativeWeight("zero reachability requires non-negative weights")
    config = (config or EngineConfig.for_graph(graph)).with_directed_only()

    def zero_out_edges(view):
        return [v for v, w in view.out_edges if w == 0]

    pairs: Set[Tuple[NodeId, NodeId]] = set()
    metrics = RoundMetrics()
    for x in range(graph.n):
        reached, run_metrics = flood(graph, x, config, edge_filter=zero_out_edges)
        pairs.update((x, v) for v in reached)
        metrics = metrics.combine(run_metrics)

    if cross_check:
        expected = zero_weight_closure(graph) | {(v, v) for v in range(graph.n)}
        if expected != pairs:
            logger.error(f"Zero reachability mismatch: {sorted(expected ^ pairs)[:5]}")
            raise AlgorithmError("distributed zero reachability disagrees with closure")
    return pairs, metrics


def scale_weights(graph: WeightedGraph) -> WeightedGraph:
    """w' = 1 for zero edges, n²·w otherwise."""
    if graph.has_negative_weight:
        raise NegativeWeight("weight scaling requires non-negative weights")
    factor = graph.n * graph.n
    edges = tuple(Edge(e.u, e.v, 1 if e.w == 0 else factor * e.w) for e in graph.edges)
    return validate(WeightedGraph(
        n=graph.n, edges=edges, directed=graph.directed, weight_mode=WeightMode.NONNEGATIVE
    ))


def exact_subroutine(scaled: WeightedGraph) -> Tuple[DistanceMatrix, RoundMetrics]:
    """All-sources Bellman-Ford on the scaled graph, n - 1 rounds."""
    trees, metrics = distributed_bellman_ford(
        scaled, range(scaled.n), max(0, scaled.n - 1), config=EngineConfig.for_graph(scaled)
    )
    matrix = DistanceMatrix(n=scaled.n, sources=tuple(range(scaled.n)))
    for x, tree in trees.items():
        for v, entry in tree.entries.items():
            matrix.set(x, v, entry.dist)
    return matrix, metrics


def approx_apsp(
    graph: WeightedGraph,
    config: ApproxConfig,
    engine_config: Optional[EngineConfig] = None,
) -> Tuple[DistanceMatrix, PhaseMetrics]:
    """
    Estimates with d(u, v) <= est(u, v) <= (1+ε)·d(u, v) for every pair.

    Zero-reachable pairs get exactly 0; every other pair gets the scaled
    distance divided by n², rounded down to a multiple of 1/n².

    Raises:
        EpsilonTooSmall: ε <= 3/n
        NegativeWeight: the graph has a negative edge
    """
    n = graph.n
    if config.epsilon <= Fraction(3, n):
        raise EpsilonTooSmall(config.epsilon, n)
    if graph.has_negative_weight:
        raise NegativeWeight("approximate APSP requires non-negative weights")

    phases = PhaseMetrics()
    zero_pairs, zero_metrics = zero_reachability(graph, engine_config)
    phases.add("zero-reachability", zero_metrics)

    scaled = scale_weights(graph)
    subroutine = config.plugin or exact_subroutine
    scaled_distances, scaled_metrics = subroutine(scaled)
    phases.add("scaled-apsp", scaled_metrics)

    factor = n * n
    matrix = DistanceMatrix(n=n, sources=tuple(range(n)))
    for u in range(n):
        for v in range(n):
            if (u, v) in zero_pairs:
                matrix.set(u, v, Fraction(0))
                continue
            d = scaled_distances.get(u, v)
            if d is not INF:
                matrix.set(u, v, Fraction(math.floor(d), factor))

    logger.info(
        f"Approximate APSP eps={config.epsilon} ({config.subroutine}): "
        f"{phases.total_rounds} rounds, {len(zero_pairs) - n} zero pairs"
    )
    return matrix, phases
