"""Benchmark sweeps over generated graphs, emitted as long-format CSV."""
import csv
import io
import logging
import os
from fractions import Fraction
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from congest.graph import GeneratorSpec, GraphKind, WeightMode, generate
from services.runner import ALGORITHMS, InvalidRequest, RunRequest, default_hop_bound, execute

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ["algorithm", "n", "m", "k", "h", "phase", "rounds", "congestion", "messages"]

# approx needs epsilon > 3/n; smaller sizes are skipped
BENCH_EPSILON = Fraction(1)


@dataclass
class BenchSuite:
    algorithm: str
    sizes: List[int] = field(default_factory=list)
    edge_probability: float = 0.3
    max_weight: int = 10
    seed: int = 0
    k: Optional[int] = None
    h: Optional[int] = None
    kind: GraphKind = GraphKind.GNP
    workers: Optional[int] = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidRequest(f"unknown algorithm '{self.algorithm}'")
        if self.workers is None:
            self.workers = int(os.getenv("BENCH_WORKERS", "1"))


def _source_count(suite: BenchSuite, n: int) -> int:
    if suite.algorithm == "apsp":
        return n
    if suite.k is not None:
        return max(1, min(n, suite.k))
    return default_hop_bound(n)


def runnable_sizes(suite: BenchSuite) -> List[int]:
    """Sizes the suite can run; approx drops every n with epsilon <= 3/n."""
    if suite.algorithm != "approx":
        return list(suite.sizes)
    sizes = [n for n in suite.sizes if BENCH_EPSILON * n > 3]
    skipped = [n for n in suite.sizes if n not in sizes]
    if skipped:
        logger.warning(f"Skipping approx sizes {skipped}: epsilon {BENCH_EPSILON} needs n > 3")
    return sizes


def _bench_one(job: Tuple[BenchSuite, int]) -> List[Dict[str, Any]]:
    suite, n = job
    spec = GeneratorSpec(
        kind=suite.kind,
        n=n,
        edge_probability=suite.edge_probability,
        weight_low=1,
        weight_high=suite.max_weight,
        seed=suite.seed,
        weight_mode=WeightMode.NONNEGATIVE,
    )
    graph = generate(spec)
    k = _source_count(suite, n)
    h = suite.h if suite.h is not None else default_hop_bound(n)
    request = RunRequest(
        algorithm=suite.algorithm,
        sources=tuple(range(k)),
        h=h,
        epsilon=BENCH_EPSILON if suite.algorithm == "approx" else None,
        seed=suite.seed,
    )
    report = execute(graph, request).report
    if not report.ok:
        logger.warning(f"Bench run {suite.algorithm} n={n} failed verification")

    base = {"algorithm": suite.algorithm, "n": n, "m": graph.m, "k": k, "h": h}
    rows = [
        {**base, "phase": p.name, "rounds": p.rounds, "congestion": p.congestion,
         "messages": p.messages}
        for p in report.phases
    ]
    rows.append({
        **base,
        "phase": "total",
        "rounds": report.total_rounds,
        "congestion": report.congestion,
        "messages": sum(p.messages for p in report.phases),
    })
    return rows


def run_bench(suite: BenchSuite) -> List[Dict[str, Any]]:
    """
    Run the suite's algorithm once per runnable size.

    Returns:
        Rows in size order, one per phase plus a ``total`` row per size
    """
    jobs = [(replace(suite, workers=1), n) for n in runnable_sizes(suite)]
    if not jobs:
        return []

    logger.info(f"Bench {suite.algorithm} over sizes {suite.sizes} with {suite.workers} workers")
    if suite.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=suite.workers) as executor:
            results = list(executor.map(_bench_one, jobs))
    else:
        results = [_bench_one(job) for job in jobs]
    return [row for rows in results for row in rows]


def rows_to_csv(rows: List[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def total_rounds(rows: List[Dict[str, Any]]) -> Dict[int, int]:
    return {row["n"]: row["rounds"] for row in rows if row["phase"] == "total"}
