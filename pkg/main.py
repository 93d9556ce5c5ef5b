"""Command-line entry point: generate graphs, run and verify algorithms, benchmark sweeps."""
import os
import sys
import json
import argparse
import logging
from datetime import datetime
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from congest.engine import BandwidthMode
from congest.errors import (
    CongestError,
    EpsilonTooSmall,
    GraphFormatError,
    GraphValidationError,
)
from congest.graph import GeneratorSpec, GraphKind, WeightMode, generate, read_graph, serialize_graph
from algorithms.csssp import CsSspMethod
from algorithms.ksp import HRule
from algorithms.pipelined import ScheduleMode
from database.results_store import ResultsStore
from services.bench import BenchSuite, rows_to_csv, run_bench
from services.report import RunReport
from services.runner import ALGORITHMS, InvalidRequest, RunRequest, distances_csv, execute
from utils.error_messages import (
    get_epsilon_too_small_message,
    get_unknown_algorithm_message,
    get_verification_failed_message,
    parse_sources,
    validate_epsilon,
    validate_generator_spec,
    validate_sources,
)
from utils.monitoring import capture_exception, setup_monitoring

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 2
EXIT_USAGE = 3
EXIT_ALGORITHM_ERROR = 4

logger = logging.getLogger(__name__)


class StructuredFormatter(logging.Formatter):
    """Formatter that outputs one JSON object per log record."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON."""
        log_data = {
            "message": record.getMessage(),
            "level": record.levelname.lower(),
            "timestamp": datetime.utcnow().isoformat() + "Z",
            "logger": record.name,
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        # Add any extra fields from the log record
        if hasattr(record, "extra_fields"):
            log_data.update(record.extra_fields)

        return json.dumps(log_data)


def configure_logging():
    # stdout may carry CSV, so logs go to stderr
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(StructuredFormatter())
    logging.basicConfig(
        level=os.getenv("LOG_LEVEL", "INFO"),
        handlers=[handler],
        force=True,
    )


class UsageError(Exception):
    """Bad command-line input."""


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose errors exit with the usage code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="congest-sim", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    gen = commands.add_parser("generate", help="Write a generated graph in edge-list format")
    gen.add_argument("--kind", choices=[k.value for k in GraphKind], default="gnp")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--p", type=float, default=0.3, help="Edge probability")
    gen.add_argument("--lambda", dest="max_weight", type=int, default=10, help="Largest weight")
    gen.add_argument("--low", type=int, default=1, help="Smallest weight")
    gen.add_argument("--w", type=int, help="Give every edge this weight")
    gen.add_argument("--zero-frac", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--undirected", action="store_true")
    gen.add_argument("--arbitrary", action="store_true", help="Allow negative weights")
    gen.add_argument("--output", help="Output path (stdout when omitted)")

    run = commands.add_parser("run", help="Run an algorithm and verify it against an oracle")
    run.add_argument("graph", help="Graph file")
    run.add_argument("algorithm", help=f"One of: {', '.join(ALGORITHMS)}")
    run.add_argument("--sources", help="Comma-separated IDs or letters (a=0)")
    run.add_argument("--source", help="Source for single-source algorithms")
    run.add_argument("--h", type=int, help="Hop bound")
    run.add_argument("--delta-cap", type=int, help="Largest distance propagated")
    run.add_argument("--schedule", choices=[m.value for m in ScheduleMode], default="frontier")
    run.add_argument("--method", choices=[m.value for m in CsSspMethod], default="pipelined")
    run.add_argument("--h-rule", choices=[r.value for r in HRule], default="explicit")
    run.add_argument("--epsilon", help="Approximation parameter, e.g. 0.5 or 1/2")
    run.add_argument("--seed", type=int, default=0, help="Center sampling seed")
    run.add_argument(
        "--bandwidth", choices=[b.value for b in BandwidthMode], default="unbounded-metered"
    )
    run.add_argument("--report", help="Write the JSON report here")
    run.add_argument("--distances", help="Write distances CSV here ('-' for stdout)")
    run.add_argument("--db", help="Results database (defaults to DATABASE_PATH)")

    bench = commands.add_parser("bench", help="Sweep generated graphs and emit metrics CSV")
    bench.add_argument("--algorithm", required=True)
    bench.add_argument("--sizes", default="", help="Comma-separated n values")
    bench.add_argument("--kind", choices=[k.value for k in GraphKind], default="gnp")
    bench.add_argument("--p", type=float, default=0.3)
    bench.add_argument("--lambda", dest="max_weight", type=int, default=10)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--k", type=int)
    bench.add_argument("--h", type=int)
    bench.add_argument("--workers", type=int, help="Processes (defaults to BENCH_WORKERS)")
    bench.add_argument("--output", help="CSV path (stdout when omitted)")
    bench.add_argument("--db", help="Results database (defaults to DATABASE_PATH)")

    history = commands.add_parser("history", help="List runs stored in the results database")
    history.add_argument("--algorithm")
    history.add_argument("--db", help="Results database (defaults to DATABASE_PATH)")

    return parser


def _open_store(path: Optional[str]) -> Optional[ResultsStore]:
    path = path or os.getenv("DATABASE_PATH")
    if not path:
        return None
    store = ResultsStore(path)
    store.connect()
    store.initialize_schema()
    return store


def _write_output(text: str, path: Optional[str]):
    if not path or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def cmd_generate(args) -> int:
    low, high = args.low, args.max_weight
    if args.w is not None:
        low = high = args.w
    spec = GeneratorSpec(
        kind=GraphKind(args.kind),
        n=args.n,
        edge_probability=args.p,
        weight_low=low,
        weight_high=high,
        zero_fraction=args.zero_frac,
        seed=args.seed,
        directed=not args.undirected,
        weight_mode=WeightMode.ARBITRARY if args.arbitrary else WeightMode.NONNEGATIVE,
    )
    is_valid, error = validate_generator_spec(spec)
    if not is_valid:
        raise UsageError(error)

    graph = generate(spec)
    comments = [
        f"generated kind={args.kind} n={args.n} p={args.p} weights=[{low},{high}] "
        f"zero_frac={args.zero_frac} seed={args.seed}"
    ]
    _write_output(serialize_graph(graph, comments), args.output)
    logger.info(f"Generated {graph}")
    return EXIT_OK


def _build_request(args, n: int) -> RunRequest:
    if args.algorithm not in ALGORITHMS:
        raise UsageError(get_unknown_algorithm_message(args.algorithm, list(ALGORITHMS)))

    sources = ()
    if args.sources:
        is_valid, error = validate_sources(args.sources, n)
        if not is_valid:
            raise UsageError(error)
        sources = tuple(parse_sources(args.sources))

    source = None
    if args.source:
        is_valid, error = validate_sources(args.source, n)
        if not is_valid:
            raise UsageError(error)
        source = parse_sources(args.source)[0]

    epsilon = None
    if args.epsilon is not None:
        is_valid, error = validate_epsilon(args.epsilon)
        if not is_valid:
            raise UsageError(error)
        epsilon = Fraction(args.epsilon)

    if args.h is not None and args.h < 1:
        raise UsageError(f"--h must be at least 1 (got {args.h})")

    return RunRequest(
        algorithm=args.algorithm,
        sources=sources,
        source=source,
        h=args.h,
        delta_cap=args.delta_cap,
        schedule=ScheduleMode(args.schedule),
        method=CsSspMethod(args.method),
        h_rule=HRule(args.h_rule),
        epsilon=epsilon,
        seed=args.seed,
        bandwidth=BandwidthMode(args.bandwidth),
    )


def _log_summary(report: RunReport):
    logger.info("=" * 70)
    logger.info(f"{report.algorithm.upper()} RUN SUMMARY")
    logger.info("=" * 70)
    logger.info(f"Graph: n={report.graph.n} m={report.graph.m} ({report.graph.fingerprint[:12]})")
    for phase in report.phases:
        logger.info(
            f"  {phase.name:<22} rounds={phase.rounds:<8} congestion={phase.congestion:<6} "
            f"messages={phase.messages}"
        )
    logger.info(f"Total rounds: {report.total_rounds}  congestion: {report.congestion}")
    if report.blocker_set is not None:
        logger.info(f"Blocker set: {report.blocker_set}")
    logger.info(f"Verdict: {report.verdict.value}  ({report.wall_time_seconds:.2f}s)")
    logger.info("=" * 70)


def cmd_run(args) -> int:
    try:
        graph = read_graph(args.graph)
    except FileNotFoundError:
        raise UsageError(f"Graph file '{args.graph}' not found")
    request = _build_request(args, graph.n)

    try:
        outcome = execute(graph, request)
    except InvalidRequest as e:
        raise UsageError(str(e))
    except EpsilonTooSmall as e:
        logger.error(get_epsilon_too_small_message(e.epsilon, e.n))
        raise
    except CongestError as e:
        capture_exception(e, {"run": {
            "algorithm": request.algorithm,
            "graph_fingerprint": graph.fingerprint(),
            "n": graph.n,
        }})
        raise

    report = outcome.report
    _log_summary(report)
    if args.report:
        _write_output(report.model_dump_json(indent=2) + "\n", args.report)
    if args.distances and outcome.distances is not None:
        _write_output(distances_csv(outcome.distances), args.distances)

    store = _open_store(args.db)
    if store:
        try:
            store.save_run(report)
        except Exception as e:
            logger.error(f"Error saving run {report.run_id}: {e}")
        finally:
            store.close()

    if not report.ok:
        logger.error(get_verification_failed_message(report.algorithm, report.violations))
        return EXIT_VERIFICATION_FAILED
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.algorithm not in ALGORITHMS:
        raise UsageError(get_unknown_algorithm_message(args.algorithm, list(ALGORITHMS)))
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--sizes must be comma-separated integers (got '{args.sizes}')")
    if any(n < 1 for n in sizes):
        raise UsageError("every size must be at least 1")

    suite = BenchSuite(
        algorithm=args.algorithm,
        sizes=sizes,
        edge_probability=args.p,
        max_weight=args.max_weight,
        seed=args.seed,
        k=args.k,
        h=args.h,
        kind=GraphKind(args.kind),
        workers=args.workers,
    )
    rows = run_bench(suite)
    _write_output(rows_to_csv(rows), args.output)

    store = _open_store(args.db)
    if store:
        try:
            store.save_bench_rows(rows)
        except Exception as e:
            logger.error(f"Error saving bench rows: {e}")
        finally:
            store.close()
    return EXIT_OK


def cmd_history(args) -> int:
    store = _open_store(args.db)
    if store is None:
        raise UsageError("no results database; pass --db or set DATABASE_PATH")
    try:
        for run in store.list_runs(args.algorithm):
            sys.stdout.write(json.dumps(run) + "\n")
    finally:
        store.close()
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "bench": cmd_bench,
    "history": cmd_history,
}


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    configure_logging()
    setup_monitoring()

    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, GraphFormatError, GraphValidationError) as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except CongestError as e:
        logger.error(f"Algorithm error: {type(e).__name__}: {e}")
        return EXIT_ALGORITHM_ERROR


if __name__ == "__main__":
    sys.exit(main())
