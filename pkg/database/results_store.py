"""DuckDB store for run reports, per-phase metrics and bench rows."""
import duckdb
from typing import Optional, List, Dict, Any, Iterable
import logging
from pathlib import Path

from services.report import RunReport

logger = logging.getLogger(__name__)

MEMORY = ":memory:"


class ResultsStore:
    """Client for the results database."""

    def __init__(self, db_path: str):
        self.db_path = db_path
        if db_path != MEMORY:
            Path(db_path).parent.mkdir(parents=True, exist_ok=True)
        self.conn = None

    def connect(self):
        """Connect to DuckDB."""
        self.conn = duckdb.connect(self.db_path)
        logger.info(f"Connected to DuckDB at {self.db_path}")

    def close(self):
        """Close the database connection."""
        if self.conn:
            self.conn.close()
            self.conn = None
            logger.info("Closed DuckDB connection")

    def initialize_schema(self):
        """Create the results tables if they don't exist."""
        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                run_id VARCHAR PRIMARY KEY,
                schema_version INTEGER,
                algorithm VARCHAR,
                graph_fingerprint VARCHAR,
                n INTEGER,
                m INTEGER,
                verdict VARCHAR,
                total_rounds BIGINT,
                congestion BIGINT,
                wall_time_seconds DOUBLE,
                started_at TIMESTAMP,
                report_json VARCHAR
            );
        """)

        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS run_phases (
                run_id VARCHAR,
                phase_index INTEGER,
                phase VARCHAR,
                rounds BIGINT,
                congestion BIGINT,
                messages BIGINT,
                PRIMARY KEY (run_id, phase_index)
            );
        """)

        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS bench_rows (
                algorithm VARCHAR,
                n INTEGER,
                m INTEGER,
                k INTEGER,
                h INTEGER,
                phase VARCHAR,
                rounds BIGINT,
                congestion BIGINT,
                messages BIGINT,
                recorded_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            );
        """)

        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS app_metrics (
                metric_name VARCHAR PRIMARY KEY,
                metric_value BIGINT
            );
        """)

        logger.info("Database schema initialized")

    def save_run(self, report: RunReport):
        """
        Insert or replace a run report and its phase breakdown.

        Args:
            report: Completed run report
        """
        self.conn.execute("""
            INSERT OR REPLACE INTO runs
            (run_id, schema_version, algorithm, graph_fingerprint, n, m, verdict,
             total_rounds, congestion, wall_time_seconds, started_at, report_json)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        """, [
            report.run_id,
            report.schema_version,
            report.algorithm,
            report.graph.fingerprint,
            report.graph.n,
            report.graph.m,
            report.verdict.value,
            report.total_rounds,
            report.congestion,
            report.wall_time_seconds,
            report.started_at.replace(tzinfo=None),
            report.model_dump_json(),
        ])

        self.conn.execute("DELETE FROM run_phases WHERE run_id = ?", [report.run_id])
        for index, phase in enumerate(report.phases):
            self.conn.execute("""
                INSERT INTO run_phases (run_id, phase_index, phase, rounds, congestion, messages)
                VALUES (?, ?, ?, ?, ?, ?)
            """, [report.run_id, index, phase.name, phase.rounds, phase.congestion, phase.messages])

        self.increment_metric("runs_total")
        self.increment_metric(f"runs_{report.verdict.value.lower()}")
        logger.debug(f"Saved run {report.run_id} ({report.algorithm}, {report.verdict.value})")

    def get_run(self, run_id: str) -> Optional[RunReport]:
        """Load a stored report, or None if the run is unknown."""
        result = self.conn.execute(
            "SELECT report_json FROM runs WHERE run_id = ?", [run_id]
        ).fetchone()
        if not result:
            return None
        return RunReport.model_validate_json(result[0])

    def list_runs(self, algorithm: Optional[str] = None) -> List[Dict[str, Any]]:
        """
        Summaries of stored runs, newest first.

        Args:
            algorithm: Only list runs of this algorithm

        Returns:
            List of dicts with run_id, algorithm, verdict, total_rounds, congestion
        """
        query = """
            SELECT run_id, algorithm, verdict, total_rounds, congestion, n, m
            FROM runs
        """
        params: List[Any] = []
        if algorithm:
            query += " WHERE algorithm = ?"
            params.append(algorithm)
        query += " ORDER BY started_at DESC, run_id"

        rows = self.conn.execute(query, params).fetchall()
        return [
            {
                "run_id": row[0],
                "algorithm": row[1],
                "verdict": row[2],
                "total_rounds": row[3],
                "congestion": row[4],
                "n": row[5],
                "m": row[6],
            }
            for row in rows
        ]

    def get_phases(self, run_id: str) -> List[Dict[str, Any]]:
        rows = self.conn.execute("""
            SELECT phase, rounds, congestion, messages
            FROM run_phases WHERE run_id = ? ORDER BY phase_index
        """, [run_id]).fetchall()
        return [
            {"phase": r[0], "rounds": r[1], "congestion": r[2], "messages": r[3]}
            for r in rows
        ]

    def save_bench_rows(self, rows: Iterable[Dict[str, Any]]) -> int:
        """Append bench CSV rows; returns how many were stored."""
        count = 0
        for row in rows:
            self.conn.execute("""
                INSERT INTO bench_rows (algorithm, n, m, k, h, phase, rounds, congestion, messages)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
            """, [
                row["algorithm"], row["n"], row["m"], row["k"], row["h"],
                row["phase"], row["rounds"], row["congestion"], row["messages"],
            ])
            count += 1
        self.increment_metric("bench_rows_total", count)
        return count

    def get_bench_rows(self, algorithm: Optional[str] = None) -> List[Dict[str, Any]]:
        query = """
            SELECT algorithm, n, m, k, h, phase, rounds, congestion, messages
            FROM bench_rows
        """
        params: List[Any] = []
        if algorithm:
            query += " WHERE algorithm = ?"
            params.append(algorithm)
        query += " ORDER BY recorded_at, n"
        columns = ["algorithm", "n", "m", "k", "h", "phase", "rounds", "congestion", "messages"]
        return [dict(zip(columns, row)) for row in self.conn.execute(query, params).fetchall()]

    def increment_metric(self, metric_name: str, increment_by: int = 1):
        """
        Increment a metric value by a specified amount.

        Args:
            metric_name: Name of the metric to increment
            increment_by: Amount to increment by
        """
        try:
            self.conn.execute("""
                INSERT INTO app_metrics (metric_name, metric_value)
                VALUES (?, ?)
                ON CONFLICT (metric_name) DO UPDATE
                SET metric_value = app_metrics.metric_value + excluded.metric_value;
            """, [metric_name, increment_by])
        except Exception as e:
            logger.error(f"Error incrementing metric '{metric_name}': {e}")

    def get_metric(self, metric_name: str, default_value: int = 0) -> int:
        """
        Get the value of a specific metric.

        Args:
            metric_name: Name of the metric
            default_value: Value to return if metric not found

        Returns:
            Metric value or default
        """
        try:
            result = self.conn.execute(
                "SELECT metric_value FROM app_metrics WHERE metric_name = ?",
                [metric_name]
            ).fetchone()
            return result[0] if result else default_value
        except Exception as e:
            logger.error(f"Error getting metric '{metric_name}': {e}")
            return default_value

    def get_database_stats(self) -> Dict[str, Any]:
        """Row counts per table."""
        stats = {}
        for table in ("runs", "run_phases", "bench_rows"):
            stats[table] = self.conn.execute(f"SELECT COUNT(*) FROM {table}").fetchone()[0]
        stats["db_path"] = self.db_path
        return stats

