"""Versioned JSON run report."""
import uuid
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from congest.engine import PhaseMetrics
from congest.graph import WeightedGraph

REPORT_SCHEMA_VERSION = 2


class Verdict(str, Enum):
    EXACT = "exact"
    WITHIN_EPSILON = "within-epsilon"
    FAIL = "FAIL"


class PhaseReport(BaseModel):
    name: str
    rounds: int
    congestion: int
    messages: int


class GraphInfo(BaseModel):
    n: int
    m: int
    directed: bool
    weight_mode: str
    max_weight: int
    fingerprint: str

    @classmethod
    def from_graph(cls, graph: WeightedGraph) -> "GraphInfo":
        return cls(
            n=graph.n,
            m=graph.m,
            directed=graph.directed,
            weight_mode=graph.weight_mode.value,
            max_weight=graph.max_weight,
            fingerprint=graph.fingerprint(),
        )


class RunReport(BaseModel):
    """Outcome of one algorithm run, verified against a sequential oracle."""
    schema_version: int = REPORT_SCHEMA_VERSION
    run_id: str = Field(default_factory=lambda: uuid.uuid4().hex)
    algorithm: str
    graph: GraphInfo
    config: Dict[str, Any] = Field(default_factory=dict)
    phases: List[PhaseReport] = Field(default_factory=list)
    total_rounds: int = 0
    congestion: int = 0
    verdict: Verdict
    violations: List[str] = Field(default_factory=list)
    blocker_set: Optional[List[int]] = None
    counters: Dict[str, int] = Field(default_factory=dict)
    envelopes: Dict[str, float] = Field(default_factory=dict)
    envelope_checks: Dict[str, bool] = Field(default_factory=dict)
    wall_time_seconds: float = 0.0
    started_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))

    @property
    def ok(self) -> bool:
        return self.verdict != Verdict.FAIL


def phase_reports(phases: PhaseMetrics) -> List[PhaseReport]:
    return [
        PhaseReport(
            name=name,
            rounds=metrics.rounds,
            congestion=metrics.congestion(),
            messages=metrics.total_messages,
        )
        for name, metrics in phases.phases.items()
    ]
