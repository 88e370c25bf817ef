"""Iteration reports and their self-describing JSON document form."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from aloxbench.committee import EvalReport
from aloxbench.errors import MigrationError

REPORT_SCHEMA = 1


@dataclass
class IterationReport:
    iteration: int
    dataset_size_before: int
    dataset_size: int
    classification: dict  # temperature label -> {"counts": {...}, "fractions": {...}, "n_frames"}
    candidate_fraction: float  # over every explored frame
    failed_fraction: float
    heldout: EvalReport
    benchmark: EvalReport | None
    epsilon_histogram: dict  # {"edges", "counts": {temperature label: [...]}}; last bin is overflow
    pca: dict | None
    selected_before_dedup: int
    selected_after_dedup: int
    label_rejected: int
    added: int
    failed_legs: list = field(default_factory=list)
    converged: bool = False
    stop_reason: str | None = None
    wall_times: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["heldout"] = self.heldout.to_dict()
        d["benchmark"] = None if self.benchmark is None else self.benchmark.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> IterationReport:
        d = dict(d)
        d["heldout"] = EvalReport.from_dict(d["heldout"])
        if d.get("benchmark") is not None:
            d["benchmark"] = EvalReport.from_dict(d["benchmark"])
        return cls(**d)


def report_document(report: IterationReport, status: dict) -> dict:
    return {"format": "aloxbench-report", "schema_version": REPORT_SCHEMA,
            "report": report.to_dict(), "status": status}


def dumps_document(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def loads_document(text: str) -> tuple[IterationReport, dict]:
    doc = json.loads(text)
    if doc.get("format") != "aloxbench-report":
        raise MigrationError("not a report document")
    if doc.get("schema_version") != REPORT_SCHEMA:
        raise MigrationError(f"report schema {doc.get('schema_version')} is not {REPORT_SCHEMA}")
    return IterationReport.from_dict(doc["report"]), doc["status"]


def strip_wall_times(text: str) -> str:
    """Canonical text with wall-times removed, for determinism comparisons."""
    doc = json.loads(text)
    doc["report"].pop("wall_times", None)
    return dumps_document(doc)
