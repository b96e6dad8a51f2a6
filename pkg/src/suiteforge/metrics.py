"""Unbiased pass@k estimation and before/after aggregation.

For a task with ``n`` samples of which ``c`` pass, the probability that a
uniformly drawn size-``k`` subset contains at least one passing sample is

    pass@k = 1 - C(n-c, k) / C(n, k)

evaluated through the numerically stable product form
``1 - prod_{i=n-c+1..n} (1 - k/i)`` so that n in the hundreds never
overflows.  Aggregates are arithmetic means of per-task values; because
every sample passing the plus suite also passes the base suite, the
aggregate drop (base minus plus) is never negative.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .errors import DomainError

GREEDY_LABEL = "1*"


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased estimator of the probability that at least one of ``k``
    draws from ``n`` samples (``c`` of them correct) passes."""
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    if k > n:
        raise DomainError(f"k={k} exceeds sample count n={n}")
    if not 0 <= c <= n:
        raise DomainError(f"c={c} outside 0..{n}")
    if c == 0:
        return 0.0
    if n - c < k:
        return 1.0
    prod = 1.0
    for i in range(n - c + 1, n + 1):
        prod *= 1.0 - k / i
    return 1.0 - prod


@dataclass(frozen=True)
class TaskOutcome:
    """Pass counts for one task on both suites."""

    task_id: str
    n: int
    c_base: int
    c_plus: int

    def __post_init__(self) -> None:
        if not 0 <= self.c_plus <= self.c_base <= self.n:
            raise DomainError(
                f"task {self.task_id!r}: need 0 <= c_plus <= c_base <= n, "
                f"got c_plus={self.c_plus}, c_base={self.c_base}, n={self.n}"
            )

    def to_record(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id, "n": self.n,
            "c_base": self.c_base, "c_plus": self.c_plus,
        }


def aggregate(outcomes: Sequence[TaskOutcome], k: int) -> tuple[float, float]:
    """Mean per-task pass@k over all tasks, for base and plus suites."""
    if not outcomes:
        return 0.0, 0.0
    base = sum(pass_at_k(o.n, o.c_base, k) for o in outcomes) / len(outcomes)
    plus = sum(pass_at_k(o.n, o.c_plus, k) for o in outcomes) / len(outcomes)
    return base, plus


@dataclass
class EvalReport:
    """Per-task outcomes plus aggregates; self-describing via config echo."""

    outcomes: list[TaskOutcome]
    ks: list[int]
    greedy: bool = False
    config: dict[str, Any] = field(default_factory=dict)
    counterexamples: dict[str, list[dict]] = field(default_factory=dict)
    tool: str = "suiteforge"
    version: str = "0.1.0"

    def k_label(self, k: int) -> str:
        if k == 1 and self.greedy:
            return GREEDY_LABEL
        return str(k)

    def aggregates(self) -> dict[int, tuple[float, float]]:
        return {k: aggregate(self.outcomes, k) for k in self.ks}

    def to_records(self) -> list[dict[str, Any]]:
        records: list[dict[str, Any]] = []
        for outcome in self.outcomes:
            rec = outcome.to_record()
            rec["pass_at_k"] = {
                self.k_label(k): {
                    "base": pass_at_k(outcome.n, outcome.c_base, k),
                    "plus": pass_at_k(outcome.n, outcome.c_plus, k),
                }
                for k in self.ks
            }
            examples = self.counterexamples.get(outcome.task_id)
            if examples:
                rec["counterexamples"] = examples
            records.append(rec)
        aggregates = {
            self.k_label(k): {"base": base, "plus": plus, "drop": base - plus}
            for k, (base, plus) in self.aggregates().items()
        }
        records.append({
            "aggregate": aggregates,
            "tasks": len(self.outcomes),
            "config": self.config,
            "tool": self.tool,
            "version": self.version,
            "greedy": self.greedy,
        })
        return records

    @classmethod
    def from_records(cls, records: Iterable[dict[str, Any]]) -> "EvalReport":
        outcomes: list[TaskOutcome] = []
        counterexamples: dict[str, list[dict]] = {}
        tail: dict[str, Any] = {}
        ks: list[int] = []
        for rec in records:
            if "aggregate" in rec:
                tail = rec
                continue
            outcomes.append(TaskOutcome(
                task_id=rec["task_id"], n=rec["n"],
                c_base=rec["c_base"], c_plus=rec["c_plus"],
            ))
            if rec.get("counterexamples"):
                counterexamples[rec["task_id"]] = rec["counterexamples"]
            if not ks and rec.get("pass_at_k"):
                ks = [int(label.rstrip("*")) for label in rec["pass_at_k"]]
        return cls(
            outcomes=outcomes, ks=ks or [1],
            greedy=bool(tail.get("greedy", False)),
            config=tail.get("config", {}),
            counterexamples=counterexamples,
            tool=tail.get("tool", "suiteforge"),
            version=tail.get("version", "0.1.0"),
        )


def _pct(x: float) -> str:
    return f"{100.0 * x:5.1f}"


def render_report(report: EvalReport, fmt: str = "table") -> str:
    """Deterministic text rendering: before/after rows per k, then a
    per-task breakdown; ``records`` yields the machine-readable lines."""
    if fmt == "records":
        return "\n".join(
            json.dumps(rec, ensure_ascii=False, sort_keys=True)
            for rec in report.to_records()
        ) + "\n"
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")

    lines: list[str] = []
    labels = [f"pass@{report.k_label(k)}" for k in report.ks]
    header = f"{'suite':<8}" + "".join(f"{label:>12}" for label in labels)
    lines.append(header)
    lines.append("-" * len(header))
    aggregates = report.aggregates()
    base_row = [aggregates[k][0] for k in report.ks]
    plus_row = [aggregates[k][1] for k in report.ks]
    lines.append(f"{'base':<8}" + "".join(f"{_pct(v):>12}" for v in base_row))
    lines.append(f"{'plus':<8}" + "".join(f"{_pct(v):>12}" for v in plus_row))
    lines.append(f"{'drop':<8}" + "".join(
        f"{_pct(b - p):>12}" for b, p in zip(base_row, plus_row)
    ))
    if report.outcomes:
        lines.append("")
        width = max(len(o.task_id) for o in report.outcomes)
        width = max(width, len("task"))
        lines.append(
            f"{'task':<{width}}  {'n':>4} {'c_base':>7} {'c_plus':>7}"
        )
        for outcome in report.outcomes:
            lines.append(
                f"{outcome.task_id:<{width}}  {outcome.n:>4} "
                f"{outcome.c_base:>7} {outcome.c_plus:>7}"
            )
    return "\n".join(lines) + "\n"
