"""Differential testing: reference outputs, candidate verdicts, cross-checks.

The ground truth (uninstrumented) runs once per suite to produce a
reference table of expected outputs and per-case timing; every candidate
sample is then judged case by case against that table, with equivalence
under the task's float tolerance and a per-case timeout derived from the
reference timing.

A ground truth that crashes or times out on a contract-valid input is a
dataset defect; by default that halts evaluation for the task instead of
being silently skipped.
"""

from __future__ import annotations

import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

from .backend import (
    ExecBackend,
    ExecRequest,
    ExecutionResult,
    MODE_CANDIDATE,
    MODE_REFERENCE,
    STATUS_OK,
    timeout_for,
)
from .errors import GroundTruthDefect, ProgramLoadError
from .values import TestInput, decode, equivalent

REFERENCE_RUNS = 3
REFERENCE_TIMEOUT_S = 5.0
FAILURE_RENDER_CAP = 4096


@dataclass(frozen=True)
class RefEntry:
    """Expected output and timing for one input."""

    input: TestInput
    expected: str  # canonical text
    t_gt_s: float
    timeout_s: float


class ReferenceTable:
    """Immutable map from input digest to its reference entry."""

    def __init__(self, task_id: str, entries: Sequence[RefEntry],
                 excluded: Sequence[tuple[str, str]] = ()) -> None:
        self.task_id = task_id
        self._entries = {entry.input.digest: entry for entry in entries}
        self._ordered = list(entries)
        self.excluded = list(excluded)  # (input canonical, status)

    def entry(self, ti: TestInput) -> RefEntry:
        entry = self._entries.get(ti.digest)
        if entry is None:
            raise KeyError(f"no reference entry for input {ti.canonical[:80]}")
        return entry

    def has(self, ti: TestInput) -> bool:
        return ti.digest in self._entries

    def entries(self) -> list[RefEntry]:
        return list(self._ordered)

    def __len__(self) -> int:
        return len(self._entries)


def reference_outputs(
    task,
    suite: Sequence[TestInput],
    backend: ExecBackend,
    runs: int = REFERENCE_RUNS,
    default_timeout_s: float = REFERENCE_TIMEOUT_S,
    on_defect: Literal["raise", "exclude"] = "raise",
) -> ReferenceTable:
    """Run the uninstrumented ground truth per case; record outputs and the
    median wall time of ``runs`` repetitions.

    Any non-ok ground-truth status raises :class:`GroundTruthDefect`
    carrying the offending input, unless ``on_defect="exclude"`` drops the
    input and notes it in ``table.excluded``.
    """
    if not suite:
        return ReferenceTable(task.task_id, [])
    req = ExecRequest(
        program=task.ground_truth,
        entry_point=task.entry_point,
        cases=tuple(ti.canonical for ti in suite),
        mode=MODE_REFERENCE,
        timeout_s=default_timeout_s,
    )
    first = backend.run_batch(req)
    timings: list[list[float]] = [[r.wall_time_s] for r in first]
    for _ in range(max(0, runs - 1)):
        for i, result in enumerate(backend.run_batch(req)):
            timings[i].append(result.wall_time_s)

    entries: list[RefEntry] = []
    excluded: list[tuple[str, str]] = []
    for ti, result, times in zip(suite, first, timings):
        if result.status != STATUS_OK:
            if on_defect == "raise":
                raise GroundTruthDefect(
                    f"ground truth for {task.task_id!r} returned status "
                    f"{result.status!r} on a valid input",
                    input_text=ti.canonical, status=result.status,
                    task_id=task.task_id,
                )
            excluded.append((ti.canonical, result.status))
            continue
        t_gt = statistics.median(times)
        entries.append(RefEntry(
            input=ti, expected=result.output or "",
            t_gt_s=t_gt, timeout_s=timeout_for(t_gt),
        ))
    return ReferenceTable(task.task_id, entries, excluded)


@dataclass(frozen=True)
class FailureDetail:
    """First failing case of a sample, rendered for reports."""

    input: str
    status: str
    expected: str | None = None
    actual: str | None = None
    message: str | None = None

    def render(self) -> str:
        parts = [f"input={self.input}", f"status={self.status}"]
        if self.expected is not None:
            parts.append(f"expected={self.expected}")
        if self.actual is not None:
            parts.append(f"actual={self.actual}")
        if self.message:
            parts.append(f"message={self.message}")
        text = " ".join(parts)
        if len(text) > FAILURE_RENDER_CAP:
            text = text[: FAILURE_RENDER_CAP - 3] + "..."
        return text

    def to_record(self) -> dict:
        return {k: v for k, v in {
            "input": self.input, "status": self.status,
            "expected": self.expected, "actual": self.actual,
            "message": self.message,
        }.items() if v is not None}


@dataclass(frozen=True)
class SampleVerdict:
    sample_id: str
    suite: str  # "base" | "plus"
    passed: bool
    first_failure: FailureDetail | None = None

    def to_record(self) -> dict:
        rec: dict = {
            "sample_id": self.sample_id, "suite": self.suite,
            "passed": self.passed,
        }
        if self.first_failure is not None:
            rec["first_failure"] = self.first_failure.to_record()
        return rec


def _case_failure(ti: TestInput, result: ExecutionResult,
                  expected: str) -> FailureDetail:
    if result.status == STATUS_OK:
        return FailureDetail(
            input=ti.canonical, status="mismatch",
            expected=expected, actual=result.output,
        )
    return FailureDetail(
        input=ti.canonical, status=result.status,
        expected=expected, message=result.message,
    )


def judge_sample(
    task,
    program: str,
    sample_id: str,
    suite_label: str,
    suite: Sequence[TestInput],
    table: ReferenceTable,
    backend: ExecBackend,
    short_circuit: bool = True,
    chunk_size: int = 32,
) -> SampleVerdict:
    """Pass iff every case is ok and output-equivalent within the task's
    tolerance.

    ``short_circuit`` submits cases in chunks and stops at the first
    failure; full-run mode walks the entire suite before answering (the
    verdict is the same; diagnostics callers may prefer it).
    """
    if not suite:
        return SampleVerdict(sample_id, suite_label, True)
    entries = [table.entry(ti) for ti in suite]
    step = chunk_size if short_circuit else len(suite)
    failure: FailureDetail | None = None
    for start in range(0, len(suite), step):
        block = suite[start:start + step]
        block_entries = entries[start:start + step]
        request = ExecRequest(
            program=program,
            entry_point=task.entry_point,
            cases=tuple(ti.canonical for ti in block),
            mode=MODE_CANDIDATE,
            timeout_s=tuple(entry.timeout_s for entry in block_entries),
        )
        try:
            results = backend.run_batch(request)
        except ProgramLoadError as exc:
            failure = FailureDetail(
                input=block[0].canonical, status="program-load-error",
                message=str(exc),
            )
            break
        for ti, entry, result in zip(block, block_entries, results):
            if result.status != STATUS_OK:
                failure = _case_failure(ti, result, entry.expected)
                break
            if not equivalent(decode(result.output), decode(entry.expected),
                              task.atol):
                failure = _case_failure(ti, result, entry.expected)
                break
        if failure is not None:
            break
    return SampleVerdict(sample_id, suite_label, failure is None, failure)


@dataclass(frozen=True)
class Disagreement:
    """One input where two implementations differ."""

    input: str
    original_status: str
    original_output: str | None
    alternative_status: str
    alternative_output: str | None

    def to_record(self) -> dict:
        return {
            "input": self.input,
            "original": {"status": self.original_status,
                         "output": self.original_output},
            "alternative": {"status": self.alternative_status,
                            "output": self.alternative_output},
        }


def cross_check(
    task,
    alt_ground_truth: str,
    suite: Sequence[TestInput],
    backend: ExecBackend,
    default_timeout_s: float = REFERENCE_TIMEOUT_S,
) -> list[Disagreement]:
    """All inputs where the task's ground truth and an independently written
    implementation disagree (status mismatch, or outputs beyond the task's
    tolerance)."""
    if not suite:
        return []
    results: dict[str, list[ExecutionResult]] = {}
    for label, program in (("original", task.ground_truth),
                           ("alternative", alt_ground_truth)):
        req = ExecRequest(
            program=program,
            entry_point=task.entry_point,
            cases=tuple(ti.canonical for ti in suite),
            mode=MODE_REFERENCE,
            timeout_s=default_timeout_s,
        )
        results[label] = backend.run_batch(req)
    disagreements: list[Disagreement] = []
    for ti, orig, alt in zip(suite, results["original"], results["alternative"]):
        same_status = orig.status == alt.status
        if same_status and orig.status == STATUS_OK:
            if equivalent(decode(orig.output), decode(alt.output), task.atol):
                continue
        elif same_status:
            continue  # both failed the same way; not an output disagreement
        disagreements.append(Disagreement(
            input=ti.canonical,
            original_status=orig.status, original_output=orig.output,
            alternative_status=alt.status, alternative_output=alt.output,
        ))
    return disagreements


@dataclass
class TaskEvaluation:
    """Verdicts and counts for one task across both suites."""

    task_id: str
    n: int
    c_base: int
    c_plus: int
    verdicts: list[SampleVerdict]
    excluded_inputs: list[tuple[str, str]]

    def counterexamples(self, cap: int = 10) -> list[dict]:
        out = []
        for verdict in self.verdicts:
            if not verdict.passed and verdict.first_failure is not None:
                rec = verdict.to_record()
                out.append(rec)
            if len(out) >= cap:
                break
        return out


def evaluate_task(
    task,
    samples: Sequence,
    backend_factory: Callable[[], ExecBackend],
    parallel: int = 1,
    short_circuit: bool = True,
    on_defect: Literal["raise", "exclude"] = "raise",
) -> TaskEvaluation:
    """Judge every sample of one task on its base and plus suites.

    The reference table is built once over the plus suite (a superset of
    the base suite) and shared, immutable, by all workers.
    """
    base_suite = task.base_suite()
    plus_suite = task.plus_suite()
    table_backend = backend_factory()
    table = reference_outputs(task, plus_suite, table_backend,
                              on_defect=on_defect)
    if table.excluded:
        dropped = {text for text, _ in table.excluded}
        base_suite = [ti for ti in base_suite if ti.canonical not in dropped]
        plus_suite = [ti for ti in plus_suite if ti.canonical not in dropped]

    def judge(sample) -> tuple[SampleVerdict, SampleVerdict]:
        backend = backend_factory()
        base_verdict = judge_sample(
            task, sample.program, sample.sample_id, "base", base_suite,
            table, backend, short_circuit=short_circuit,
        )
        plus_verdict = judge_sample(
            task, sample.program, sample.sample_id, "plus", plus_suite,
            table, backend, short_circuit=short_circuit,
        )
        return base_verdict, plus_verdict

    ordered = list(samples)
    if parallel > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            pairs = list(pool.map(judge, ordered))
    else:
        pairs = [judge(sample) for sample in ordered]

    verdicts: list[SampleVerdict] = []
    c_base = c_plus = 0
    for base_verdict, plus_verdict in pairs:
        verdicts.extend((base_verdict, plus_verdict))
        c_base += base_verdict.passed
        c_plus += plus_verdict.passed
    return TaskEvaluation(
        task_id=task.task_id, n=len(ordered),
        c_base=c_base, c_plus=c_plus, verdicts=verdicts,
        excluded_inputs=table.excluded,
    )
