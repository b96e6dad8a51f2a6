"""Line-delimited record files: tasks, samples, generated suites, reports.

One JSON object per line, UTF-8, with a header record carrying the file
format version.  Argument tuples are stored as canonical text, never as
host-language literals, so loading a dataset executes nothing.  Files are
written atomically (temp file + rename).
"""

from __future__ import annotations

import ast
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

from . import contracts
from .errors import ParseError, SchemaError, SuiteforgeError, UnencodableValue
from .values import TestInput, decode, dedup_inputs

TASKS_FORMAT = "suiteforge.tasks/1"
SAMPLES_FORMAT = "suiteforge.samples/1"
SUITES_FORMAT = "suiteforge.suites/1"
SEEDS_FORMAT = "suiteforge.seeds/1"
REPORT_FORMAT = "suiteforge.report/1"

DEFAULT_ATOL = 1e-6


@dataclass(frozen=True)
class Task:
    """One benchmark problem."""

    task_id: str
    prompt: str
    entry_point: str
    ground_truth: str
    contract: tuple[str, ...] = ()
    base_inputs: tuple[str, ...] = ()
    atol: float = DEFAULT_ATOL
    expected_outputs: tuple[str, ...] | None = None
    plus_inputs: tuple[str, ...] | None = None

    def base_suite(self) -> list[TestInput]:
        return [TestInput.from_canonical(text) for text in self.base_inputs]

    def plus_suite(self) -> list[TestInput]:
        if self.plus_inputs is None:
            return self.base_suite()
        return [TestInput.from_canonical(text) for text in self.plus_inputs]

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "task_id": self.task_id,
            "prompt": self.prompt,
            "entry_point": self.entry_point,
            "ground_truth": self.ground_truth,
            "contract": list(self.contract),
            "base_inputs": list(self.base_inputs),
            "atol": self.atol,
        }
        if self.expected_outputs is not None:
            rec["expected_outputs"] = list(self.expected_outputs)
        if self.plus_inputs is not None:
            rec["plus_inputs"] = list(self.plus_inputs)
        return rec


@dataclass(frozen=True)
class Sample:
    """One candidate program for a task."""

    task_id: str
    sample_id: str
    program: str

    def to_record(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "sample_id": self.sample_id,
            "program": self.program,
        }


def _read_records(path: Path, expected_format: str) -> Iterator[tuple[int, dict]]:
    if not path.exists():
        raise SchemaError(f"file not found: {path}", path=str(path))
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(
                    f"record {lineno} is not valid JSON: {exc}",
                    record=lineno, path=str(path),
                ) from exc
            if not isinstance(obj, dict):
                raise SchemaError(
                    f"record {lineno} is not an object",
                    record=lineno, path=str(path),
                )
            if lineno == 1 and "format" in obj:
                if obj["format"] != expected_format:
                    raise SchemaError(
                        f"expected format {expected_format!r}, "
                        f"found {obj['format']!r}",
                        record=1, field="format", path=str(path),
                    )
                continue
            yield lineno, obj


def _require(rec: dict, lineno: int, path: Path, name: str, types: type | tuple) -> Any:
    if name not in rec:
        raise SchemaError(
            f"record {lineno} missing field {name!r}",
            record=lineno, field=name, path=str(path),
        )
    value = rec[name]
    if not isinstance(value, types):
        raise SchemaError(
            f"record {lineno} field {name!r} has wrong type",
            record=lineno, field=name, path=str(path),
        )
    return value


def _str_list(rec: dict, lineno: int, path: Path, name: str,
              default: list | None = None) -> list[str] | None:
    if name not in rec:
        return default
    value = rec[name]
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise SchemaError(
            f"record {lineno} field {name!r} must be a list of strings",
            record=lineno, field=name, path=str(path),
        )
    return value


def _validate_inputs(texts: Sequence[str], lineno: int, path: Path,
                     field_name: str) -> int | None:
    """Decode-check encoded argument tuples; returns their common arity."""
    arity: int | None = None
    for text in texts:
        try:
            ti = TestInput.from_canonical(text)
        except (ParseError, UnencodableValue, SuiteforgeError) as exc:
            raise SchemaError(
                f"record {lineno} field {field_name!r}: bad input {text[:80]!r}: {exc}",
                record=lineno, field=field_name, path=str(path),
            ) from exc
        if arity is None:
            arity = ti.arity
        elif ti.arity != arity:
            raise SchemaError(
                f"record {lineno} field {field_name!r}: inconsistent arity",
                record=lineno, field=field_name, path=str(path),
            )
    return arity


def load_tasks(path: str | Path) -> list[Task]:
    """Load and eagerly validate a task file.

    Checks uniqueness of ids, input arity consistency against the entry
    point signature, that the ground truth parses and defines the entry
    point, and pre-checks contract assertions.  Never executes program
    text.
    """
    path = Path(path)
    tasks: list[Task] = []
    seen: set[str] = set()
    for lineno, rec in _read_records(path, TASKS_FORMAT):
        task_id = _require(rec, lineno, path, "task_id", str)
        if task_id in seen:
            raise SchemaError(
                f"record {lineno}: duplicate task_id {task_id!r}",
                record=lineno, field="task_id", path=str(path),
            )
        seen.add(task_id)
        prompt = _require(rec, lineno, path, "prompt", str)
        entry_point = _require(rec, lineno, path, "entry_point", str)
        ground_truth = _require(rec, lineno, path, "ground_truth", str)
        contract = _str_list(rec, lineno, path, "contract", []) or []
        base_inputs = _str_list(rec, lineno, path, "base_inputs", []) or []
        plus_inputs = _str_list(rec, lineno, path, "plus_inputs", None)
        expected = _str_list(rec, lineno, path, "expected_outputs", None)
        atol = rec.get("atol", DEFAULT_ATOL)
        if not isinstance(atol, (int, float)) or atol < 0:
            raise SchemaError(
                f"record {lineno}: atol must be a non-negative number",
                record=lineno, field="atol", path=str(path),
            )

        try:
            params = contracts.entry_params(ground_truth, entry_point)
        except SuiteforgeError as exc:
            raise SchemaError(
                f"record {lineno}: {exc}",
                record=lineno, field="ground_truth", path=str(path),
            ) from exc
        try:
            contracts.check_contract(contract, params)
        except SchemaError as exc:
            raise SchemaError(
                f"record {lineno}: {exc.message}",
                record=lineno, field="contract", path=str(path),
            ) from exc

        arity = _validate_inputs(base_inputs, lineno, path, "base_inputs")
        if plus_inputs is not None:
            _validate_inputs(plus_inputs, lineno, path, "plus_inputs")
        if arity is not None:
            required = _required_params(ground_truth, entry_point)
            low, high = required
            if not (low <= arity <= high):
                raise SchemaError(
                    f"record {lineno}: inputs have arity {arity} but "
                    f"{entry_point} takes {low}..{high} arguments",
                    record=lineno, field="base_inputs", path=str(path),
                )
        if expected is not None:
            if len(expected) != len(base_inputs):
                raise SchemaError(
                    f"record {lineno}: expected_outputs length differs "
                    f"from base_inputs",
                    record=lineno, field="expected_outputs", path=str(path),
                )
            for text in expected:
                try:
                    decode(text)
                except (ParseError, SuiteforgeError) as exc:
                    raise SchemaError(
                        f"record {lineno} field 'expected_outputs': "
                        f"bad value {text[:80]!r}: {exc}",
                        record=lineno, field="expected_outputs", path=str(path),
                    ) from exc

        tasks.append(Task(
            task_id=task_id, prompt=prompt, entry_point=entry_point,
            ground_truth=ground_truth, contract=tuple(contract),
            base_inputs=tuple(base_inputs), atol=float(atol),
            expected_outputs=tuple(expected) if expected is not None else None,
            plus_inputs=tuple(plus_inputs) if plus_inputs is not None else None,
        ))
    return tasks


def _required_params(program: str, entry_point: str) -> tuple[int, int]:
    tree = ast.parse(program)
    fn = contracts.find_function(tree, entry_point)
    assert fn is not None
    args = fn.args
    total = len(args.posonlyargs) + len(args.args)
    required = total - len(args.defaults)
    if args.vararg:
        return required, 1 << 30
    return required, total


def load_samples(path: str | Path,
                 known_tasks: Iterable[str] | None = None) -> list[Sample]:
    path = Path(path)
    known = set(known_tasks) if known_tasks is not None else None
    samples: list[Sample] = []
    seen: set[tuple[str, str]] = set()
    for lineno, rec in _read_records(path, SAMPLES_FORMAT):
        task_id = _require(rec, lineno, path, "task_id", str)
        sample_id = str(_require(rec, lineno, path, "sample_id", (str, int)))
        program = _require(rec, lineno, path, "program", str)
        if known is not None and task_id not in known:
            raise SchemaError(
                f"record {lineno}: sample references unknown task {task_id!r}",
                record=lineno, field="task_id", path=str(path),
            )
        key = (task_id, sample_id)
        if key in seen:
            raise SchemaError(
                f"record {lineno}: duplicate sample {sample_id!r} for {task_id!r}",
                record=lineno, field="sample_id", path=str(path),
            )
        seen.add(key)
        samples.append(Sample(task_id, sample_id, program))
    return samples


def write_records(path: str | Path, header: dict, records: Iterable[dict]) -> None:
    """Atomic JSONL write: header line first, then one object per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(
        dir=str(path.parent), prefix=path.name, suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, ensure_ascii=False) + "\n")
            for rec in records:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def write_tasks(tasks: Sequence[Task], path: str | Path,
                meta: dict | None = None) -> None:
    header = {"format": TASKS_FORMAT}
    if meta:
        header["meta"] = meta
    write_records(path, header, (t.to_record() for t in tasks))


def write_samples(samples: Sequence[Sample], path: str | Path) -> None:
    write_records(path, {"format": SAMPLES_FORMAT},
                  (s.to_record() for s in samples))


def write_plus_dataset(
    tasks: Sequence[Task],
    suites: dict[str, list[TestInput]],
    path: str | Path,
    meta: dict | None = None,
) -> list[Task]:
    """Persist tasks with their enlarged suites: base inputs first, then
    generated inputs, deduplicated."""
    enlarged: list[Task] = []
    for task in tasks:
        generated = suites.get(task.task_id, [])
        combined = dedup_inputs(iter(task.base_suite() + list(generated)))
        enlarged.append(Task(
            task_id=task.task_id, prompt=task.prompt,
            entry_point=task.entry_point, ground_truth=task.ground_truth,
            contract=task.contract, base_inputs=task.base_inputs,
            atol=task.atol, expected_outputs=task.expected_outputs,
            plus_inputs=tuple(ti.canonical for ti in combined),
        ))
    write_tasks(enlarged, path, meta=meta)
    return enlarged


def write_suites(
    suites: dict[str, list[TestInput]],
    path: str | Path,
    meta: dict | None = None,
) -> None:
    """Generated-suite records: task_id, encoded tuples, generator metadata."""
    header: dict[str, Any] = {"format": SUITES_FORMAT}
    if meta:
        header["meta"] = meta
    write_records(path, header, (
        {"task_id": task_id, "inputs": [ti.canonical for ti in inputs],
         "meta": meta or {}}
        for task_id, inputs in suites.items()
    ))


def load_suites(path: str | Path) -> dict[str, list[TestInput]]:
    path = Path(path)
    suites: dict[str, list[TestInput]] = {}
    for lineno, rec in _read_records(path, SUITES_FORMAT):
        task_id = _require(rec, lineno, path, "task_id", str)
        inputs = _str_list(rec, lineno, path, "inputs", []) or []
        _validate_inputs(inputs, lineno, path, "inputs")
        suites[task_id] = [TestInput.from_canonical(t) for t in inputs]
    return suites
