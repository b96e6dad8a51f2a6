"""Execution backends: run a program's entry point on batches of inputs.

Four interchangeable implementations of one contract:

* :class:`InProcessBackend` executes program text in this interpreter.
  Fast and convenient for trusted fixture code and for recording
  transcripts; it must never be pointed at untrusted candidates.
* :class:`ScriptedBackend` delegates each case to a Python callable;
  test suites script arbitrary outcome sequences with it.
* :class:`ReplayBackend` answers purely from a recorded transcript file,
  so the whole evaluation pipeline runs with no live runner present.
* :class:`SubprocessBackend` speaks the line-delimited JSON wire protocol
  to a live runner process (see PROTOCOL.md), one fresh process per
  batch, restarting once on a crash before marking the offending case.

All argument tuples and outputs cross this boundary as canonical text,
which makes results hashable, diffable and transcript-friendly.
"""

from __future__ import annotations

import hashlib
import json
import queue
import subprocess
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence, Union

from .errors import (
    BackendUnavailable,
    ProgramLoadError,
    SuiteforgeError,
    TranscriptMiss,
    UnencodableValue,
)
from .values import DEFAULT_LIMITS, Limits, Value, decode, encode

STATUS_OK = "ok"
STATUS_EXCEPTION = "exception"
STATUS_ASSERTION = "assertion-failure"
STATUS_TIMEOUT = "timeout"

MODE_REFERENCE = "reference"
MODE_CANDIDATE = "candidate"
MODE_CONTRACT = "contract-check"

PROTOCOL_VERSION = 1
TIMEOUT_EXIT_CODE = 17

MIN_TIMEOUT_S = 0.05
OUTPUT_CAP_CHARS = 1 << 20
MESSAGE_CAP = 4096

TRANSCRIPT_FORMAT = "suiteforge-transcript/1"

TimeoutSpec = Union[None, float, Sequence[float]]


def timeout_for(t_gt_s: float) -> float:
    """Per-case budget from the reference wall time: max(50 ms, 2 x t_gt)."""
    if t_gt_s < 0:
        raise ValueError("reference time must be non-negative")
    return max(MIN_TIMEOUT_S, 2.0 * t_gt_s)


def _clip(text: str | None, cap: int = MESSAGE_CAP) -> str | None:
    if text is not None and len(text) > cap:
        return text[: cap - 3] + "..."
    return text


@dataclass(frozen=True)
class ExecutionResult:
    """Outcome of one case; ``output`` is canonical text, present iff ok."""

    case_index: int
    status: str
    output: str | None = None
    kind: str | None = None
    message: str | None = None
    wall_time_s: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def to_record(self) -> dict:
        rec: dict = {"status": self.status, "wall_time_s": self.wall_time_s}
        if self.output is not None:
            rec["output"] = self.output
        if self.kind is not None:
            rec["kind"] = self.kind
        if self.message is not None:
            rec["message"] = self.message
        return rec

    @classmethod
    def from_record(cls, case_index: int, rec: dict) -> "ExecutionResult":
        return cls(
            case_index=case_index,
            status=rec["status"],
            output=rec.get("output"),
            kind=rec.get("kind"),
            message=rec.get("message"),
            wall_time_s=float(rec.get("wall_time_s", 0.0)),
        )


@dataclass(frozen=True)
class ExecRequest:
    """One batch: a program, its entry point an ordered list of cases."""

    program: str
    entry_point: str
    cases: tuple[str, ...]
    mode: str = MODE_CANDIDATE
    timeout_s: TimeoutSpec = None
    request_id: str = field(default_factory=lambda: uuid.uuid4().hex)

    def __post_init__(self) -> None:
        if not self.cases:
            raise ValueError("cases must be non-empty")
        if isinstance(self.timeout_s, (int, float)):
            if self.timeout_s <= 0:
                raise ValueError("timeout must be positive")
        elif self.timeout_s is not None:
            spec = tuple(float(t) for t in self.timeout_s)
            if len(spec) != len(self.cases):
                raise ValueError("per-case timeout list length must match cases")
            if any(t <= 0 for t in spec):
                raise ValueError("timeout must be positive")
            object.__setattr__(self, "timeout_s", spec)

    @property
    def program_digest(self) -> str:
        return hashlib.sha256(self.program.encode("utf-8")).hexdigest()

    def timeout_for_case(self, index: int, default: float) -> float:
        if self.timeout_s is None:
            return default
        if isinstance(self.timeout_s, (int, float)):
            return float(self.timeout_s)
        return self.timeout_s[index]

    def case_key(self, index: int) -> tuple[str, str, str, str]:
        return (self.program_digest, self.entry_point, self.mode, self.cases[index])


class ExecBackend(Protocol):
    def run_batch(self, req: ExecRequest) -> list[ExecutionResult]: ...


def _encode_output(value: Value, limits: Limits) -> tuple[str | None, ExecutionResult | None]:
    """Encode a return value, mapping grammar violations to statuses."""
    try:
        text = encode(value, limits)
    except UnencodableValue as exc:
        return None, ExecutionResult(
            0, STATUS_EXCEPTION, kind="unencodable-output", message=_clip(str(exc))
        )
    if len(text) > OUTPUT_CAP_CHARS:
        return None, ExecutionResult(
            0, STATUS_EXCEPTION, kind="oversized-output",
            message=f"output canonical text exceeds {OUTPUT_CAP_CHARS} chars",
        )
    return text, None


class InProcessBackend:
    """Executes program text inside this interpreter, one case per worker
    thread with a join timeout.

    Suitable only for trusted code (fixtures, ground truths under test
    recording): a hostile candidate could corrupt the host process, and a
    case that ignores its timeout leaks a daemon thread until exit.
    """

    def __init__(self, default_timeout_s: float = 5.0,
                 limits: Limits = DEFAULT_LIMITS) -> None:
        self.default_timeout_s = default_timeout_s
        self.limits = limits

    def run_batch(self, req: ExecRequest) -> list[ExecutionResult]:
        try:
            code = compile(req.program, f"<{req.request_id}>", "exec")
        except SyntaxError as exc:
            raise ProgramLoadError(f"program does not compile: {exc}") from exc
        namespace: dict = {}
        try:
            exec(code, namespace)  # noqa: S102 - trusted code by contract
        except BaseException as exc:
            raise ProgramLoadError(f"program failed at import: {exc!r}") from exc
        fn = namespace.get(req.entry_point)
        if not callable(fn):
            raise ProgramLoadError(f"entry point {req.entry_point!r} not defined")
        results = []
        for i, case_text in enumerate(req.cases):
            timeout = req.timeout_for_case(i, self.default_timeout_s)
            results.append(self._run_case(i, fn, case_text, timeout))
        return results

    def _run_case(self, index: int, fn: Callable, case_text: str,
                  timeout_s: float) -> ExecutionResult:
        args = decode(case_text, _outer(self.limits))
        holder: dict = {}

        def work() -> None:
            t0 = time.perf_counter()
            try:
                holder["value"] = fn(*args)
            except AssertionError as exc:
                holder["assertion"] = str(exc)
            except BaseException as exc:
                holder["error"] = exc
            holder["wall"] = time.perf_counter() - t0

        worker = threading.Thread(target=work, daemon=True)
        t0 = time.perf_counter()
        worker.start()
        worker.join(timeout_s)
        elapsed = time.perf_counter() - t0
        if worker.is_alive():
            _stop_thread(worker)
            return ExecutionResult(index, STATUS_TIMEOUT, wall_time_s=elapsed)
        wall = holder.get("wall", elapsed)
        if "assertion" in holder:
            return ExecutionResult(
                index, STATUS_ASSERTION, message=_clip(holder["assertion"]),
                wall_time_s=wall,
            )
        if "error" in holder:
            exc = holder["error"]
            return ExecutionResult(
                index, STATUS_EXCEPTION, kind=type(exc).__name__,
                message=_clip(str(exc)), wall_time_s=wall,
            )
        text, failure = _encode_output(holder.get("value"), self.limits)
        if failure is not None:
            return replace(failure, case_index=index, wall_time_s=wall)
        return ExecutionResult(index, STATUS_OK, output=text, wall_time_s=wall)


def _outer(limits: Limits) -> Limits:
    # The argument tuple wraps values one level deeper than the per-value
    # limits allow.
    return Limits(limits.max_depth + 1, limits.max_items, limits.max_str)


def _stop_thread(worker: threading.Thread) -> None:
    """Best-effort reap of a timed-out worker via an async exception.

    Interrupts pure-Python loops at the next bytecode boundary; tight
    native loops are immune, which is why the live runner uses a hard
    process kill instead.  The thread is daemonic either way.
    """
    import ctypes

    ident = worker.ident
    if ident is None:
        return
    ctypes.pythonapi.PyThreadState_SetAsyncExc(
        ctypes.c_long(ident), ctypes.py_object(TimeoutError)
    )
    worker.join(0.05)


Handler = Callable[[ExecRequest, int, tuple], Union[ExecutionResult, Value]]


class ScriptedBackend:
    """Backend driven by a callable; for tests and simulated clocks.

    The handler receives ``(request, case_index, decoded_args)`` and
    returns either a full :class:`ExecutionResult` or a bare value, which
    is wrapped as an ok result.
    """

    def __init__(self, handler: Handler, limits: Limits = DEFAULT_LIMITS) -> None:
        self.handler = handler
        self.limits = limits

    def run_batch(self, req: ExecRequest) -> list[ExecutionResult]:
        results = []
        for i, case_text in enumerate(req.cases):
            args = decode(case_text, _outer(self.limits))
            outcome = self.handler(req, i, args)
            if isinstance(outcome, ExecutionResult):
                results.append(replace(outcome, case_index=i))
            else:
                text, failure = _encode_output(outcome, self.limits)
                if failure is not None:
                    results.append(replace(failure, case_index=i))
                else:
                    results.append(ExecutionResult(i, STATUS_OK, output=text))
        return results


class ReplayBackend:
    """Pure lookup over a recorded transcript; no code ever runs."""

    def __init__(self, source: str | Path | Iterable[dict]) -> None:
        self._results: dict[tuple[str, str, str, str], dict] = {}
        self._load_errors: dict[tuple[str, str, str], str] = {}
        records: Iterable[dict]
        if isinstance(source, (str, Path)):
            records = _read_jsonl(Path(source))
        else:
            records = source
        for rec in records:
            if rec.get("format"):
                if rec["format"] != TRANSCRIPT_FORMAT:
                    raise BackendUnavailable(
                        f"unsupported transcript format {rec['format']!r}"
                    )
                continue
            head = (rec["program_sha256"], rec["entry_point"], rec["mode"])
            if "load_error" in rec:
                self._load_errors[head] = rec["load_error"]
            else:
                self._results[head + (rec["case"],)] = rec["result"]

    def __len__(self) -> int:
        return len(self._results)

    def run_batch(self, req: ExecRequest) -> list[ExecutionResult]:
        head = (req.program_digest, req.entry_point, req.mode)
        if head in self._load_errors:
            raise ProgramLoadError(self._load_errors[head])
        results = []
        for i in range(len(req.cases)):
            rec = self._results.get(req.case_key(i))
            if rec is None:
                raise TranscriptMiss(
                    f"no recorded result for case {i} of {req.entry_point} "
                    f"({req.mode}); transcript is stale or incomplete"
                )
            results.append(ExecutionResult.from_record(i, rec))
        return results


class RecordingBackend:
    """Wraps another backend and appends its traffic to a transcript file."""

    def __init__(self, inner: ExecBackend, path: str | Path) -> None:
        self.inner = inner
        self.path = Path(path)
        self._seen: set[tuple] = set()
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a", encoding="utf-8")
        if fresh:
            self._write({"format": TRANSCRIPT_FORMAT})

    def _write(self, obj: dict) -> None:
        self._fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
        self._fh.flush()

    def run_batch(self, req: ExecRequest) -> list[ExecutionResult]:
        head = (req.program_digest, req.entry_point, req.mode)
        try:
            results = self.inner.run_batch(req)
        except ProgramLoadError as exc:
            if ("load", *head) not in self._seen:
                self._seen.add(("load", *head))
                self._write({
                    "program_sha256": head[0], "entry_point": head[1],
                    "mode": head[2], "load_error": str(exc),
                })
            raise
        for i, result in enumerate(results):
            key = req.case_key(i)
            if key in self._seen:
                continue
            self._seen.add(key)
            self._write({
                "program_sha256": head[0], "entry_point": head[1],
                "mode": head[2], "case": req.cases[i],
                "result": result.to_record(),
            })
        return results

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RecordingBackend":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def _read_jsonl(path: Path) -> Iterable[dict]:
    if not path.exists():
        raise BackendUnavailable(f"transcript not found: {path}")
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


class _LineReader:
    """Pumps a subprocess's stdout lines into a queue from a daemon thread.

    Blocking ``readline`` in a thread sidesteps the select-vs-buffered-IO
    trap; ``None`` marks EOF.
    """

    _EOF = object()

    def __init__(self, proc: subprocess.Popen) -> None:
        self._queue: queue.Queue = queue.Queue()
        self._thread = threading.Thread(
            target=self._pump, args=(proc,), daemon=True
        )
        self._thread.start()

    def _pump(self, proc: subprocess.Popen) -> None:
        assert proc.stdout is not None
        try:
            for line in proc.stdout:
                line = line.strip()
                if line:
                    self._queue.put(line)
        except ValueError:  # stream closed under us
            pass
        self._queue.put(self._EOF)

    def next(self, deadline: float) -> dict | None:
        budget = deadline - time.monotonic()
        if budget <= 0:
            raise BackendUnavailable("runner unresponsive past batch deadline")
        try:
            item = self._queue.get(timeout=budget)
        except queue.Empty:
            raise BackendUnavailable("runner unresponsive past batch deadline") from None
        if item is self._EOF:
            return None
        try:
            return json.loads(item)
        except json.JSONDecodeError as exc:
            raise BackendUnavailable(
                f"runner emitted invalid JSON: {item[:200]!r}"
            ) from exc


class SubprocessBackend:
    """Client side of the wire protocol; launches one runner per batch.

    A runner that dies mid-batch (hard crash, or the watchdog's timeout
    kill) is relaunched and the unanswered remainder resubmitted; a case
    that kills the runner twice is marked ``exception(kind="runner-crash")``.
    """

    def __init__(
        self,
        command: Sequence[str] = ("python3", "-m", "caserunner"),
        protocol: int = PROTOCOL_VERSION,
        default_timeout_s: float = 5.0,
        load_timeout_s: float = 30.0,
        crash_retries: int = 1,
    ) -> None:
        self.command = tuple(command)
        self.protocol = protocol
        self.default_timeout_s = default_timeout_s
        self.load_timeout_s = load_timeout_s
        self.crash_retries = crash_retries

    def run_batch(self, req: ExecRequest) -> list[ExecutionResult]:
        n = len(req.cases)
        results: dict[int, ExecutionResult] = {}
        attempts = [0] * n
        while len(results) < n:
            pending = [i for i in range(n) if i not in results]
            lead = pending[0]
            if attempts[lead] > self.crash_retries:
                results[lead] = ExecutionResult(
                    lead, STATUS_EXCEPTION, kind="runner-crash",
                    message="runner died repeatedly on this case",
                )
                continue
            attempts[lead] += 1
            self._attempt(req, pending, results)
        return [results[i] for i in range(n)]

    def _spawn(self) -> subprocess.Popen:
        cmd = list(self.command) + ["--protocol", str(self.protocol)]
        try:
            proc = subprocess.Popen(
                cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1,
            )
        except OSError as exc:
            raise BackendUnavailable(
                f"cannot launch runner {' '.join(cmd)}: {exc}"
            ) from exc
        return proc

    def _attempt(self, req: ExecRequest, pending: list[int],
                 results: dict[int, ExecutionResult]) -> None:
        timeouts = [req.timeout_for_case(i, self.default_timeout_s) for i in pending]
        deadline = time.monotonic() + self.load_timeout_s + sum(timeouts) + 5.0
        proc = self._spawn()
        lines = _LineReader(proc)
        try:
            ready = lines.next(deadline)
            if not isinstance(ready, dict) or not ready.get("ready"):
                detail = ready.get("error", {}) if isinstance(ready, dict) else {}
                raise BackendUnavailable(
                    f"runner handshake failed: {detail.get('message', 'no ready line')}"
                )
            payload = {
                "protocol": self.protocol,
                "id": req.request_id,
                "program": req.program,
                "entry_point": req.entry_point,
                "mode": req.mode,
                "cases": [req.cases[i] for i in pending],
                "timeout_s": timeouts,
            }
            assert proc.stdin is not None
            proc.stdin.write(json.dumps(payload, ensure_ascii=False) + "\n")
            proc.stdin.flush()
            while True:
                obj = lines.next(deadline)
                if obj is None:
                    return  # runner died; caller resubmits the remainder
                if "case" in obj:
                    local = obj["case"]
                    original = pending[local]
                    results[original] = ExecutionResult.from_record(original, obj)
                elif obj.get("done"):
                    error = obj.get("error")
                    if error:
                        if error.get("type") == "program-load":
                            raise ProgramLoadError(error.get("message", "load failed"))
                        raise BackendUnavailable(
                            f"runner batch error: {error.get('message')}"
                        )
                    return
        finally:
            self._reap(proc)

    def _reap(self, proc: subprocess.Popen) -> None:
        if proc.poll() is None:
            proc.kill()
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:  # pragma: no cover - defensive
            pass
        for stream in (proc.stdin, proc.stdout):
            if stream:
                try:
                    stream.close()
                except OSError:  # pragma: no cover - defensive
                    pass


def make_backend(
    kind: str,
    *,
    transcript: str | Path | None = None,
    record_to: str | Path | None = None,
    command: Sequence[str] | None = None,
    default_timeout_s: float = 5.0,
) -> ExecBackend:
    """Backend factory used by the service and CLI.

    ``kind`` is one of ``inproc``, ``replay`` or ``live``; ``record_to``
    wraps any of them in a :class:`RecordingBackend`.
    """
    backend: ExecBackend
    if kind == "inproc":
        backend = InProcessBackend(default_timeout_s=default_timeout_s)
    elif kind == "replay":
        if transcript is None:
            raise SuiteforgeError("replay backend requires a transcript path")
        backend = ReplayBackend(transcript)
    elif kind == "live":
        backend = SubprocessBackend(
            command=tuple(command) if command else ("python3", "-m", "caserunner"),
            default_timeout_s=default_timeout_s,
        )
    else:
        raise SuiteforgeError(f"unknown backend kind {kind!r}")
    if record_to is not None:
        backend = RecordingBackend(backend, record_to)
    return backend
