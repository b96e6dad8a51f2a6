"""Request loop: load a program, run cases under a watchdog, emit results.

Protocol output goes to a private duplicate of the original stdout; file
descriptor 1 is pointed at /dev/null before any untrusted code runs, so
candidate prints can never corrupt the stream.

Timeout enforcement is a watchdog timer that emits the in-flight case's
timeout result, flushes, and hard-kills the process (exit code 17):
signals and thread interrupts cannot stop tight native loops, so the
process is the unit of enforcement.  The orchestrator relaunches and
resubmits the remainder.
"""

from __future__ import annotations

import copy
import io
import json
import os
import sys
import threading
import time
import traceback

from . import (
    PROTOCOL_ERROR_EXIT_CODE,
    PROTOCOL_VERSION,
    TIMEOUT_EXIT_CODE,
    VERSION_MISMATCH_EXIT_CODE,
)
from .codec import CodecError, decode, encode

DEFAULT_TIMEOUT_S = 5.0
DEFAULT_MEMORY_MB = 512
OUTPUT_CAP_CHARS = 1 << 20
MESSAGE_CAP = 4096


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def _clip(text: str) -> str:
    if len(text) > MESSAGE_CAP:
        return text[: MESSAGE_CAP - 3] + "..."
    return text


class Session:
    """One runner process: protocol stream plus run statistics."""

    def __init__(self, out) -> None:
        self.out = out
        self.cases_run = 0
        self._write_lock = threading.Lock()

    def emit(self, obj: dict) -> None:
        with self._write_lock:
            self.out.write(_dump(obj) + "\n")
            self.out.flush()

    def peak_rss_kb(self) -> int:
        try:
            import resource

            return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        except Exception:  # pragma: no cover - non-POSIX fallback
            return 0

    def stats(self) -> dict:
        return {"cases_run": self.cases_run, "peak_rss_kb": self.peak_rss_kb()}


def apply_memory_cap(megabytes: int) -> None:
    if megabytes <= 0:
        return
    try:
        import resource

        limit = megabytes * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
    except Exception:  # pragma: no cover - container may forbid it
        pass


def detach_stdout():
    """Protocol stream keeps the real stdout; fd 1 goes to /dev/null."""
    real_fd = os.dup(1)
    protocol_out = os.fdopen(real_fd, "w", encoding="utf-8", buffering=1)
    devnull = os.open(os.devnull, os.O_WRONLY)
    os.dup2(devnull, 1)
    os.close(devnull)
    sys.stdout = io.TextIOWrapper(
        open(os.devnull, "wb"), encoding="utf-8", write_through=True
    )
    return protocol_out


def _timeout_spec(raw, n_cases: int) -> list[float]:
    if raw is None:
        return [DEFAULT_TIMEOUT_S] * n_cases
    if isinstance(raw, (int, float)):
        if raw <= 0:
            raise ValueError("timeout must be positive")
        return [float(raw)] * n_cases
    spec = [float(t) for t in raw]
    if len(spec) != n_cases or any(t <= 0 for t in spec):
        raise ValueError("per-case timeout list must match cases, positive")
    return spec


def _load_program(program: str, entry_point: str):
    code = compile(program, "<request>", "exec")
    namespace: dict = {}
    exec(code, namespace)  # noqa: S102 - this process exists to run it
    fn = namespace.get(entry_point)
    if not callable(fn):
        raise NameError(f"entry point {entry_point!r} not defined")
    return fn


def _encode_output(value) -> tuple[str | None, dict | None]:
    try:
        text = encode(value)
    except CodecError as exc:
        return None, {"status": "exception", "kind": "unencodable-output",
                      "message": _clip(str(exc))}
    if len(text) > OUTPUT_CAP_CHARS:
        return None, {"status": "exception", "kind": "oversized-output",
                      "message": "output canonical text exceeds 1 MiB"}
    return text, None


def run_case(session: Session, fn, index: int, case_text: str,
             timeout_s: float) -> None:
    pristine = decode(case_text)
    call_args = copy.deepcopy(pristine)
    settled = threading.Event()
    started = time.perf_counter()

    def on_timeout() -> None:
        if settled.is_set():
            return
        session.emit({
            "case": index, "status": "timeout",
            "wall_time_s": round(time.perf_counter() - started, 6),
        })
        os._exit(TIMEOUT_EXIT_CODE)

    watchdog = threading.Timer(timeout_s, on_timeout)
    watchdog.daemon = True
    watchdog.start()
    try:
        outcome: dict
        try:
            value = fn(*call_args)
        except AssertionError as exc:
            outcome = {"status": "assertion-failure", "message": _clip(str(exc))}
        except BaseException as exc:
            outcome = {"status": "exception", "kind": type(exc).__name__,
                       "message": _clip(str(exc))}
        else:
            text, failure = _encode_output(value)
            outcome = failure if failure else {"status": "ok", "output": text}
    finally:
        settled.set()
        watchdog.cancel()
    wall = time.perf_counter() - started

    if encode(tuple(pristine)) != case_text:
        outcome = {"status": "exception", "kind": "argument-integrity",
                   "message": "pristine argument copy no longer matches request"}
    outcome["case"] = index
    outcome["wall_time_s"] = round(wall, 6)
    session.emit(outcome)
    session.cases_run += 1


def handle_request(session: Session, request: dict) -> None:
    if request.get("protocol") != PROTOCOL_VERSION:
        raise ProtocolViolation(
            f"request protocol {request.get('protocol')!r} != {PROTOCOL_VERSION}"
        )
    for field in ("id", "program", "entry_point", "cases"):
        if field not in request:
            raise ProtocolViolation(f"request missing field {field!r}")
    cases = request["cases"]
    if not isinstance(cases, list) or not cases:
        raise ProtocolViolation("cases must be a non-empty list")
    try:
        timeouts = _timeout_spec(request.get("timeout_s"), len(cases))
    except (TypeError, ValueError) as exc:
        raise ProtocolViolation(f"bad timeout_s: {exc}") from exc

    try:
        fn = _load_program(request["program"], request["entry_point"])
    except BaseException as exc:
        session.emit({
            "batch": request["id"], "done": True, "cases_run": 0,
            "stats": session.stats(),
            "error": {"type": "program-load",
                      "message": _clip(f"{type(exc).__name__}: {exc}")},
        })
        return

    ran = 0
    for index, case_text in enumerate(cases):
        try:
            run_case(session, fn, index, case_text, timeouts[index])
        except CodecError as exc:
            session.emit({
                "case": index, "status": "exception", "kind": "bad-case-text",
                "message": _clip(str(exc)), "wall_time_s": 0.0,
            })
            session.cases_run += 1
        ran += 1
    session.emit({
        "batch": request["id"], "done": True, "cases_run": ran,
        "stats": session.stats(), "error": None,
    })


class ProtocolViolation(Exception):
    pass


def serve(requested_protocol: int, memory_mb: int = DEFAULT_MEMORY_MB,
          stdin=None) -> int:
    out = detach_stdout()
    session = Session(out)
    if requested_protocol != PROTOCOL_VERSION:
        session.emit({"error": {
            "type": "protocol-mismatch",
            "message": f"runner speaks protocol {PROTOCOL_VERSION}, "
                       f"got {requested_protocol}",
        }})
        return VERSION_MISMATCH_EXIT_CODE
    apply_memory_cap(memory_mb)
    session.emit({"protocol": PROTOCOL_VERSION, "ready": True})

    stream = stdin if stdin is not None else sys.stdin
    for line in stream:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ProtocolViolation("request must be a JSON object")
            handle_request(session, request)
        except ProtocolViolation as exc:
            session.emit({"error": {"type": "protocol-violation",
                                    "message": _clip(str(exc))}})
            return PROTOCOL_ERROR_EXIT_CODE
        except json.JSONDecodeError as exc:
            session.emit({"error": {"type": "protocol-violation",
                                    "message": f"bad JSON: {exc}"}})
            return PROTOCOL_ERROR_EXIT_CODE
        except Exception:  # pragma: no cover - last-resort guard
            session.emit({"error": {"type": "internal",
                                    "message": _clip(traceback.format_exc())}})
            return PROTOCOL_ERROR_EXIT_CODE
    return 0
