"""Seed inputs: provider-backed acquisition and offline files.

A seed prompt hands the model the reference implementation, a few of the
task's own inputs as demonstrations, and one instruction from a small
rotation.  Responses are mined for argument tuples with a literal-only
evaluator; provider output is never executed.

Offline mode loads seeds from a file of canonical-text argument tuples,
one per line, and takes no network traffic at all.
"""

from __future__ import annotations

import ast
import logging
import os
import random
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import httpx

from .backend import ExecBackend
from .contracts import Verdict, entry_params
from .errors import EmptyHarvest, NoValidSeeds, ProviderError, SchemaError, SuiteforgeError
from .generate import CONTRACT_CHECK_TIMEOUT_S, validate_inputs
from .values import TestInput, Value, dedup_inputs, encode

log = logging.getLogger(__name__)

API_KEY_ENV = "SUITEFORGE_API_KEY"

INSTRUCTIONS = (
    "Generate {n} new argument tuples that probe difficult corner cases of "
    "this function: boundary conditions, empty values, repeated elements, "
    "and adversarial orderings.",
    "Generate {n} new argument tuples using large and extreme values: long "
    "strings, big numbers, deeply repetitive structures, while keeping every "
    "input acceptable to the reference implementation.",
    "Generate {n} new argument tuples that vary the structure of the inputs: "
    "different lengths, nesting shapes and element mixes that the example "
    "inputs do not cover.",
)

MAX_RESPONSE_CHARS = 1 << 20


@dataclass(frozen=True)
class SeedPrompt:
    """One provider prompt: reference code, demo inputs, an instruction."""

    ground_truth: str
    entry_point: str
    demo_inputs: tuple[TestInput, ...]
    instruction: str

    def render(self) -> str:
        demos = "\n".join(repr(ti.args) for ti in self.demo_inputs)
        return (
            f"Here is the reference implementation of `{self.entry_point}`:\n\n"
            f"```python\n{self.ground_truth}\n```\n\n"
            f"Example argument tuples, one per line:\n{demos}\n\n"
            f"{self.instruction}\n"
            "Reply with one argument tuple per line, Python literal syntax "
            "only (no calls, no variable names, no comments)."
        )


@dataclass(frozen=True)
class ProviderConfig:
    """Chat-completion provider over HTTP; credential comes from the
    environment and is never logged or persisted."""

    endpoint: str
    model: str
    timeout_s: float = 60.0
    max_retries: int = 3
    temperature: float = 0.8
    api_key_env: str = API_KEY_ENV
    backoff_base_s: float = 0.5

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)


class HarvestResult(NamedTuple):
    inputs: list[TestInput]
    skipped: int


def build_prompt(task, rng: random.Random, prompt_index: int = 0,
                 seeds_per_prompt: int = 10) -> SeedPrompt:
    """Prompt with the ground truth, min(3, |base|) sampled demo inputs and
    one instruction from the rotation."""
    base = task.base_suite()
    if not base:
        raise SuiteforgeError(f"task {task.task_id!r} has no base inputs")
    k = min(3, len(base))
    demos = tuple(rng.sample(base, k))
    instruction = INSTRUCTIONS[prompt_index % len(INSTRUCTIONS)]
    return SeedPrompt(
        ground_truth=task.ground_truth,
        entry_point=task.entry_point,
        demo_inputs=demos,
        instruction=instruction.format(n=seeds_per_prompt),
    )


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_BULLET_RE = re.compile(r"^\s*(?:[-*+]\s+|\d+[.)]\s+)")
_LITERAL_HEADS = tuple("([{\"'0123456789-+.") + ("True", "False", "None")
_CALL_RE = re.compile(r"^[A-Za-z_][\w.]*\(")


def _looks_like_literal(line: str) -> bool:
    # Call-shaped lines (``f(1, 2)``) are attempted fragments too: they are
    # the classic provider answer style, and must be rejected, not executed.
    return line.startswith(_LITERAL_HEADS) or bool(_CALL_RE.match(line))


def _strip_decorations(line: str) -> str:
    line = _BULLET_RE.sub("", line.strip())
    return line.rstrip(",;")


def _literal(text: str) -> Value:
    """Literal-only evaluation; anything but a plain literal raises."""
    return ast.literal_eval(text)


def _to_input(obj: Value, arity: int) -> TestInput | None:
    if arity == 1:
        args: Sequence[Value] = (obj,)
    elif isinstance(obj, (list, tuple)) and len(obj) == arity:
        args = tuple(obj)
    else:
        return None
    ti = TestInput(args)
    for arg in ti.args:
        encode(arg)  # grammar + limits check; raises UnencodableValue
    ti.canonical  # noqa: B018 - force tuple-level encoding
    return ti


def task_arity(task) -> int:
    if task.base_inputs:
        return TestInput.from_canonical(task.base_inputs[0]).arity
    return len(entry_params(task.ground_truth, task.entry_point))


def _parse_lines(content: str, fenced: bool, arity: int) -> tuple[list[TestInput], int]:
    inputs: list[TestInput] = []
    skipped = 0
    for raw in content.splitlines():
        line = _strip_decorations(raw)
        if not line or line.startswith("#"):
            continue
        if not (fenced or _looks_like_literal(line)):
            continue
        try:
            ti = _to_input(_literal(line), arity)
        except (ValueError, SyntaxError, SuiteforgeError, MemoryError):
            ti = None
        if ti is None:
            skipped += 1
        else:
            inputs.append(ti)
    return inputs, skipped


def parse_seed_response(text: str, task) -> HarvestResult:
    """Extract argument tuples from fenced code blocks or literal lines.

    Unparseable literal-looking fragments are skipped and counted; raises
    :class:`EmptyHarvest` when nothing parses.
    """
    if len(text) > MAX_RESPONSE_CHARS:
        text = text[:MAX_RESPONSE_CHARS]
    arity = task_arity(task)
    harvested: list[TestInput] = []
    skipped = 0

    chunks: list[tuple[str, bool]] = []  # (content, inside_fence)
    last = 0
    for match in _FENCE_RE.finditer(text):
        chunks.append((text[last:match.start()], False))
        chunks.append((match.group(1), True))
        last = match.end()
    chunks.append((text[last:], False))

    for content, fenced in chunks:
        block_inputs, block_skipped = _parse_lines(content, fenced, arity)
        if fenced and not block_inputs and block_skipped:
            # Maybe the whole block is one multi-line literal.
            try:
                whole = _to_input(_literal(content.strip()), arity)
            except (ValueError, SyntaxError, SuiteforgeError, MemoryError):
                whole = None
            if whole is not None:
                harvested.append(whole)
                continue
        harvested.extend(block_inputs)
        skipped += block_skipped

    unique = dedup_inputs(iter(harvested))
    if not unique:
        raise EmptyHarvest(
            f"no inputs parsed from provider response ({skipped} fragment(s) skipped)"
        )
    log.debug("parsed %d seed(s), skipped %d fragment(s)", len(unique), skipped)
    return HarvestResult(unique, skipped)


def _chat_complete(
    config: ProviderConfig,
    prompt_text: str,
    transport: httpx.BaseTransport | None = None,
) -> str:
    headers = {}
    key = config.api_key()
    if key:
        headers["Authorization"] = f"Bearer {key}"
    payload = {
        "model": config.model,
        "messages": [{"role": "user", "content": prompt_text}],
        "temperature": config.temperature,
    }
    last_error: Exception | None = None
    for attempt in range(config.max_retries):
        if attempt and config.backoff_base_s > 0:
            time.sleep(config.backoff_base_s * (2 ** (attempt - 1)))
        try:
            with httpx.Client(transport=transport, timeout=config.timeout_s) as client:
                response = client.post(config.endpoint, json=payload, headers=headers)
                response.raise_for_status()
                body = response.json()
                return body["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
            last_error = exc
            log.warning("provider attempt %d failed: %s", attempt + 1, exc)
    raise ProviderError(
        f"provider failed after {config.max_retries} attempt(s): {last_error}"
    )


def load_seed_file(path: str | Path) -> list[TestInput]:
    """Line-delimited canonical-text argument tuples."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"seed file not found: {path}", path=str(path))
    seeds: list[TestInput] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                seeds.append(TestInput.from_canonical(line))
            except SuiteforgeError as exc:
                raise SchemaError(
                    f"seed line {lineno} is not a canonical argument tuple: {exc}",
                    record=lineno, path=str(path),
                ) from exc
    return dedup_inputs(iter(seeds))


def write_seed_file(seeds: Sequence[TestInput], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("".join(ti.canonical + "\n" for ti in seeds), encoding="utf-8")
    os.replace(tmp, path)


def acquire_seeds(
    task,
    source: ProviderConfig | str | Path,
    backend: ExecBackend,
    n_prompts: int = 3,
    seeds_per_prompt: int = 10,
    rng: random.Random | None = None,
    transport: httpx.BaseTransport | None = None,
    contract_timeout_s: float = CONTRACT_CHECK_TIMEOUT_S,
) -> list[TestInput]:
    """Union of parsed inputs from ``n_prompts`` independent prompts (or an
    offline seed file), deduplicated then contract-validated.

    Raises :class:`ProviderError` when the provider stays unreachable and
    :class:`NoValidSeeds` when validation rejects everything.
    """
    if isinstance(source, (str, Path)):
        candidates = load_seed_file(source)
    else:
        rng = rng or random.Random(0)
        harvested: list[TestInput] = []
        total_skipped = 0
        for p in range(n_prompts):
            prompt = build_prompt(task, rng, p, seeds_per_prompt)
            text = _chat_complete(source, prompt.render(), transport)
            try:
                result = parse_seed_response(text, task)
            except EmptyHarvest as exc:
                log.warning("prompt %d harvested nothing: %s", p + 1, exc)
                continue
            harvested.extend(result.inputs)
            total_skipped += result.skipped
        candidates = dedup_inputs(iter(harvested))
        if not candidates:
            raise EmptyHarvest(
                f"all {n_prompts} prompt(s) produced zero parseable inputs"
            )
        log.info("task %s: %d unique seed(s) from %d prompt(s), %d skipped",
                 task.task_id, len(candidates), n_prompts, total_skipped)

    verdicts = validate_inputs(task, candidates, backend, contract_timeout_s)
    valid = [ti for ti, v in zip(candidates, verdicts) if v is Verdict.VALID]
    if not valid:
        raise NoValidSeeds(
            f"no acquired seed passed contract validation for {task.task_id!r}"
        )
    dropped = len(candidates) - len(valid)
    if dropped:
        log.info("task %s: dropped %d invalid seed(s)", task.task_id, dropped)
    return valid
