"""Seed-pool expansion: grow a corpus of unique, contract-valid inputs.

The loop mirrors a classic mutation fuzzer: pick a pool member uniformly
at random, mutate exactly one argument, keep the mutant if it is novel
(by canonical hash) and the contract-instrumented ground truth accepts
it.  Generation stops at the input budget, the wall-clock budget, or
after a long run of consecutive rejections.

Everything is deterministic given the budget's RNG seed and a
deterministic backend.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field

from .backend import ExecBackend, ExecRequest, MODE_CONTRACT
from .contracts import Verdict, classify_validity, instrument
from .errors import NoValidSeeds, UnencodableValue
from .mutation import INGREDIENT_PROB, IngredientStore, collect_ingredients, mutate
from .values import DEFAULT_LIMITS, Limits, TestInput, dedup_inputs

log = logging.getLogger(__name__)

STALL_LIMIT = 10_000
CONTRACT_CHECK_TIMEOUT_S = 1.0


@dataclass(frozen=True)
class GenBudget:
    """Generation termination knobs."""

    max_inputs: int = 1000
    wall_clock_s: float = 3600.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.max_inputs <= 0:
            raise ValueError("max_inputs must be positive")
        if self.wall_clock_s <= 0:
            raise ValueError("wall_clock_s must be positive")

    def to_record(self) -> dict:
        return {
            "max_inputs": self.max_inputs,
            "wall_clock_s": self.wall_clock_s,
            "rng_seed": self.rng_seed,
        }


@dataclass
class GenDiagnostics:
    """Operator-facing evidence collected while generating.

    Crashes on contract-passing inputs hint at flawed ground truth;
    timeouts hint at performance defects.
    """

    dropped_seeds: int = 0
    crashes: list[tuple[str, str]] = field(default_factory=list)
    timeouts: list[str] = field(default_factory=list)
    stalled: bool = False
    wall_clock_hit: bool = False
    candidates_tried: int = 0

    def to_record(self) -> dict:
        return {
            "dropped_seeds": self.dropped_seeds,
            "crashes": self.crashes[:50],
            "timeouts": self.timeouts[:50],
            "stalled": self.stalled,
            "wall_clock_hit": self.wall_clock_hit,
            "candidates_tried": self.candidates_tried,
        }


class SeedPool:
    """Deduplicated, insertion-ordered corpus of valid inputs."""

    def __init__(self) -> None:
        self._by_digest: dict[str, TestInput] = {}
        self._members: list[TestInput] = []
        self.diagnostics = GenDiagnostics()

    def add(self, ti: TestInput) -> bool:
        digest = ti.digest
        if digest in self._by_digest:
            return False
        self._by_digest[digest] = ti
        self._members.append(ti)
        return True

    def __contains__(self, ti: TestInput) -> bool:
        return ti.digest in self._by_digest

    def __len__(self) -> int:
        return len(self._members)

    def members(self) -> list[TestInput]:
        return list(self._members)

    def pick(self, rng: random.Random) -> TestInput:
        return self._members[rng.randrange(len(self._members))]


def validate_inputs(
    task,
    inputs: list[TestInput],
    backend: ExecBackend,
    timeout_s: float = CONTRACT_CHECK_TIMEOUT_S,
) -> list[Verdict]:
    """Classify inputs against the contract-instrumented ground truth."""
    if not inputs:
        return []
    program = instrument(task.ground_truth, task.entry_point, task.contract)
    req = ExecRequest(
        program=program,
        entry_point=task.entry_point,
        cases=tuple(ti.canonical for ti in inputs),
        mode=MODE_CONTRACT,
        timeout_s=timeout_s,
    )
    return [classify_validity(result) for result in backend.run_batch(req)]


def generate_pool(
    task,
    seeds: list[TestInput],
    backend: ExecBackend,
    budget: GenBudget,
    *,
    limits: Limits = DEFAULT_LIMITS,
    ingredient_prob: float = INGREDIENT_PROB,
    stall_limit: int = STALL_LIMIT,
    contract_timeout_s: float = CONTRACT_CHECK_TIMEOUT_S,
) -> SeedPool:
    """Expand validated seeds into a pool of at most ``budget.max_inputs``.

    Raises :class:`NoValidSeeds` when every seed fails validation; invalid
    seeds are otherwise dropped with a logged count.
    """
    pool = SeedPool()
    diag = pool.diagnostics
    program = instrument(task.ground_truth, task.entry_point, task.contract)

    unique_seeds = dedup_inputs(iter(seeds))
    verdicts = validate_inputs(task, unique_seeds, backend, contract_timeout_s)
    store = IngredientStore()
    for ti, verdict in zip(unique_seeds, verdicts):
        if verdict is Verdict.VALID:
            if len(pool) < budget.max_inputs and pool.add(ti):
                for arg in ti.args:
                    collect_ingredients(arg, store)
        else:
            diag.dropped_seeds += 1
            _note_rejection(diag, ti, verdict)
    if diag.dropped_seeds:
        log.info("task %s: dropped %d invalid seed(s)",
                 getattr(task, "task_id", "?"), diag.dropped_seeds)
    if not len(pool):
        raise NoValidSeeds(
            f"no seed passed contract validation for task "
            f"{getattr(task, 'task_id', '?')!r}"
        )

    rng = random.Random(budget.rng_seed)
    deadline = time.monotonic() + budget.wall_clock_s
    stall = 0
    while len(pool) < budget.max_inputs:
        if time.monotonic() >= deadline:
            diag.wall_clock_hit = True
            break
        if stall >= stall_limit:
            diag.stalled = True
            break
        parent = pool.pick(rng)
        if parent.arity == 0:
            break  # nullary entry point: nothing to mutate
        diag.candidates_tried += 1
        index = rng.randrange(parent.arity)
        args = list(parent.args)
        args[index] = mutate(args[index], rng, store, limits, ingredient_prob)
        candidate = TestInput(args)
        try:
            novel = candidate not in pool  # digest computation can trip limits
        except UnencodableValue:
            stall += 1
            continue
        if not novel:
            stall += 1
            continue
        verdict = _classify_one(task, program, candidate, backend, contract_timeout_s)
        if verdict is Verdict.VALID:
            pool.add(candidate)
            for arg in candidate.args:
                collect_ingredients(arg, store)
            stall = 0
        else:
            _note_rejection(diag, candidate, verdict)
            stall += 1
    return pool


def _classify_one(task, program: str, candidate: TestInput,
                  backend: ExecBackend, timeout_s: float) -> Verdict:
    req = ExecRequest(
        program=program,
        entry_point=task.entry_point,
        cases=(candidate.canonical,),
        mode=MODE_CONTRACT,
        timeout_s=timeout_s,
    )
    return classify_validity(backend.run_batch(req)[0])


def _note_rejection(diag: GenDiagnostics, ti: TestInput, verdict: Verdict) -> None:
    if verdict is Verdict.CRASH_ON_VALID_PATH:
        diag.crashes.append((ti.canonical, verdict.value))
    elif verdict is Verdict.TIMEOUT:
        diag.timeouts.append(ti.canonical)


def build_plus_suite(task, pool: SeedPool) -> list[TestInput]:
    """Base inputs first, then pool members, deduplicated by hash."""
    return dedup_inputs(iter(task.base_suite() + pool.members()))
