"""Pipeline stage implementations behind the service endpoints.

Each stage is independently runnable and idempotent given the same inputs
and RNG seed; every output artifact embeds a config echo and the tool
version so reports are self-describing.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .. import __version__
from ..backend import ExecBackend, make_backend
from ..dataset import (
    REPORT_FORMAT,
    Task,
    load_samples,
    load_tasks,
    write_plus_dataset,
    write_records,
    write_suites,
)
from ..errors import DomainError, SchemaError
from ..evaluate import cross_check, evaluate_task
from ..generate import GenBudget, build_plus_suite, generate_pool
from ..metrics import EvalReport, TaskOutcome, render_report
from ..seeds import ProviderConfig, acquire_seeds, load_seed_file, write_seed_file
from . import models

log = logging.getLogger(__name__)

_SAFE_ID = re.compile(r"[^A-Za-z0-9._-]+")


def safe_name(task_id: str) -> str:
    """Filesystem-safe rendering of a task id (``fix/001`` -> ``fix_001``)."""
    return _SAFE_ID.sub("_", task_id)


def _backend_factory(spec: models.BackendSpec):
    """One backend per call; workers must not share live subprocess state."""
    def factory() -> ExecBackend:
        return make_backend(
            spec.kind,
            transcript=spec.transcript,
            record_to=spec.record_to,
            command=spec.command,
            default_timeout_s=spec.default_timeout_s,
        )
    return factory


def _task_seed(global_seed: int, task_id: str) -> int:
    # Decorrelate per-task RNG streams while recording one global seed.
    digest = hashlib.sha256(f"{global_seed}:{task_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def op_seed(req: models.SeedRequest) -> models.SeedResponse:
    tasks = load_tasks(req.dataset)
    out_dir = Path(req.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    factory = _backend_factory(req.backend)
    summaries: list[models.SeedTaskSummary] = []
    for task in tasks:
        if req.offline_dir is not None:
            source: ProviderConfig | Path = _offline_seed_path(req.offline_dir, task)
        elif req.provider is not None:
            source = ProviderConfig(
                endpoint=req.provider.endpoint,
                model=req.provider.model,
                timeout_s=req.provider.timeout_s,
                max_retries=req.provider.max_retries,
                temperature=req.provider.temperature,
                api_key_env=req.provider.api_key_env,
            )
        else:
            raise SchemaError("seed stage needs either offline_dir or provider")
        seeds = acquire_seeds(
            task, source, factory(),
            n_prompts=req.n_prompts,
            seeds_per_prompt=req.seeds_per_prompt,
            rng=random.Random(_task_seed(req.rng_seed, task.task_id)),
        )
        path = out_dir / f"{safe_name(task.task_id)}.seeds"
        write_seed_file(seeds, path)
        summaries.append(models.SeedTaskSummary(
            task_id=task.task_id, seeds=len(seeds), path=str(path),
        ))
    return models.SeedResponse(tasks=summaries, out_dir=str(out_dir))


def _offline_seed_path(offline_dir: str, task: Task) -> Path:
    path = Path(offline_dir)
    if path.is_file():
        return path
    candidate = path / f"{safe_name(task.task_id)}.seeds"
    if not candidate.exists():
        raise SchemaError(
            f"no offline seed file for task {task.task_id!r}",
            path=str(candidate),
        )
    return candidate


def op_generate(req: models.GenerateRequest) -> models.GenerateResponse:
    tasks = load_tasks(req.dataset)
    factory = _backend_factory(req.backend)
    config = {
        "budget": req.budget.model_dump(),
        "ingredient_prob": req.ingredient_prob,
        "seed_from_base": req.seed_from_base,
        "tool": "suiteforge",
        "version": __version__,
    }

    def expand(task: Task):
        seeds = []
        if req.seeds_dir is not None:
            seeds.extend(load_seed_file(_seed_path_for(req.seeds_dir, task)))
        if req.seed_from_base or req.seeds_dir is None:
            seeds.extend(task.base_suite())
        budget = GenBudget(
            max_inputs=req.budget.max_inputs,
            wall_clock_s=req.budget.wall_clock_s,
            rng_seed=_task_seed(req.budget.rng_seed, task.task_id),
        )
        pool = generate_pool(
            task, seeds, factory(), budget,
            ingredient_prob=req.ingredient_prob,
        )
        return task, pool

    if req.parallel > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=req.parallel) as workers:
            expanded = list(workers.map(expand, tasks))
    else:
        expanded = [expand(task) for task in tasks]

    suites = {}
    summaries: list[models.GenerateTaskSummary] = []
    for task, pool in expanded:
        plus = build_plus_suite(task, pool)
        suites[task.task_id] = pool.members()
        diag = pool.diagnostics
        summaries.append(models.GenerateTaskSummary(
            task_id=task.task_id,
            base_size=len(task.base_inputs),
            pool_size=len(pool),
            plus_size=len(plus),
            stalled=diag.stalled,
            wall_clock_hit=diag.wall_clock_hit,
            dropped_seeds=diag.dropped_seeds,
            crashes=len(diag.crashes),
            timeouts=len(diag.timeouts),
        ))

    write_plus_dataset(tasks, suites, req.out, meta=config)
    if req.suites_out:
        write_suites(suites, req.suites_out, meta=config)
    return models.GenerateResponse(
        tasks=summaries, out=req.out, suites_out=req.suites_out, config=config,
    )


def _seed_path_for(seeds_dir: str, task: Task) -> Path:
    path = Path(seeds_dir)
    if path.is_file():
        return path
    candidate = path / f"{safe_name(task.task_id)}.seeds"
    if not candidate.exists():
        raise SchemaError(
            f"no seed file for task {task.task_id!r}; run the seed stage or "
            f"pass seed_from_base", path=str(candidate),
        )
    return candidate


def op_evaluate(req: models.EvaluateRequest) -> models.EvaluateResponse:
    tasks = load_tasks(req.dataset)
    by_id = {task.task_id: task for task in tasks}
    samples = load_samples(req.samples, known_tasks=by_id)
    if not req.ks:
        raise DomainError("k list must be non-empty")

    grouped: dict[str, list] = {}
    for sample in samples:
        grouped.setdefault(sample.task_id, []).append(sample)

    factory = _backend_factory(req.backend)
    outcomes: list[TaskOutcome] = []
    counterexamples: dict[str, list[dict]] = {}
    for task_id in sorted(grouped):
        task = by_id[task_id]
        evaluation = evaluate_task(
            task, grouped[task_id], factory,
            parallel=req.parallel,
            short_circuit=req.short_circuit,
            on_defect=req.on_defect,
        )
        outcomes.append(TaskOutcome(
            task_id=task_id, n=evaluation.n,
            c_base=evaluation.c_base, c_plus=evaluation.c_plus,
        ))
        examples = evaluation.counterexamples()
        if examples:
            counterexamples[task_id] = examples
    skipped = sorted(set(by_id) - set(grouped))
    if skipped:
        log.info("no samples for %d task(s): %s", len(skipped), ", ".join(skipped))

    max_k = max(req.ks)
    for outcome in outcomes:
        if outcome.n < max_k:
            raise DomainError(
                f"k={max_k} exceeds sample count n={outcome.n} "
                f"for task {outcome.task_id!r}"
            )

    config = {
        "ks": req.ks, "greedy": req.greedy, "parallel": req.parallel,
        "backend": req.backend.model_dump(exclude_none=True),
        "dataset": req.dataset, "samples": req.samples,
        "tool": "suiteforge", "version": __version__,
    }
    report = EvalReport(
        outcomes=outcomes, ks=req.ks, greedy=req.greedy,
        config=config, counterexamples=counterexamples,
        version=__version__,
    )
    write_records(req.out, {"format": REPORT_FORMAT}, report.to_records())
    aggregates = {
        report.k_label(k): {"base": base, "plus": plus, "drop": base - plus}
        for k, (base, plus) in report.aggregates().items()
    }
    return models.EvaluateResponse(
        outcomes=[models.TaskOutcomeModel(**o.to_record()) for o in outcomes],
        aggregates=aggregates,
        out=req.out,
        table=render_report(report),
        config=config,
    )


def _load_alt_programs(alt: str, tasks: list[Task]) -> dict[str, str]:
    """Alternative ground truths: a directory of ``<task_id>.py`` files or a
    JSONL file of ``{task_id, program}`` records."""
    path = Path(alt)
    programs: dict[str, str] = {}
    if path.is_dir():
        for task in tasks:
            candidate = path / f"{safe_name(task.task_id)}.py"
            if candidate.exists():
                programs[task.task_id] = candidate.read_text(encoding="utf-8")
        if not programs:
            raise SchemaError(f"no alternative implementations found in {alt}",
                              path=alt)
        return programs
    if not path.exists():
        raise SchemaError(f"alternative source not found: {alt}", path=alt)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "format" in rec:
                continue
            if "task_id" not in rec or "program" not in rec:
                raise SchemaError(
                    f"record {lineno} needs task_id and program fields",
                    record=lineno, path=alt,
                )
            programs[rec["task_id"]] = rec["program"]
    return programs


def op_cross_check(req: models.CrossCheckRequest) -> models.CrossCheckResponse:
    tasks = load_tasks(req.dataset)
    alt_programs = _load_alt_programs(req.alt, tasks)
    factory = _backend_factory(req.backend)
    summaries: list[models.TaskDisagreements] = []
    records: list[dict] = []
    total = 0
    for task in tasks:
        alt = alt_programs.get(task.task_id)
        if alt is None:
            continue
        suite = task.plus_suite() if req.suites == "plus" else task.base_suite()
        found = cross_check(task, alt, suite, factory())
        total += len(found)
        if found:
            summaries.append(models.TaskDisagreements(
                task_id=task.task_id,
                count=len(found),
                examples=[d.to_record() for d in found[:req.max_rendered]],
            ))
            records.extend(
                {"task_id": task.task_id, **d.to_record()} for d in found
            )
    out = None
    if req.out:
        write_records(
            req.out,
            {"format": "suiteforge.disagreements/1",
             "meta": {"dataset": req.dataset, "alt": req.alt,
                      "suites": req.suites, "version": __version__}},
            records,
        )
        out = req.out
    return models.CrossCheckResponse(tasks=summaries, total=total, out=out)


def op_render(req: models.RenderRequest) -> models.RenderResponse:
    path = Path(req.report)
    if not path.exists():
        raise SchemaError(f"report not found: {path}", path=str(path))
    records = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec.get("format"):
                continue
            records.append(rec)
    report = EvalReport.from_records(records)
    return models.RenderResponse(text=render_report(report, req.fmt))
