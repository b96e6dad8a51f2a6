"""Request/response schemas for the pipeline service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

from .. import __version__


class BackendSpec(BaseModel):
    """Execution backend selection.

    ``inproc`` executes trusted code in the service process, ``replay``
    answers from a transcript, ``live`` speaks the wire protocol to a
    runner subprocess.  ``record_to`` additionally captures traffic into a
    transcript file.
    """

    kind: Literal["inproc", "replay", "live"] = "inproc"
    transcript: str | None = None
    record_to: str | None = None
    command: list[str] | None = None
    default_timeout_s: float = 5.0


class BudgetSpec(BaseModel):
    max_inputs: int = Field(default=1000, gt=0)
    wall_clock_s: float = Field(default=3600.0, gt=0)
    rng_seed: int = 0


class ProviderSpec(BaseModel):
    endpoint: str
    model: str
    timeout_s: float = 60.0
    max_retries: int = 3
    temperature: float = 0.8
    api_key_env: str = "SUITEFORGE_API_KEY"


class SeedRequest(BaseModel):
    dataset: str
    out_dir: str
    offline_dir: str | None = None
    provider: ProviderSpec | None = None
    n_prompts: int = 3
    seeds_per_prompt: int = 10
    rng_seed: int = 0
    backend: BackendSpec = Field(default_factory=BackendSpec)


class SeedTaskSummary(BaseModel):
    task_id: str
    seeds: int
    path: str


class SeedResponse(BaseModel):
    tasks: list[SeedTaskSummary]
    out_dir: str
    version: str = __version__


class GenerateRequest(BaseModel):
    dataset: str
    out: str
    seeds_dir: str | None = None
    seed_from_base: bool = False
    suites_out: str | None = None
    budget: BudgetSpec = Field(default_factory=BudgetSpec)
    backend: BackendSpec = Field(default_factory=BackendSpec)
    ingredient_prob: float = 0.25
    parallel: int = 1


class GenerateTaskSummary(BaseModel):
    task_id: str
    base_size: int
    pool_size: int
    plus_size: int
    stalled: bool
    wall_clock_hit: bool
    dropped_seeds: int
    crashes: int
    timeouts: int


class GenerateResponse(BaseModel):
    tasks: list[GenerateTaskSummary]
    out: str
    suites_out: str | None
    config: dict[str, Any]
    version: str = __version__


class EvaluateRequest(BaseModel):
    dataset: str
    samples: str
    out: str
    ks: list[int] = Field(default_factory=lambda: [1])
    greedy: bool = False
    backend: BackendSpec = Field(default_factory=BackendSpec)
    parallel: int = 1
    short_circuit: bool = True
    on_defect: Literal["raise", "exclude"] = "raise"


class TaskOutcomeModel(BaseModel):
    task_id: str
    n: int
    c_base: int
    c_plus: int


class EvaluateResponse(BaseModel):
    outcomes: list[TaskOutcomeModel]
    aggregates: dict[str, dict[str, float]]
    out: str
    table: str
    config: dict[str, Any]
    version: str = __version__


class CrossCheckRequest(BaseModel):
    dataset: str
    alt: str
    suites: Literal["base", "plus"] = "plus"
    backend: BackendSpec = Field(default_factory=BackendSpec)
    out: str | None = None
    max_rendered: int = 20


class TaskDisagreements(BaseModel):
    task_id: str
    count: int
    examples: list[dict[str, Any]]


class CrossCheckResponse(BaseModel):
    tasks: list[TaskDisagreements]
    total: int
    out: str | None
    version: str = __version__


class RenderRequest(BaseModel):
    report: str
    fmt: Literal["table", "records"] = "table"


class RenderResponse(BaseModel):
    text: str


class ErrorDetail(BaseModel):
    kind: str
    message: str
    context: dict[str, Any] | None = None
