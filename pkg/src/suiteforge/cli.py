"""Operator CLI: a thin client over the pipeline service.

Without ``--server`` the commands drive an in-process instance of the
service app, so nothing listens on the network and replay-backed runs are
fully self-contained; with ``--server`` the same requests go to a remote
deployment.

Exit codes: 0 success, 2 schema errors, 3 ground-truth defects (including
cross-check disagreements), 4 provider errors, 5 backend unavailable,
1 anything else.  Every failure also emits a final structured error
record on stderr.
"""

from __future__ import annotations

import json
import os
import sys
from typing import Any

import click

from . import __version__

EXIT_CODES = {
    "schema-error": 2,
    "malformed-contract": 2,
    "ground-truth-defect": 3,
    "provider-error": 4,
    "empty-harvest": 4,
    "no-valid-seeds": 4,
    "backend-unavailable": 5,
    "transcript-miss": 5,
}
DEFECT_FOUND_EXIT = 3


class Client:
    """Uniform POST interface over a remote server or the in-process app."""

    def __init__(self, server: str | None) -> None:
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        try:
            body = response.json()
        except ValueError:
            _die({"kind": "error",
                  "message": f"non-JSON response (HTTP {response.status_code})"})
        if response.status_code >= 400:
            error = body.get("error") or {
                "kind": "error", "message": json.dumps(body)[:500],
            }
            _die(error)
        return body


def _die(error: dict) -> None:
    sys.stderr.write(json.dumps({"error": error}, ensure_ascii=False) + "\n")
    sys.exit(EXIT_CODES.get(error.get("kind", ""), 1))


def _backend_payload(kind: str, transcript: str | None, record_to: str | None,
                     runner_cmd: str | None, timeout: float) -> dict:
    payload: dict[str, Any] = {"kind": kind, "default_timeout_s": timeout}
    if transcript:
        payload["transcript"] = transcript
    if record_to:
        payload["record_to"] = record_to
    if runner_cmd:
        payload["command"] = runner_cmd.split()
    return payload


def backend_options(fn):
    fn = click.option("--backend", "backend_kind",
                      type=click.Choice(["inproc", "replay", "live"]),
                      default="inproc", show_default=True,
                      help="Execution backend.")(fn)
    fn = click.option("--transcript", default=None,
                      help="Transcript file for the replay backend.")(fn)
    fn = click.option("--record-to", default=None,
                      help="Record backend traffic into this transcript.")(fn)
    fn = click.option("--runner-cmd", default=None,
                      help="Live runner command line.")(fn)
    fn = click.option("--exec-timeout", default=5.0, show_default=True,
                      help="Default per-case timeout in seconds.")(fn)
    return fn


@click.group()
@click.version_option(version=__version__)
@click.option("--server", default=None, envvar="SUITEFORGE_SERVER",
              help="Service base URL; default runs the service in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Harden benchmark test suites and score candidate programs."""
    ctx.obj = Client(server)


@main.command()
@click.option("--dataset", required=True, help="Task record file.")
@click.option("--out-dir", required=True, help="Directory for seed files.")
@click.option("--offline-seeds", default=None,
              help="Offline seed file or directory (no provider traffic).")
@click.option("--provider", "endpoint", default=None,
              help="Chat-completion endpoint URL.")
@click.option("--model", default=None, help="Provider model identifier.")
@click.option("--n-prompts", default=3, show_default=True)
@click.option("--seeds-per-prompt", default=10, show_default=True)
@click.option("--rng-seed", default=0, show_default=True)
@backend_options
@click.pass_obj
def seed(client: Client, dataset: str, out_dir: str, offline_seeds: str | None,
         endpoint: str | None, model: str | None, n_prompts: int,
         seeds_per_prompt: int, rng_seed: int, backend_kind: str,
         transcript: str | None, record_to: str | None,
         runner_cmd: str | None, exec_timeout: float) -> None:
    """Acquire seed inputs per task (provider or offline files)."""
    payload: dict[str, Any] = {
        "dataset": dataset, "out_dir": out_dir,
        "n_prompts": n_prompts, "seeds_per_prompt": seeds_per_prompt,
        "rng_seed": rng_seed,
        "backend": _backend_payload(backend_kind, transcript, record_to,
                                    runner_cmd, exec_timeout),
    }
    if offline_seeds:
        payload["offline_dir"] = offline_seeds
    elif endpoint and model:
        payload["provider"] = {"endpoint": endpoint, "model": model}
    else:
        _die({"kind": "schema-error",
              "message": "pass --offline-seeds, or --provider with --model "
                         "(offline mode needs no credentials)"})
    body = client.post("/seed", payload)
    for task in body["tasks"]:
        click.echo(f"{task['task_id']}: {task['seeds']} seed(s) -> {task['path']}")


@main.command()
@click.option("--dataset", required=True, help="Task record file.")
@click.option("--out", required=True, help="Plus dataset output path.")
@click.option("--seeds", "seeds_dir", default=None,
              help="Seed directory from the seed stage.")
@click.option("--seed-from-base", is_flag=True,
              help="Also seed the pool with the task's base inputs.")
@click.option("--suites-out", default=None,
              help="Also write generated suites as their own record file.")
@click.option("--max-inputs", default=1000, show_default=True)
@click.option("--time-budget", default=3600.0, show_default=True,
              help="Wall-clock budget per task, seconds.")
@click.option("--rng-seed", default=0, show_default=True)
@click.option("--ingredient-prob", default=0.25, show_default=True)
@click.option("--parallel", default=lambda: os.cpu_count() or 1,
              show_default="cpu count",
              help="Worker count; 1 is fully serial.")
@backend_options
@click.pass_obj
def generate(client: Client, dataset: str, out: str, seeds_dir: str | None,
             seed_from_base: bool, suites_out: str | None, max_inputs: int,
             time_budget: float, rng_seed: int, ingredient_prob: float,
             parallel: int, backend_kind: str, transcript: str | None,
             record_to: str | None, runner_cmd: str | None,
             exec_timeout: float) -> None:
    """Expand seeds into contract-valid test suites (the plus dataset)."""
    payload = {
        "dataset": dataset, "out": out, "seeds_dir": seeds_dir,
        "seed_from_base": seed_from_base, "suites_out": suites_out,
        "budget": {"max_inputs": max_inputs, "wall_clock_s": time_budget,
                   "rng_seed": rng_seed},
        "ingredient_prob": ingredient_prob, "parallel": parallel,
        "backend": _backend_payload(backend_kind, transcript, record_to,
                                    runner_cmd, exec_timeout),
    }
    body = client.post("/generate", payload)
    for task in body["tasks"]:
        flags = []
        if task["stalled"]:
            flags.append("stalled")
        if task["wall_clock_hit"]:
            flags.append("wall-clock")
        if task["crashes"]:
            flags.append(f"crashes={task['crashes']}")
        note = f" [{', '.join(flags)}]" if flags else ""
        click.echo(
            f"{task['task_id']}: base {task['base_size']} -> "
            f"plus {task['plus_size']}{note}"
        )
    click.echo(f"plus dataset: {body['out']}")


@main.command()
@click.option("--dataset", required=True, help="Plus dataset record file.")
@click.option("--samples", required=True, help="Sample record file.")
@click.option("--out", required=True, help="Report output path.")
@click.option("--k", "ks", default="1", show_default=True,
              help="Comma-separated k values.")
@click.option("--greedy", is_flag=True,
              help="Mark pass@1 as greedy decoding (k=1*).")
@click.option("--parallel", default=lambda: os.cpu_count() or 1,
              show_default="cpu count",
              help="Worker count; 1 is fully serial.")
@click.option("--full-run", is_flag=True,
              help="Judge every case instead of stopping at first failure.")
@click.option("--on-defect", type=click.Choice(["raise", "exclude"]),
              default="raise", show_default=True,
              help="Ground-truth defect handling.")
@backend_options
@click.pass_obj
def evaluate(client: Client, dataset: str, samples: str, out: str, ks: str,
             greedy: bool, parallel: int, full_run: bool, on_defect: str,
             backend_kind: str, transcript: str | None, record_to: str | None,
             runner_cmd: str | None, exec_timeout: float) -> None:
    """Score samples on base and plus suites; write the pass@k report."""
    try:
        k_list = [int(part) for part in ks.split(",") if part.strip()]
    except ValueError:
        _die({"kind": "schema-error", "message": f"bad k list: {ks!r}"})
    payload = {
        "dataset": dataset, "samples": samples, "out": out,
        "ks": k_list, "greedy": greedy, "parallel": parallel,
        "short_circuit": not full_run, "on_defect": on_defect,
        "backend": _backend_payload(backend_kind, transcript, record_to,
                                    runner_cmd, exec_timeout),
    }
    body = client.post("/evaluate", payload)
    click.echo(body["table"], nl=False)
    click.echo(f"report: {body['out']}")


@main.command("cross-check")
@click.option("--dataset", required=True, help="Task record file.")
@click.option("--alt", required=True,
              help="Directory of <task_id>.py files or a JSONL of "
                   "{task_id, program} records.")
@click.option("--suites", type=click.Choice(["base", "plus"]), default="plus",
              show_default=True)
@click.option("--out", default=None, help="Disagreement record file.")
@backend_options
@click.pass_obj
def cross_check(client: Client, dataset: str, alt: str, suites: str,
                out: str | None, backend_kind: str, transcript: str | None,
                record_to: str | None, runner_cmd: str | None,
                exec_timeout: float) -> None:
    """Differential-test the dataset's ground truths against independently
    written implementations; exits 3 when any disagreement is found."""
    payload = {
        "dataset": dataset, "alt": alt, "suites": suites, "out": out,
        "backend": _backend_payload(backend_kind, transcript, record_to,
                                    runner_cmd, exec_timeout),
    }
    body = client.post("/cross-check", payload)
    for task in body["tasks"]:
        click.echo(f"{task['task_id']}: {task['count']} disagreement(s)")
        for example in task["examples"][:3]:
            click.echo(f"  input {example['input']}: "
                       f"original={example['original']} "
                       f"alternative={example['alternative']}")
    click.echo(f"total disagreements: {body['total']}")
    if body["total"]:
        sys.exit(DEFECT_FOUND_EXIT)


@main.command()
@click.option("--report", "report_path", required=True)
@click.option("--format", "fmt", type=click.Choice(["table", "records"]),
              default="table", show_default=True)
@click.pass_obj
def report(client: Client, report_path: str, fmt: str) -> None:
    """Render a saved report."""
    body = client.post("/render-report", {"report": report_path, "fmt": fmt})
    click.echo(body["text"], nl=False)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the pipeline service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
