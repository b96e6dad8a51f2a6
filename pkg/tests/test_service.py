"""Service endpoints: pipeline stages over HTTP with structured errors."""

import json

import pytest
from fastapi.testclient import TestClient

from suiteforge.service import create_app

from conftest import FIXTURES


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def generate_payload(tmp_path, **overrides):
    payload = {
        "dataset": str(FIXTURES / "dataset.jsonl"),
        "out": str(tmp_path / "plus.jsonl"),
        "seeds_dir": str(FIXTURES / "seeds"),
        "suites_out": str(tmp_path / "suites.jsonl"),
        "budget": {"max_inputs": 40, "wall_clock_s": 120.0, "rng_seed": 42},
        "backend": {"kind": "inproc"},
    }
    payload.update(overrides)
    return payload


class TestHealth:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["version"]


class TestGenerateEndpoint:
    def test_generates_plus_dataset(self, client, tmp_path):
        response = client.post("/generate", json=generate_payload(tmp_path))
        assert response.status_code == 200, response.text
        body = response.json()
        assert len(body["tasks"]) == 6
        for summary in body["tasks"]:
            assert summary["plus_size"] >= summary["base_size"]
        assert body["config"]["budget"]["rng_seed"] == 42

        from suiteforge.dataset import load_tasks

        plus = load_tasks(tmp_path / "plus.jsonl")
        for task in plus:
            assert task.plus_inputs is not None
            assert list(task.plus_inputs[:len(task.base_inputs)]) == \
                   list(task.base_inputs)

    def test_deterministic_given_seed(self, client, tmp_path):
        a = client.post("/generate", json=generate_payload(
            tmp_path, out=str(tmp_path / "a.jsonl"), suites_out=None,
        ))
        b = client.post("/generate", json=generate_payload(
            tmp_path, out=str(tmp_path / "b.jsonl"), suites_out=None,
        ))
        assert a.status_code == b.status_code == 200
        text_a = (tmp_path / "a.jsonl").read_text(encoding="utf-8")
        text_b = (tmp_path / "b.jsonl").read_text(encoding="utf-8")
        assert text_a == text_b

    def test_missing_dataset_is_schema_error(self, client, tmp_path):
        response = client.post("/generate", json=generate_payload(
            tmp_path, dataset=str(tmp_path / "absent.jsonl"),
        ))
        assert response.status_code == 422
        assert response.json()["error"]["kind"] == "schema-error"

    def test_missing_seed_file_is_schema_error(self, client, tmp_path):
        response = client.post("/generate", json=generate_payload(
            tmp_path, seeds_dir=str(tmp_path),
        ))
        assert response.status_code == 422
        assert response.json()["error"]["kind"] == "schema-error"


class TestEvaluateEndpoint:
    @pytest.fixture(scope="class")
    def plus_path(self, client, tmp_path_factory):
        tmp = tmp_path_factory.mktemp("evalsvc")
        response = client.post("/generate", json=generate_payload(tmp))
        assert response.status_code == 200
        return tmp / "plus.jsonl"

    def test_full_evaluation(self, client, plus_path, tmp_path):
        out = tmp_path / "report.jsonl"
        response = client.post("/evaluate", json={
            "dataset": str(plus_path),
            "samples": str(FIXTURES / "samples.jsonl"),
            "out": str(out),
            "ks": [1, 2, 4],
            "backend": {"kind": "inproc"},
            "parallel": 2,
        })
        assert response.status_code == 200, response.text
        body = response.json()
        assert len(body["outcomes"]) == 6
        for outcome in body["outcomes"]:
            assert outcome["c_plus"] <= outcome["c_base"] <= outcome["n"]
        for label, agg in body["aggregates"].items():
            assert agg["drop"] >= 0
        assert "pass@1" in body["table"]
        lines = out.read_text(encoding="utf-8").splitlines()
        assert json.loads(lines[0])["format"] == "suiteforge.report/1"
        tail = json.loads(lines[-1])
        assert tail["config"]["ks"] == [1, 2, 4]
        assert tail["version"]

    def test_k_exceeding_n_is_domain_error(self, client, plus_path, tmp_path):
        response = client.post("/evaluate", json={
            "dataset": str(plus_path),
            "samples": str(FIXTURES / "samples.jsonl"),
            "out": str(tmp_path / "r.jsonl"),
            "ks": [999],
            "backend": {"kind": "inproc"},
        })
        assert response.status_code == 400
        assert response.json()["error"]["kind"] == "domain-error"

    def test_ground_truth_defect_status(self, client, tmp_path):
        bad = {
            "task_id": "bad/crash",
            "prompt": "def f(n):\n    ...\n",
            "entry_point": "f",
            "ground_truth": "def f(n):\n    return 1 // n\n",
            "contract": [],
            "base_inputs": ["T[I:0]"],
            "atol": 1e-6,
        }
        dataset = tmp_path / "bad.jsonl"
        dataset.write_text(
            json.dumps({"format": "suiteforge.tasks/1"}) + "\n" +
            json.dumps(bad) + "\n", encoding="utf-8",
        )
        samples = tmp_path / "samples.jsonl"
        samples.write_text(
            json.dumps({"format": "suiteforge.samples/1"}) + "\n" +
            json.dumps({"task_id": "bad/crash", "sample_id": "s0",
                        "program": "def f(n):\n    return 0\n"}) + "\n",
            encoding="utf-8",
        )
        response = client.post("/evaluate", json={
            "dataset": str(dataset), "samples": str(samples),
            "out": str(tmp_path / "r.jsonl"), "ks": [1],
            "backend": {"kind": "inproc"},
        })
        assert response.status_code == 409
        assert response.json()["error"]["kind"] == "ground-truth-defect"


class TestCrossCheckEndpoint:
    def test_fig4_fixture_disagrees(self, client, tmp_path):
        gen = client.post("/generate", json=generate_payload(tmp_path))
        assert gen.status_code == 200
        response = client.post("/cross-check", json={
            "dataset": str(tmp_path / "plus.jsonl"),
            "alt": str(FIXTURES / "alt"),
            "backend": {"kind": "inproc"},
            "out": str(tmp_path / "disagreements.jsonl"),
        })
        assert response.status_code == 200, response.text
        body = response.json()
        assert body["total"] >= 1
        assert body["tasks"][0]["task_id"] == "fix/date_check"
        assert (tmp_path / "disagreements.jsonl").exists()

    def test_identical_alt_agrees(self, client, tmp_path):
        alt = tmp_path / "alt"
        alt.mkdir()
        import json as _json

        dataset_lines = (FIXTURES / "dataset.jsonl").read_text().splitlines()
        for line in dataset_lines[1:]:
            rec = _json.loads(line)
            if rec["task_id"] == "fix/add_numbers":
                (alt / "fix_add_numbers.py").write_text(rec["ground_truth"])
        response = client.post("/cross-check", json={
            "dataset": str(FIXTURES / "dataset.jsonl"),
            "alt": str(alt),
            "suites": "base",
            "backend": {"kind": "inproc"},
        })
        assert response.status_code == 200
        assert response.json()["total"] == 0


class TestSeedEndpoint:
    def test_offline_seed_stage(self, client, tmp_path):
        response = client.post("/seed", json={
            "dataset": str(FIXTURES / "dataset.jsonl"),
            "out_dir": str(tmp_path / "seeds"),
            "offline_dir": str(FIXTURES / "seeds"),
            "backend": {"kind": "inproc"},
        })
        assert response.status_code == 200, response.text
        body = response.json()
        assert len(body["tasks"]) == 6
        for summary in body["tasks"]:
            assert summary["seeds"] > 0

    def test_neither_source_is_schema_error(self, client, tmp_path):
        response = client.post("/seed", json={
            "dataset": str(FIXTURES / "dataset.jsonl"),
            "out_dir": str(tmp_path / "seeds"),
        })
        assert response.status_code == 422


class TestRenderEndpoint:
    def test_render_after_evaluate(self, client, tmp_path):
        gen = client.post("/generate", json=generate_payload(tmp_path))
        assert gen.status_code == 200
        out = tmp_path / "report.jsonl"
        ev = client.post("/evaluate", json={
            "dataset": str(tmp_path / "plus.jsonl"),
            "samples": str(FIXTURES / "samples.jsonl"),
            "out": str(out), "ks": [1, 4],
            "backend": {"kind": "inproc"},
        })
        assert ev.status_code == 200
        rendered = client.post("/render-report",
                               json={"report": str(out), "fmt": "table"})
        assert rendered.status_code == 200
        assert rendered.json()["text"] == ev.json()["table"]
