"""Record files: validation, round trips, atomic writes, no execution."""

import json

import pytest

from suiteforge.dataset import (
    SAMPLES_FORMAT,
    TASKS_FORMAT,
    Task,
    load_samples,
    load_suites,
    load_tasks,
    write_plus_dataset,
    write_samples,
    write_suites,
    write_tasks,
)
from suiteforge.errors import SchemaError
from suiteforge.values import TestInput


def minimal_record(**overrides):
    record = {
        "task_id": "t/one",
        "prompt": "def f(n):\n    ...\n",
        "entry_point": "f",
        "ground_truth": "def f(n):\n    return n\n",
        "contract": [],
        "base_inputs": ["T[I:1]", "T[I:2]"],
        "atol": 1e-6,
    }
    record.update(overrides)
    return record


def write_task_file(path, *records, header=None):
    lines = [json.dumps(header or {"format": TASKS_FORMAT})]
    lines.extend(json.dumps(rec) for rec in records)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


class TestLoadTasks:
    def test_fixture_dataset_loads(self, fixture_tasks):
        assert len(fixture_tasks) == 6
        assert all(task.base_inputs for task in fixture_tasks)

    def test_missing_entry_point_field(self, tmp_path):
        rec = minimal_record()
        del rec["entry_point"]
        path = write_task_file(tmp_path / "tasks.jsonl", rec)
        with pytest.raises(SchemaError) as err:
            load_tasks(path)
        assert err.value.field == "entry_point"
        assert err.value.record == 2

    def test_duplicate_task_id(self, tmp_path):
        path = write_task_file(
            tmp_path / "tasks.jsonl", minimal_record(), minimal_record(),
        )
        with pytest.raises(SchemaError) as err:
            load_tasks(path)
        assert err.value.field == "task_id"

    def test_ground_truth_must_define_entry_point(self, tmp_path):
        rec = minimal_record(ground_truth="def g(n):\n    return n\n")
        path = write_task_file(tmp_path / "tasks.jsonl", rec)
        with pytest.raises(SchemaError):
            load_tasks(path)

    def test_contract_prechecked_at_load(self, tmp_path):
        rec = minimal_record(contract=["assert zz > 0"])
        path = write_task_file(tmp_path / "tasks.jsonl", rec)
        with pytest.raises(SchemaError) as err:
            load_tasks(path)
        assert err.value.field == "contract"

    def test_inconsistent_arity(self, tmp_path):
        rec = minimal_record(base_inputs=["T[I:1]", "T[I:1,I:2]"])
        path = write_task_file(tmp_path / "tasks.jsonl", rec)
        with pytest.raises(SchemaError):
            load_tasks(path)

    def test_arity_must_match_signature(self, tmp_path):
        rec = minimal_record(base_inputs=["T[I:1,I:2]"])
        path = write_task_file(tmp_path / "tasks.jsonl", rec)
        with pytest.raises(SchemaError):
            load_tasks(path)

    def test_bad_input_encoding(self, tmp_path):
        rec = minimal_record(base_inputs=["garbage"])
        path = write_task_file(tmp_path / "tasks.jsonl", rec)
        with pytest.raises(SchemaError):
            load_tasks(path)

    def test_wrong_format_header(self, tmp_path):
        path = write_task_file(tmp_path / "tasks.jsonl", minimal_record(),
                               header={"format": "something-else/9"})
        with pytest.raises(SchemaError):
            load_tasks(path)

    def test_invalid_json_line(self, tmp_path):
        path = tmp_path / "tasks.jsonl"
        path.write_text(
            json.dumps({"format": TASKS_FORMAT}) + "\n{broken\n",
            encoding="utf-8",
        )
        with pytest.raises(SchemaError) as err:
            load_tasks(path)
        assert err.value.record == 2

    def test_expected_outputs_length_checked(self, tmp_path):
        rec = minimal_record(expected_outputs=["I:1"])
        path = write_task_file(tmp_path / "tasks.jsonl", rec)
        with pytest.raises(SchemaError):
            load_tasks(path)

    def test_loading_never_executes_program_text(self, tmp_path):
        canary = tmp_path / "canary"
        rec = minimal_record(ground_truth=(
            "import pathlib\n"
            f"pathlib.Path({str(canary)!r}).write_text('executed')\n"
            "def f(n):\n    return n\n"
        ))
        load_tasks(write_task_file(tmp_path / "tasks.jsonl", rec))
        assert not canary.exists()


class TestLoadSamples:
    def test_fixture_samples_load(self, fixture_samples):
        assert len(fixture_samples) == 24

    def test_unknown_task_rejected(self, tmp_path):
        path = tmp_path / "samples.jsonl"
        path.write_text(
            json.dumps({"format": SAMPLES_FORMAT}) + "\n" +
            json.dumps({"task_id": "ghost", "sample_id": "s0",
                        "program": "x = 1\n"}) + "\n",
            encoding="utf-8",
        )
        with pytest.raises(SchemaError):
            load_samples(path, known_tasks=["real"])

    def test_duplicate_sample_id(self, tmp_path):
        rec = {"task_id": "t", "sample_id": "s0", "program": "x = 1\n"}
        path = tmp_path / "samples.jsonl"
        path.write_text(
            json.dumps({"format": SAMPLES_FORMAT}) + "\n" +
            json.dumps(rec) + "\n" + json.dumps(rec) + "\n",
            encoding="utf-8",
        )
        with pytest.raises(SchemaError):
            load_samples(path)


class TestRoundTrips:
    def test_tasks(self, tmp_path, fixture_tasks):
        path = tmp_path / "tasks.jsonl"
        write_tasks(fixture_tasks, path)
        again = load_tasks(path)
        assert [t.to_record() for t in again] == \
               [t.to_record() for t in fixture_tasks]

    def test_samples(self, tmp_path, fixture_samples):
        path = tmp_path / "samples.jsonl"
        write_samples(fixture_samples, path)
        again = load_samples(path)
        assert again == fixture_samples

    def test_suites(self, tmp_path):
        suites = {
            "t/a": [TestInput((1,)), TestInput((2,))],
            "t/b": [TestInput(("x",))],
        }
        path = tmp_path / "suites.jsonl"
        write_suites(suites, path, meta={"rng_seed": 7, "max_inputs": 10})
        again = load_suites(path)
        assert {k: [t.canonical for t in v] for k, v in again.items()} == \
               {k: [t.canonical for t in v] for k, v in suites.items()}

    def test_plus_dataset_base_first_dedup(self, tmp_path, fixture_tasks):
        task = fixture_tasks[0]
        generated = [TestInput.from_canonical(task.base_inputs[0]),
                     TestInput((555, 556))]
        path = tmp_path / "plus.jsonl"
        write_plus_dataset([task], {task.task_id: generated}, path)
        loaded = load_tasks(path)[0]
        assert loaded.plus_inputs is not None
        assert list(loaded.plus_inputs[:len(task.base_inputs)]) == \
               list(task.base_inputs)
        assert loaded.plus_inputs.count(TestInput((555, 556)).canonical) == 1
        assert len(loaded.plus_inputs) == len(task.base_inputs) + 1

    def test_empty_suite_keeps_base_only(self, tmp_path, fixture_tasks):
        task = fixture_tasks[0]
        path = tmp_path / "plus.jsonl"
        write_plus_dataset([task], {}, path)
        loaded = load_tasks(path)[0]
        assert list(loaded.plus_inputs) == list(task.base_inputs)


class TestAtomicWrite:
    def test_no_partial_file_on_failure(self, tmp_path):
        path = tmp_path / "out.jsonl"
        path.write_text("original", encoding="utf-8")

        class Boom(Exception):
            pass

        def explode():
            yield {"ok": 1}
            raise Boom

        from suiteforge.dataset import write_records

        with pytest.raises(Boom):
            write_records(path, {"format": "x/1"}, explode())
        assert path.read_text(encoding="utf-8") == "original"
        assert list(tmp_path.iterdir()) == [path]


class TestTaskHelpers:
    def test_base_suite_decodes(self, fixture_task_map):
        task = fixture_task_map["fix/floor_sqrt"]
        suite = task.base_suite()
        assert [ti.args[0] for ti in suite][:4] == [0, 1, 2, 3]

    def test_plus_suite_falls_back_to_base(self):
        task = Task(task_id="t", prompt="p", entry_point="f",
                    ground_truth="def f(n):\n    return n\n",
                    base_inputs=("T[I:1]",))
        assert [t.canonical for t in task.plus_suite()] == ["T[I:1]"]
