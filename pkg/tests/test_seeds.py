"""Seed acquisition: prompts, literal-only parsing, provider client, offline."""

import json
import random

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from suiteforge.errors import EmptyHarvest, NoValidSeeds, ProviderError, SchemaError
from suiteforge.seeds import (
    INSTRUCTIONS,
    ProviderConfig,
    acquire_seeds,
    build_prompt,
    load_seed_file,
    parse_seed_response,
    write_seed_file,
)
from suiteforge.values import TestInput


@pytest.fixture(scope="session")
def sqrt_task(fixture_task_map):
    return fixture_task_map["fix/floor_sqrt"]


@pytest.fixture(scope="session")
def add_task(fixture_task_map):
    return fixture_task_map["fix/add_numbers"]


class TestBuildPrompt:
    def test_three_demos_from_larger_base(self, sqrt_task):
        prompt = build_prompt(sqrt_task, random.Random(0))
        assert len(prompt.demo_inputs) == 3
        base = set(sqrt_task.base_inputs)
        assert all(ti.canonical in base for ti in prompt.demo_inputs)

    def test_single_base_input_used_whole(self, sqrt_task):
        lone = sqrt_task.__class__(**{**sqrt_task.__dict__,
                                      "base_inputs": (sqrt_task.base_inputs[0],)})
        prompt = build_prompt(lone, random.Random(0))
        assert len(prompt.demo_inputs) == 1

    def test_ground_truth_verbatim(self, sqrt_task):
        prompt = build_prompt(sqrt_task, random.Random(0))
        assert sqrt_task.ground_truth in prompt.render()

    def test_instruction_rotation(self, sqrt_task):
        seen = {
            build_prompt(sqrt_task, random.Random(0), prompt_index=i).instruction
            for i in range(3)
        }
        assert len(seen) == 3

    def test_demo_subset_varies_with_rng(self, sqrt_task):
        variants = {
            tuple(t.canonical for t in
                  build_prompt(sqrt_task, random.Random(seed)).demo_inputs)
            for seed in range(10)
        }
        assert len(variants) > 1


class TestParseSeedResponse:
    def test_bare_tuple_for_binary_task(self, add_task):
        result = parse_seed_response('([1, 2], "x")\n(3, 4)\n', add_task)
        assert [ti.args for ti in result.inputs] == [([1, 2], "x"), (3, 4)]

    def test_call_expressions_skipped(self, add_task):
        result = parse_seed_response(
            'f(eval("1"), 2)\n(5, 6)\n', add_task,
        )
        assert [ti.args for ti in result.inputs] == [(5, 6)]
        assert result.skipped == 1

    def test_mixed_good_and_malformed(self, add_task):
        text = "(1, 2)\n(3, 4)\n(5,\n(7, 8)\n[9, 10]\n"
        result = parse_seed_response(text, add_task)
        assert len(result.inputs) == 4
        assert result.skipped == 1

    def test_fenced_block(self, add_task):
        text = "Here you go:\n```python\n(1, 2)\n(3, 4)\n```\nenjoy\n"
        result = parse_seed_response(text, add_task)
        assert len(result.inputs) == 2

    def test_whole_block_literal(self, add_task):
        text = "```\n[\n  1,\n  2\n]\n```\n"
        result = parse_seed_response(text, add_task)
        assert [ti.args for ti in result.inputs] == [(1, 2)]

    def test_unary_task_takes_literal_whole(self, sqrt_task):
        result = parse_seed_response("5\n144\n", sqrt_task)
        assert [ti.args for ti in result.inputs] == [(5,), (144,)]

    def test_wrong_arity_skipped(self, add_task):
        result = parse_seed_response("(1, 2, 3)\n(1, 2)\n", add_task)
        assert [ti.args for ti in result.inputs] == [(1, 2)]
        assert result.skipped == 1

    def test_bullets_and_trailing_commas(self, add_task):
        result = parse_seed_response("- (1, 2),\n2. (3, 4)\n", add_task)
        assert len(result.inputs) == 2

    def test_duplicates_collapsed(self, add_task):
        result = parse_seed_response("(1, 2)\n(1, 2)\n", add_task)
        assert len(result.inputs) == 1

    def test_empty_harvest(self, add_task):
        with pytest.raises(EmptyHarvest):
            parse_seed_response("no literals here, sorry", add_task)

    def test_non_grammar_literals_skipped(self, add_task):
        result = parse_seed_response("(1j, 2)\n(b'x', 1)\n(1, 2)\n", add_task)
        assert [ti.args for ti in result.inputs] == [(1, 2)]
        assert result.skipped == 2

    @given(payload=st.text(max_size=60))
    @settings(max_examples=300, deadline=None)
    def test_never_executes_adversarial_text(self, add_task, payload):
        # sentinel module-level state would be visible if anything ran
        marker = []
        text = (
            f"__import__('os')\n"
            f"(lambda: marker.append(1))()\n"
            f"exec({payload!r})\n"
            f"{payload}\n"
        )
        try:
            parse_seed_response(text, add_task)
        except EmptyHarvest:
            pass
        assert marker == []


class TestProvider:
    def _transport(self, replies):
        calls = {"n": 0}

        def handle(request: httpx.Request) -> httpx.Response:
            reply = replies[min(calls["n"], len(replies) - 1)]
            calls["n"] += 1
            if isinstance(reply, int):
                return httpx.Response(reply, json={"error": "upstream"})
            return httpx.Response(200, json={
                "choices": [{"message": {"content": reply}}],
            })

        return httpx.MockTransport(handle), calls

    def _config(self):
        return ProviderConfig(
            endpoint="https://provider.test/v1/chat/completions",
            model="seedgen-1", backoff_base_s=0.0, max_retries=3,
        )

    def test_around_thirty_seeds_from_three_prompts(self, sqrt_task, inproc):
        batches = [
            "\n".join(str(n) for n in range(0, 12)),        # 12 parses
            "\n".join(str(n) for n in range(10, 20)),       # 10 parses, 2 dup
            "\n".join(str(n) for n in range(19, 30)),       # 11 parses, 1 dup
        ]
        transport, _ = self._transport(batches)
        seeds = acquire_seeds(sqrt_task, self._config(), inproc,
                              transport=transport)
        assert len(seeds) == 30  # unique pre-validation union; all valid here

    def test_retry_then_success(self, sqrt_task, inproc):
        transport, calls = self._transport([500, 500, "5\n6\n"])
        seeds = acquire_seeds(sqrt_task, self._config(), inproc,
                              n_prompts=1, transport=transport)
        assert calls["n"] == 3
        assert [ti.args for ti in seeds] == [(5,), (6,)]

    def test_provider_down(self, sqrt_task, inproc):
        transport, _ = self._transport([500])
        with pytest.raises(ProviderError):
            acquire_seeds(sqrt_task, self._config(), inproc,
                          n_prompts=1, transport=transport)

    def test_invalid_seeds_dropped_then_empty_raises(self, sqrt_task, inproc):
        transport, _ = self._transport(["-5\n-6\n"])
        with pytest.raises(NoValidSeeds):
            acquire_seeds(sqrt_task, self._config(), inproc,
                          n_prompts=1, transport=transport)

    def test_credential_from_env(self, sqrt_task, inproc, monkeypatch):
        seen = {}

        def handle(request: httpx.Request) -> httpx.Response:
            seen["auth"] = request.headers.get("authorization")
            return httpx.Response(200, json={
                "choices": [{"message": {"content": "4\n"}}],
            })

        monkeypatch.setenv("SUITEFORGE_API_KEY", "sk-test-123")
        acquire_seeds(sqrt_task, self._config(), inproc, n_prompts=1,
                      transport=httpx.MockTransport(handle))
        assert seen["auth"] == "Bearer sk-test-123"


class TestOffline:
    def test_round_trip(self, tmp_path, sqrt_task, inproc):
        path = tmp_path / "seeds.txt"
        write_seed_file([TestInput((5,)), TestInput((6,))], path)
        seeds = acquire_seeds(sqrt_task, path, inproc)
        assert [ti.args for ti in seeds] == [(5,), (6,)]

    def test_bad_line_reports_position(self, tmp_path):
        path = tmp_path / "seeds.txt"
        path.write_text("T[I:5]\nnot canonical\n", encoding="utf-8")
        with pytest.raises(SchemaError) as err:
            load_seed_file(path)
        assert err.value.record == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError):
            load_seed_file(tmp_path / "absent.txt")

    def test_offline_matches_provider_for_same_seed_set(
        self, tmp_path, sqrt_task, inproc,
    ):
        from suiteforge.generate import GenBudget, generate_pool

        path = tmp_path / "seeds.txt"
        write_seed_file([TestInput((0,)), TestInput((3,))], path)
        offline = acquire_seeds(sqrt_task, path, inproc)

        def handle(request):
            return httpx.Response(200, json={
                "choices": [{"message": {"content": "0\n3\n"}}],
            })

        online = acquire_seeds(
            sqrt_task,
            ProviderConfig(endpoint="https://p.test/x", model="m",
                           backoff_base_s=0.0),
            inproc, n_prompts=1, transport=httpx.MockTransport(handle),
        )
        assert [t.canonical for t in offline] == [t.canonical for t in online]
        budget = GenBudget(max_inputs=40, rng_seed=13)
        pool_a = generate_pool(sqrt_task, offline, inproc, budget)
        pool_b = generate_pool(sqrt_task, online, inproc, budget)
        assert [t.canonical for t in pool_a.members()] == \
               [t.canonical for t in pool_b.members()]

    def test_instruction_templates_exist(self):
        assert len(INSTRUCTIONS) == 3
        assert all("{n}" in template for template in INSTRUCTIONS)
