"""Mutation engine: kind preservation, grammar closure, ingredients."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from suiteforge.mutation import (
    IngredientStore,
    collect_ingredients,
    mutate,
)
from suiteforge.values import decode, encode, kind_of

from conftest import values


@pytest.fixture
def store():
    s = IngredientStore()
    collect_ingredients([1, 2.5, "ab cd"], s)
    return s


class TestIngredientStore:
    def test_string_tokens_harvested(self):
        s = IngredientStore()
        collect_ingredients("ab cd", s)
        assert set(s.values("str")) == {"ab cd", "ab", "cd"}

    def test_bool_and_none_ignored(self):
        s = IngredientStore()
        collect_ingredients(True, s)
        collect_ingredients(None, s)
        assert len(s) == 0

    def test_recursive_visit(self):
        s = IngredientStore()
        collect_ingredients([1, [2.5]], s)
        assert s.values("int") == [1]
        assert s.values("float") == [2.5]

    def test_nested_containers_with_keys(self):
        s = IngredientStore()
        collect_ingredients({"k": (3, {4})}, s)
        assert set(s.values("int")) == {3, 4}
        assert "k" in s.values("str")

    def test_dedup(self):
        s = IngredientStore()
        for _ in range(3):
            collect_ingredients(7, s)
        assert s.values("int") == [7]

    def test_fifo_eviction(self):
        s = IngredientStore(capacity=3)
        for i in range(5):
            s.add(i)
        assert s.values("int") == [2, 3, 4]

    def test_sample_requires_content(self):
        s = IngredientStore()
        with pytest.raises(LookupError):
            s.sample("int", random.Random(0))


class TestMutate:
    def test_int_plus_minus_one(self):
        empty = IngredientStore()
        outcomes = {
            mutate(5, random.Random(i), empty, ingredient_prob=0)
            for i in range(64)
        }
        assert outcomes == {4, 6}

    def test_float_plus_minus_one(self):
        empty = IngredientStore()
        outcomes = {
            mutate(2.5, random.Random(i), empty, ingredient_prob=0)
            for i in range(64)
        }
        assert outcomes == {1.5, 3.5}

    def test_none_stays_none(self, store):
        assert mutate(None, random.Random(0), store) is None

    def test_bool_random(self, store):
        outcomes = {mutate(True, random.Random(i), store) for i in range(64)}
        assert outcomes == {True, False}

    def test_list_single_item_outcomes(self):
        empty = IngredientStore()
        outcomes = {
            encode(mutate([7], random.Random(i), empty, ingredient_prob=0))
            for i in range(200)
        }
        # remove / repeat / insert mutant / replace with mutant
        assert encode([]) in outcomes
        assert encode([7, 7]) in outcomes
        assert outcomes <= {
            encode([]), encode([7, 7]),
            encode([6]), encode([8]),
            encode([6, 7]), encode([8, 7]), encode([7, 6]), encode([7, 8]),
        }

    def test_ingredient_reachability(self):
        big = IngredientStore()
        big.add(10 ** 6)
        seen = {mutate(0, random.Random(i), big) for i in range(10_000)}
        assert 10 ** 6 in seen

    def test_empty_string_grows(self, store):
        out = mutate("", random.Random(3), store, ingredient_prob=0)
        assert isinstance(out, str) and out

    def test_empty_list_spawns_element(self, store):
        out = mutate([], random.Random(1), store)
        assert len(out) == 1

    def test_empty_dict_spawns_pair(self, store):
        out = mutate({}, random.Random(1), store)
        assert len(out) == 1

    def test_empty_containers_without_ingredients_use_int_default(self):
        empty = IngredientStore()
        assert mutate([], random.Random(0), empty) == [0]
        assert mutate({}, random.Random(0), empty) == {0: 0}

    def test_dict_operations(self):
        empty = IngredientStore()
        seed = {"a": 1, "b": 2}
        outcomes = [
            mutate(dict(seed), random.Random(i), empty, ingredient_prob=0)
            for i in range(200)
        ]
        assert any(len(o) == 1 for o in outcomes)          # removal
        assert any(len(o) == 3 for o in outcomes)          # insertion
        assert any(
            len(o) == 2 and o != seed for o in outcomes
        )                                                   # value update

    def test_set_mutation_collapses_duplicates_ok(self):
        empty = IngredientStore()
        for i in range(100):
            out = mutate({1, 2}, random.Random(i), empty, ingredient_prob=0)
            assert kind_of(out) == "set"

    def test_length_cap_respected(self):
        from suiteforge.values import Limits

        limits = Limits(max_items=3)
        empty = IngredientStore()
        for i in range(200):
            out = mutate([1, 2, 3], random.Random(i), empty, limits,
                         ingredient_prob=0)
            assert len(out) <= 3

    def test_string_cap_respected(self):
        from suiteforge.values import Limits

        limits = Limits(max_str=4)
        empty = IngredientStore()
        for i in range(200):
            out = mutate("abcd", random.Random(i), empty, limits,
                         ingredient_prob=0)
            assert len(out) <= 4

    @given(values, st.integers(min_value=0, max_value=2 ** 32))
    @settings(max_examples=300, deadline=None)
    def test_kind_preserved_and_grammar_closed(self, v, seed):
        store = IngredientStore()
        collect_ingredients([1, 2.5, "tok en"], store)
        mutant = mutate(v, random.Random(seed), store)
        assert kind_of(mutant) == kind_of(v)
        decode(encode(mutant))  # well-formed

    @given(st.integers(min_value=0, max_value=2 ** 32))
    @settings(max_examples=100, deadline=None)
    def test_same_seed_same_mutant(self, seed):
        corpus = [5, "abc def", [1, 2], {"k": 1}, (True, None), {3, 4}]
        def run():
            store = IngredientStore()
            collect_ingredients(corpus, store)
            rng = random.Random(seed)
            return [encode(mutate(v, rng, store)) for v in corpus]
        assert run() == run()
