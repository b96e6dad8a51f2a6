"""Type-aware mutation of dynamic values, with an ingredient store.

One mutation step applies exactly one operator, dispatched on the value's
kind, so mutants stay structurally similar to their parents:

    int | float   x +/- 1
    bool          random True/False
    NoneType      None
    str           remove/repeat a substring, or replace one with its mutant
    list          remove/repeat an item, or insert/replace a mutant of one
    tuple         tuple(mutate(list(x)))
    set           set(mutate(list(x)))     (duplicate collapse accepted)
    dict          remove a pair | update k -> mutate(v)
                  | insert mutate(k) -> mutate(v) from an existing pair

Primitive int/float/str leaves harvested from valid inputs (plus
whitespace-split tokens of strings) are re-injected during mutation at a
configurable probability, which lets mutants satisfy semantic constraints
that pure structural edits rarely hit.

Determinism: all randomness flows through the caller's ``random.Random``;
sets are only ever iterated in canonical order.
"""

from __future__ import annotations

import random
import string
from typing import Iterable

from .values import (
    DEFAULT_LIMITS,
    Limits,
    Value,
    encode,
    kind_of,
    sorted_elements,
)

INGREDIENT_PROB = 0.25
MAX_SPAN = 64

_KIND_DEFAULTS: dict[str, Value] = {
    "int": 0,
    "float": 0.0,
    "str": "",
    "bool": False,
    "none": None,
}


class IngredientStore:
    """Primitive data fragments harvested from valid inputs.

    One bucket per kind (int/float/str), deduplicated by canonical
    encoding, FIFO-evicted at ``capacity`` per kind.
    """

    def __init__(self, capacity: int = 1024) -> None:
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: dict[str, list[tuple[str, Value]]] = {
            "int": [], "float": [], "str": [],
        }
        self._keys: dict[str, set[str]] = {"int": set(), "float": set(), "str": set()}

    def add(self, value: Value) -> None:
        kind = kind_of(value)
        if kind not in self._items:
            return
        key = encode(value)
        if key in self._keys[kind]:
            return
        items = self._items[kind]
        if len(items) >= self.capacity:
            evicted, _ = items.pop(0)
            self._keys[kind].discard(evicted)
        items.append((key, value))
        self._keys[kind].add(key)

    def has(self, kind: str) -> bool:
        return bool(self._items.get(kind))

    def sample(self, kind: str, rng: random.Random) -> Value:
        items = self._items[kind]
        if not items:
            raise LookupError(f"no {kind} ingredients")
        return items[rng.randrange(len(items))][1]

    def values(self, kind: str) -> list[Value]:
        return [value for _, value in self._items[kind]]

    def __len__(self) -> int:
        return sum(len(items) for items in self._items.values())


def collect_ingredients(v: Value, store: IngredientStore) -> None:
    """Harvest all int/float/str leaves of ``v`` into ``store``.

    String leaves also contribute their whitespace-split tokens.  Bool and
    None leaves contribute nothing.
    """
    kind = kind_of(v)
    if kind == "bool" or kind == "none":
        return
    if kind in ("int", "float"):
        store.add(v)
    elif kind == "str":
        store.add(v)
        for token in v.split():
            store.add(token)
    elif kind in ("list", "tuple"):
        for child in v:
            collect_ingredients(child, store)
    elif kind == "set":
        for child in sorted_elements(v):
            collect_ingredients(child, store)
    elif kind == "dict":
        for key in v:
            collect_ingredients(key, store)
            collect_ingredients(v[key], store)


def mutate(
    v: Value,
    rng: random.Random,
    store: IngredientStore,
    limits: Limits = DEFAULT_LIMITS,
    ingredient_prob: float = INGREDIENT_PROB,
) -> Value:
    """One mutation step; the result has the same top-level kind as ``v``.

    The result stays within ``limits``; when an operator would overshoot a
    limit the step falls back to removal (or returns ``v`` unchanged in
    degenerate cases such as NoneType).
    """
    kind = kind_of(v)
    if kind == "none":
        return None
    if kind == "bool":
        return rng.random() < 0.5
    if kind == "int":
        if ingredient_prob > 0 and store.has("int") and rng.random() < ingredient_prob:
            return store.sample("int", rng)
        return v + rng.choice((-1, 1))
    if kind == "float":
        if ingredient_prob > 0 and store.has("float") and rng.random() < ingredient_prob:
            return store.sample("float", rng)
        return v + rng.choice((-1.0, 1.0))
    if kind == "str":
        return _mutate_str(v, rng, store, limits, ingredient_prob)
    if kind == "list":
        return _mutate_items(list(v), rng, store, limits, ingredient_prob)
    if kind == "tuple":
        return tuple(_mutate_items(list(v), rng, store, limits, ingredient_prob))
    if kind == "set":
        items = _mutate_items(sorted_elements(v), rng, store, limits, ingredient_prob)
        return set(items)
    return _mutate_dict(v, rng, store, limits, ingredient_prob)


def _random_span(rng: random.Random, length: int) -> tuple[int, int]:
    # Non-empty span [i, j), capped at MAX_SPAN characters.
    i = rng.randrange(length)
    j = rng.randint(i + 1, min(i + MAX_SPAN, length))
    return i, j


def _mutate_str(
    s: str, rng: random.Random, store: IngredientStore,
    limits: Limits, p: float,
) -> str:
    if p > 0 and store.has("str") and rng.random() < p:
        ingredient = store.sample("str", rng)
        if len(ingredient) <= limits.max_str:
            return ingredient
    if not s:
        if store.has("str"):
            token = store.sample("str", rng)
            if token:
                return token[: limits.max_str]
        return rng.choice(string.ascii_letters)
    i, j = _random_span(rng, len(s))
    op = rng.randrange(3)
    if op == 0:
        return s[:i] + s[j:]
    if op == 1:
        grown = s[:j] + s[i:j] + s[j:]
        return grown if len(grown) <= limits.max_str else s[:i] + s[j:]
    replaced = s[:i] + _mutate_str(s[i:j], rng, store, limits, p) + s[j:]
    return replaced if len(replaced) <= limits.max_str else s[:i] + s[j:]


def _spawn_element(
    rng: random.Random, store: IngredientStore, limits: Limits, p: float,
) -> Value:
    # Element for an empty container: a mutated ingredient when any exist,
    # else the int kind-default.
    kinds = [k for k in ("int", "float", "str") if store.has(k)]
    if kinds:
        seed = store.sample(rng.choice(kinds), rng)
        return mutate(seed, rng, store, limits, p)
    return _KIND_DEFAULTS["int"]


def _mutate_items(
    items: list, rng: random.Random, store: IngredientStore,
    limits: Limits, p: float,
) -> list:
    if not items:
        return [_spawn_element(rng, store, limits, p)]
    i = rng.randrange(len(items))
    op = rng.randrange(4)
    if op in (1, 2) and len(items) >= limits.max_items:
        op = 0
    if op == 0:
        return items[:i] + items[i + 1:]
    if op == 1:
        return items[: i + 1] + [items[i]] + items[i + 1:]
    mutant = mutate(items[i], rng, store, limits, p)
    if op == 2:
        return items[:i] + [mutant] + items[i:]
    return items[:i] + [mutant] + items[i + 1:]


def _spawn_key(
    rng: random.Random, store: IngredientStore, limits: Limits, p: float,
) -> Value:
    kinds = [k for k in ("int", "float", "str") if store.has(k)]
    if kinds:
        return store.sample(rng.choice(kinds), rng)
    return 0


def _mutate_dict(
    d: dict, rng: random.Random, store: IngredientStore,
    limits: Limits, p: float,
) -> dict:
    if not d:
        return {_spawn_key(rng, store, limits, p): _spawn_element(rng, store, limits, p)}
    keys = list(d)
    k = keys[rng.randrange(len(keys))]
    op = rng.randrange(3)
    if op == 2 and len(d) >= limits.max_items:
        op = 0
    if op == 0:
        return {key: d[key] for key in keys if key is not k}
    if op == 1:
        out = dict(d)
        out[k] = mutate(d[k], rng, store, limits, p)
        return out
    out = dict(d)
    new_key = mutate(k, rng, store, limits, p)
    out[new_key] = mutate(d[k], rng, store, limits, p)
    return out


def harvest_all(values: Iterable[Value], store: IngredientStore) -> None:
    for v in values:
        collect_ingredients(v, store)
