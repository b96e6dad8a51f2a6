"""Shared fixtures: fixture dataset paths, value strategies, backends."""

from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import strategies as st

from suiteforge.backend import InProcessBackend
from suiteforge.dataset import Task, load_samples, load_tasks

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def fixture_tasks() -> list[Task]:
    return load_tasks(FIXTURES / "dataset.jsonl")


@pytest.fixture(scope="session")
def fixture_task_map(fixture_tasks) -> dict[str, Task]:
    return {task.task_id: task for task in fixture_tasks}


@pytest.fixture(scope="session")
def fixture_samples(fixture_task_map):
    return load_samples(FIXTURES / "samples.jsonl", known_tasks=fixture_task_map)


@pytest.fixture
def inproc() -> InProcessBackend:
    return InProcessBackend()


# --- hypothesis strategies over the value grammar ---

prims = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(min_value=-(10 ** 12), max_value=10 ** 12),
    st.floats(allow_nan=True, allow_infinity=True, width=64),
    st.text(max_size=12),
)

hashables = st.recursive(
    prims,
    lambda children: st.tuples(children) | st.tuples(children, children),
    max_leaves=6,
)


def _containers(children):
    return st.one_of(
        st.lists(children, max_size=5),
        st.lists(children, max_size=5).map(tuple),
        st.sets(hashables, max_size=5),
        st.dictionaries(prims, children, max_size=5),
    )


values = st.recursive(prims, _containers, max_leaves=12)
