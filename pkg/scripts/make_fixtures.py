#!/usr/bin/env python3
"""Regenerate the committed test fixtures under tests/fixtures/.

Builds the six-task fixture dataset, per-task offline seed files, the
sample set used by the evaluation tests, and the corrected alternative
implementation used by cross-check tests.  Also re-runs the brute-force
search for the list input whose set-iteration order differs from sorted
order (the input that exposes the committed buggy "sorted unique common
elements" sample) and embeds the first find into the seed fixture.

Run from the repository root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from itertools import combinations, permutations
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from suiteforge.dataset import SAMPLES_FORMAT, TASKS_FORMAT  # noqa: E402
from suiteforge.values import TestInput  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"


def find_revealing_input(limit: int = 64) -> list[int]:
    """Smallest list (by search order) whose buggy commons output is not
    sorted; relies on CPython's deterministic small-int set layout."""
    def correct(a, b):
        return sorted(set(a) & set(b))

    def buggy(a, b):
        ret = []
        for x in a:
            if x in b and x not in ret:
                ret.append(x)
        return list(set(ret))

    for size in (2, 3):
        for combo in combinations(range(limit), size):
            for perm in permutations(combo):
                candidate = list(perm)
                if buggy(candidate, candidate) != correct(candidate, candidate):
                    return candidate
    raise AssertionError("no revealing input found; set layout changed?")


ADD_GT = """\
def add_numbers(a, b):
    return a + b
"""

FLOOR_SQRT_GT = """\
def floor_sqrt(n):
    r = 0
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r
"""

# Deliberately flawed: "and" binds tighter than "or", so the day upper
# bounds apply to every month and day-31 dates in 31-day months are
# rejected.  The corrected version lives in fixtures/alt/.
DATE_GT = """\
def date_check(date):
    try:
        date = date.strip()
        month, day, year = date.split('-')
        month, day, year = int(month), int(day), int(year)
        if month < 1 or month > 12:
            return False
        if month in [1, 3, 5, 7, 8, 10, 12] and day < 1 or day > 31:
            return False
        if month in [4, 6, 9, 11] and day < 1 or day > 30:
            return False
        if month == 2 and day < 1 or day > 29:
            return False
    except Exception:
        return False
    return True
"""

DATE_ALT = """\
def date_check(date):
    try:
        date = date.strip()
        month, day, year = date.split('-')
        month, day, year = int(month), int(day), int(year)
        if month < 1 or month > 12:
            return False
        if month in [1, 3, 5, 7, 8, 10, 12] and (day < 1 or day > 31):
            return False
        if month in [4, 6, 9, 11] and (day < 1 or day > 30):
            return False
        if month == 2 and (day < 1 or day > 29):
            return False
    except Exception:
        return False
    return True
"""

COUNT_WORDS_GT = """\
def count_words(s):
    return len(s.split())
"""

FLIP_GT = """\
def flip_mapping(m):
    out = {}
    for k, v in m.items():
        out[v] = k
    return out
"""

COMMON_GT = """\
def common_sorted(a, b):
    return sorted(set(a) & set(b))
"""

COMMON_BUGGY = """\
def common_sorted(a, b):
    ret = []
    for x in a:
        if x in b and x not in ret:
            ret.append(x)
    return list(set(ret))
"""


def ti(*args) -> str:
    return TestInput(args).canonical


def tasks(revealing: list[int]) -> list[dict]:
    return [
        {
            "task_id": "fix/add_numbers",
            "prompt": "def add_numbers(a, b):\n    \"\"\"Return the sum of a and b.\"\"\"\n",
            "entry_point": "add_numbers",
            "ground_truth": ADD_GT,
            "contract": [],
            "base_inputs": [
                ti(1, 2), ti(0, 5), ti(-3, 3), ti(2.5, 0.25), ti(10, -10),
                ti(7, 8), ti(100, 200), ti(-1.5, -2.5),
                ti(123456789, 987654321),
            ],
            "atol": 1e-6,
        },
        {
            "task_id": "fix/floor_sqrt",
            "prompt": "def floor_sqrt(n):\n    \"\"\"Return the integer square root of a non-negative n.\"\"\"\n",
            "entry_point": "floor_sqrt",
            "ground_truth": FLOOR_SQRT_GT,
            "contract": ["assert n >= 0"],
            "base_inputs": [
                ti(0), ti(1), ti(2), ti(3), ti(4), ti(9), ti(15),
                ti(100), ti(9999),
            ],
            "atol": 1e-6,
        },
        {
            "task_id": "fix/date_check",
            "prompt": "def date_check(date):\n    \"\"\"True iff date is a valid mm-dd-yyyy string.\"\"\"\n",
            "entry_point": "date_check",
            "ground_truth": DATE_GT,
            "contract": ["assert isinstance(date, str)"],
            "base_inputs": [
                ti("03-11-2000"), ti("15-01-2012"), ti("04-0-2040"),
                ti("06-04-2020"), ti("06/04/2020"), ti("04-12-2003"),
                ti("01-01-2007"), ti("13-20-2022"), ti("02-29-2008"),
            ],
            "atol": 1e-6,
        },
        {
            "task_id": "fix/count_words",
            "prompt": "def count_words(s):\n    \"\"\"Number of whitespace-separated words in s.\"\"\"\n",
            "entry_point": "count_words",
            "ground_truth": COUNT_WORDS_GT,
            "contract": [],
            "base_inputs": [
                ti("hello world"), ti(""), ti("one"), ti("a b c d e"),
                ti("  padded  "), ti("tabs\tand spaces"),
                ti("many  multiple   spaces"), ti("word"),
                ti("the quick brown fox"),
            ],
            "atol": 1e-6,
        },
        {
            "task_id": "fix/flip_mapping",
            "prompt": "def flip_mapping(m):\n    \"\"\"Invert a mapping; later duplicates win.\"\"\"\n",
            "entry_point": "flip_mapping",
            "ground_truth": FLIP_GT,
            "contract": [
                "assert all(type(v) in (int, float, str, bool) or v is None"
                " for v in m.values())",
            ],
            "base_inputs": [
                ti({"a": 1, "b": 2}), ti({}), ti({"x": "y"}),
                ti({"k1": 10, "k2": 20, "k3": 30}), ti({"solo": 0}),
                ti({"m": -1, "n": -2}), ti({"p": "q", "r": "s"}),
                ti({"one": 1}), ti({"big": 999}),
            ],
            "atol": 1e-6,
        },
        {
            "task_id": "fix/common_sorted",
            "prompt": "def common_sorted(a, b):\n    \"\"\"Sorted unique elements common to both lists.\"\"\"\n",
            "entry_point": "common_sorted",
            "ground_truth": COMMON_GT,
            "contract": [],
            "base_inputs": [
                ti([1, 2, 3], [2, 3, 4]), ti([], [1]),
            ],
            "atol": 1e-6,
        },
    ]


def seeds(revealing: list[int]) -> dict[str, list[str]]:
    return {
        "fix_add_numbers": [
            ti(0, 0), ti(-1, 1), ti(999999, 1), ti(0.5, -0.5),
            ti(1000000.0, 0.000001), ti(-7, -8), ti(3, 4),
            ti(2.25, 2.75), ti(11, 13), ti(42, -42),
        ],
        "fix_floor_sqrt": [
            ti(0), ti(3), ti(8), ti(24), ti(99), ti(100), ti(101),
            ti(2500), ti(9998), ti(10000),
        ],
        "fix_date_check": [
            ti("12-31-1999"), ti("01-31-2000"), ti("02-29-2001"),
            ti("00-10-2000"), ti("06-30-1999"), ti("11-31-2021"),
            ti(" 07-04-1776 "), ti("1-1-1"), ti("12-31-0000"),
            ti("08-08-2008"),
        ],
        "fix_count_words": [
            ti(""), ti(" "), ti("a"), ti("a b"), ti("a  b   c"),
            ti("x y z w v u t s"), ti("\t\n"), ti("ends with space "),
            ti("single"), ti("double  space"),
        ],
        "fix_flip_mapping": [
            ti({"a": 1}), ti({}), ti({"x": 2, "y": 3}), ti({0: "zero"}),
            ti({"dup1": 5, "dup2": 5}), ti({"s": "t"}), ti({"n": -9}),
            ti({1: 1}), ti({"k": 0}), ti({"": ""}),
        ],
        "fix_common_sorted": [
            ti(revealing, revealing),
            ti([1, 2, 3], [3, 2, 1]), ti([5, 5, 5], [5]), ti([], []),
            ti([0, 1], [1, 0]), ti([9, 8, 7, 6], [6, 7]),
            ti([2, 4, 6], [1, 3, 5]), ti([10, 20], [20, 10, 30]),
            ti([3], [3]), ti([16, 0, 8], [8, 16, 0]),
        ],
    }


def samples() -> list[dict]:
    def rec(task_id: str, sample_id: str, program: str) -> dict:
        return {"task_id": task_id, "sample_id": sample_id, "program": program}

    return [
        rec("fix/add_numbers", "s0", ADD_GT),
        rec("fix/add_numbers", "s1",
            "def add_numbers(a, b):\n    return a - b\n"),
        rec("fix/add_numbers", "s2",
            "def add_numbers(a, b):\n    return a + b + 1e-9\n"),
        rec("fix/add_numbers", "s3",
            "def add_numbers(a, b):\n    raise ValueError('nope')\n"),

        rec("fix/floor_sqrt", "s0", FLOOR_SQRT_GT),
        rec("fix/floor_sqrt", "s1",
            "def floor_sqrt(n):\n    return int(n ** 0.5)\n"),
        rec("fix/floor_sqrt", "s2",
            "def floor_sqrt(n):\n    return n // 2\n"),
        rec("fix/floor_sqrt", "s3",
            "def floor_sqrt(n):\n    assert n > 0\n    "
            "return int(n ** 0.5)\n"),

        rec("fix/date_check", "s0", DATE_GT),
        rec("fix/date_check", "s1", DATE_ALT),  # correct logic fails vs flawed gt
        rec("fix/date_check", "s2",
            "def date_check(date):\n    return True\n"),
        rec("fix/date_check", "s3",
            "def date_check(date):\n    raise RuntimeError('no')\n"),

        rec("fix/count_words", "s0", COUNT_WORDS_GT),
        rec("fix/count_words", "s1",
            "def count_words(s):\n    return s.count(' ') + 1\n"),
        rec("fix/count_words", "s2",
            "def count_words(s):\n    return len(s.split(' '))\n"),
        rec("fix/count_words", "s3",
            "def count_words(s):\n    while True:\n        pass\n"),

        rec("fix/flip_mapping", "s0", FLIP_GT),
        rec("fix/flip_mapping", "s1",
            "def flip_mapping(m):\n    return {v: k for k, v in "
            "sorted(m.items(), key=lambda kv: str(kv[0]))}\n"),
        rec("fix/flip_mapping", "s2",
            "def flip_mapping(m):\n    return dict(m)\n"),
        rec("fix/flip_mapping", "s3",
            "def flip_mapping(m):\n    return 1 // 0\n"),

        rec("fix/common_sorted", "s0", COMMON_GT),
        rec("fix/common_sorted", "s1", COMMON_BUGGY),
        rec("fix/common_sorted", "s2",
            "def common_sorted(a, b):\n    return [x for x in sorted(a) "
            "if x in b]\n"),
        rec("fix/common_sorted", "s3",
            "def common_sorted(a, b):\n    return sorted(set(a) - set(b))\n"),
    ]


def write_jsonl(path: Path, header: dict, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def main() -> None:
    revealing = find_revealing_input()
    print(f"revealing input: {revealing}")

    write_jsonl(FIXTURES / "dataset.jsonl", {"format": TASKS_FORMAT},
                tasks(revealing))
    write_jsonl(FIXTURES / "samples.jsonl", {"format": SAMPLES_FORMAT},
                samples())

    seed_dir = FIXTURES / "seeds"
    seed_dir.mkdir(parents=True, exist_ok=True)
    for name, lines in seeds(revealing).items():
        (seed_dir / f"{name}.seeds").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )

    alt_dir = FIXTURES / "alt"
    alt_dir.mkdir(parents=True, exist_ok=True)
    (alt_dir / "fix_date_check.py").write_text(DATE_ALT, encoding="utf-8")

    (FIXTURES / "revealing_input.json").write_text(
        json.dumps({"args": [revealing, revealing],
                    "canonical": TestInput((revealing, revealing)).canonical})
        + "\n",
        encoding="utf-8",
    )
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
