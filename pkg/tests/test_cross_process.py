"""Determinism across interpreter processes.

String hashing is randomized per process (PYTHONHASHSEED), so any code
path that leaks native set iteration order would produce different
encodings or pools between runs.  These tests pin byte-identical output
across processes with explicitly different hash seeds.
"""

import os
import subprocess
import sys
import textwrap

SNIPPET_ENCODE = textwrap.dedent("""
    from suiteforge.values import encode
    corpus = [
        {"delta", "alpha", "omega", "beta"},
        {("x", 1), ("a", 2), ("m", 3)},
        {"k1": {"v", "w"}, "k0": {"z", "y"}},
        [{"s1", "s2"}, {"s3"}],
    ]
    for v in corpus:
        print(encode(v))
""")

SNIPPET_POOL = textwrap.dedent("""
    import sys
    from suiteforge.backend import InProcessBackend
    from suiteforge.dataset import load_tasks
    from suiteforge.generate import GenBudget, generate_pool
    from suiteforge.seeds import load_seed_file

    dataset, seeds_dir = sys.argv[1], sys.argv[2]
    tasks = {t.task_id: t for t in load_tasks(dataset)}
    task = tasks["fix/count_words"]
    seeds = load_seed_file(seeds_dir + "/fix_count_words.seeds")
    pool = generate_pool(task, seeds, InProcessBackend(),
                         GenBudget(max_inputs=80, rng_seed=42))
    for ti in pool.members():
        print(ti.canonical)
""")


def run_with_hash_seed(snippet: str, hash_seed: str, *args: str) -> str:
    env = dict(os.environ, PYTHONHASHSEED=hash_seed)
    out = subprocess.run(
        [sys.executable, "-c", snippet, *args],
        capture_output=True, text=True, env=env, timeout=120,
    )
    assert out.returncode == 0, out.stderr
    return out.stdout


def test_encodings_identical_across_hash_seeds():
    runs = [run_with_hash_seed(SNIPPET_ENCODE, seed) for seed in ("0", "1", "424242")]
    assert runs[0] == runs[1] == runs[2]


def test_string_heavy_pool_identical_across_hash_seeds(fixtures_dir):
    args = (str(fixtures_dir / "dataset.jsonl"), str(fixtures_dir / "seeds"))
    runs = [
        run_with_hash_seed(SNIPPET_POOL, seed, *args)
        for seed in ("0", "7", "31337")
    ]
    assert runs[0] == runs[1] == runs[2]
    assert len(runs[0].splitlines()) == 80
