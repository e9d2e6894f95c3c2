"""Benchmark the compiled kernels against the numpy reference backend.

Run with:

    python benchmarks/bench_kernels.py

Times the two hot kernels (greedy phrase scanning and thresholded cosine
edge construction) on synthetic workloads sized like a mid-sized corpus,
and verifies both backends return identical results on each workload.
"""

import time

import numpy as np

from prereqgraph.kernels import PhraseTable, unit_rows
from prereqgraph.kernels import _reference

try:
    from prereqgraph.kernels import _speedups
except ImportError:
    _speedups = None


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_phrase_hits(rng):
    vocab_size = 5000
    phrases = []
    seen = set()
    while len(phrases) < 300:
        length = int(rng.integers(2, 5))
        phrase = tuple(int(v) for v in rng.integers(0, vocab_size, size=length))
        if phrase not in seen:
            seen.add(phrase)
            phrases.append(phrase)
    table = PhraseTable(phrases, vocab_size)
    docs = [
        np.ascontiguousarray(rng.integers(0, vocab_size, size=4000), dtype=np.int32)
        for _ in range(200)
    ]

    def run(backend):
        return [
            backend.phrase_hits(
                doc, table._head_offsets, table._head_phrase_ids,
                table._phrase_flat, table._phrase_offsets,
            )
            for doc in docs
        ]

    ref_time = timeit(lambda: run(_reference))
    row = f"phrase scan      reference {ref_time * 1e3:8.1f} ms"
    if _speedups is not None:
        fast_time = timeit(lambda: run(_speedups))
        for a, b in zip(run(_reference), run(_speedups)):
            np.testing.assert_array_equal(a, b)
        row += f"   compiled {fast_time * 1e3:8.1f} ms   speedup {ref_time / fast_time:5.1f}x"
    print(row)


def bench_cosine_block(rng):
    n, dim = 1500, 400
    x = unit_rows(np.abs(rng.standard_normal((n, dim))))
    args = (x, 300, n, 300, n, 0.4, True)

    ref_time = timeit(lambda: _reference.cosine_block(*args))
    row = f"cosine edges     reference {ref_time * 1e3:8.1f} ms"
    if _speedups is not None:
        fast_time = timeit(lambda: _speedups.cosine_block(*args))
        s1, d1, w1 = _reference.cosine_block(*args)
        s2, d2, w2 = _speedups.cosine_block(*args)
        np.testing.assert_array_equal(s1, s2)
        np.testing.assert_array_equal(d1, d2)
        np.testing.assert_allclose(w1, w2, atol=1e-12)
        row += f"   compiled {fast_time * 1e3:8.1f} ms   speedup {ref_time / fast_time:5.1f}x"
    print(row)


def main():
    if _speedups is None:
        print("compiled backend unavailable; timing the reference backend only")
    rng = np.random.default_rng(0)
    bench_phrase_hits(rng)
    bench_cosine_block(rng)


if __name__ == "__main__":
    main()
