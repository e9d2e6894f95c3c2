"""Pure-numpy reference implementations of the hot kernels.

Used when the compiled extension is unavailable (or when
PREREQGRAPH_PURE_PYTHON is set). Must stay semantically identical to
_speedups.pyx; the test suite checks parity between the two.
"""

from __future__ import annotations

import numpy as np


def phrase_hits(tokens, head_offsets, head_phrase_ids, phrase_flat, phrase_offsets):
    """Count greedy longest-match phrase occurrences in a token-id sequence.

    Phrases are grouped by first token: head_phrase_ids[head_offsets[t]:
    head_offsets[t+1]] lists phrase ids starting with token t, longest
    first. On a match the scan advances past the matched span.
    """
    counts = np.zeros(len(phrase_offsets) - 1, dtype=np.int64)
    n = len(tokens)
    i = 0
    while i < n:
        t = tokens[i]
        advance = 1
        for pid in head_phrase_ids[head_offsets[t]:head_offsets[t + 1]]:
            lo, hi = phrase_offsets[pid], phrase_offsets[pid + 1]
            length = hi - lo
            if i + length <= n and np.array_equal(tokens[i:i + length], phrase_flat[lo:hi]):
                counts[pid] += 1
                advance = length
                break
        i += advance
    return counts


def cosine_block(x, i0, i1, j0, j1, threshold, upper_only):
    """Thresholded pairwise dot products between two row blocks of x.

    x rows must already be unit-normalized, so dots are cosines. Returns
    (src, dst, weight) arrays with global row indices; emits a pair only
    when weight > threshold, and only j > i when upper_only is set.
    """
    gram = x[i0:i1] @ x[j0:j1].T
    mask = gram > threshold
    if upper_only:
        rows = np.arange(i0, i1).reshape(-1, 1)
        cols = np.arange(j0, j1).reshape(1, -1)
        mask &= cols > rows
    src, dst = np.nonzero(mask)
    return (
        (src + i0).astype(np.int32),
        (dst + j0).astype(np.int32),
        gram[src, dst].astype(np.float64),
    )
