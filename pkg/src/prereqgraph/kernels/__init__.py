"""Kernel backend selection and the PhraseTable wrapper.

The compiled Cython module is preferred when importable; setting
PREREQGRAPH_PURE_PYTHON=1 (or a failed build) selects the numpy reference
implementation. Both expose identical phrase_hits / cosine_block
signatures.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("PREREQGRAPH_PURE_PYTHON"):
    from prereqgraph.kernels._reference import cosine_block, phrase_hits

    BACKEND = "python"
else:
    try:
        from prereqgraph.kernels._speedups import cosine_block, phrase_hits

        BACKEND = "compiled"
    except ImportError:
        from prereqgraph.kernels._reference import cosine_block, phrase_hits

        BACKEND = "python"

__all__ = ["BACKEND", "PhraseTable", "cosine_block", "phrase_hits", "unit_rows"]


class PhraseTable:
    """Preprocessed multi-token phrase set for the greedy longest-match scan.

    Phrases are stored as flat token-id arrays, indexed by first token and
    ordered longest-first so the scan always prefers the longest match.
    """

    def __init__(self, phrases: list[tuple[int, ...]], vocab_size: int):
        self.num_phrases = len(phrases)
        order_by_head: dict[int, list[int]] = {}
        for pid, phrase in enumerate(phrases):
            if len(phrase) < 2:
                raise ValueError("PhraseTable holds multi-token phrases only")
            order_by_head.setdefault(phrase[0], []).append(pid)
        head_offsets = np.zeros(vocab_size + 1, dtype=np.int32)
        head_ids: list[int] = []
        for t in range(vocab_size):
            pids = sorted(order_by_head.get(t, []), key=lambda p: (-len(phrases[p]), p))
            head_ids.extend(pids)
            head_offsets[t + 1] = len(head_ids)
        self._head_offsets = head_offsets
        self._head_phrase_ids = np.asarray(head_ids, dtype=np.int32)
        self._phrase_flat = np.asarray(
            [t for phrase in phrases for t in phrase], dtype=np.int32
        )
        offsets = np.zeros(len(phrases) + 1, dtype=np.int32)
        offsets[1:] = np.cumsum([len(p) for p in phrases])
        self._phrase_offsets = offsets

    def count(self, token_ids: np.ndarray) -> np.ndarray:
        """Per-phrase occurrence counts in one document (greedy scan)."""
        if self.num_phrases == 0:
            return np.zeros(0, dtype=np.int64)
        token_ids = np.ascontiguousarray(token_ids, dtype=np.int32)
        return np.asarray(
            phrase_hits(
                token_ids,
                self._head_offsets,
                self._head_phrase_ids,
                self._phrase_flat,
                self._phrase_offsets,
            )
        )


def unit_rows(values: np.ndarray) -> np.ndarray:
    """L2-normalize rows; all-zero rows become the uniform 1/sqrt(d) vector."""
    values = np.asarray(values, dtype=np.float64)
    norms = np.linalg.norm(values, axis=1, keepdims=True)
    zero = norms[:, 0] == 0.0
    out = np.divide(values, np.where(norms == 0.0, 1.0, norms))
    if zero.any():
        out[zero] = 1.0 / np.sqrt(values.shape[1])
    return np.ascontiguousarray(out)
