# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled hot kernels: greedy phrase matching and thresholded cosine.

Semantics must match kernels/_reference.py exactly; see the docstrings
there for the contracts.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def phrase_hits(cnp.int32_t[::1] tokens,
                cnp.int32_t[::1] head_offsets,
                cnp.int32_t[::1] head_phrase_ids,
                cnp.int32_t[::1] phrase_flat,
                cnp.int32_t[::1] phrase_offsets):
    cdef Py_ssize_t n = tokens.shape[0]
    cdef Py_ssize_t num_phrases = phrase_offsets.shape[0] - 1
    counts_arr = np.zeros(num_phrases, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef Py_ssize_t i = 0, k, h, lo, hi, length, advance
    cdef cnp.int32_t t, pid
    cdef bint match
    while i < n:
        t = tokens[i]
        advance = 1
        for h in range(head_offsets[t], head_offsets[t + 1]):
            pid = head_phrase_ids[h]
            lo = phrase_offsets[pid]
            hi = phrase_offsets[pid + 1]
            length = hi - lo
            if i + length > n:
                continue
            match = True
            for k in range(length):
                if tokens[i + k] != phrase_flat[lo + k]:
                    match = False
                    break
            if match:
                counts[pid] += 1
                advance = length
                break
        i += advance
    return counts_arr


def cosine_block(x, Py_ssize_t i0, Py_ssize_t i1,
                 Py_ssize_t j0, Py_ssize_t j1,
                 double threshold, bint upper_only):
    # the dense inner products go through BLAS (same as the reference, so
    # weights agree bit-for-bit); only the thresholded gather is compiled
    gram_arr = np.ascontiguousarray(np.asarray(x)[i0:i1] @ np.asarray(x)[j0:j1].T)
    cdef cnp.float64_t[:, ::1] gram = gram_arr
    cdef Py_ssize_t rows = i1 - i0, cols = j1 - j0
    cdef Py_ssize_t a, b, count, pos

    # pass 1: count emitted pairs
    count = 0
    for a in range(rows):
        for b in range(cols):
            if upper_only and j0 + b <= i0 + a:
                continue
            if gram[a, b] > threshold:
                count += 1

    src_arr = np.empty(count, dtype=np.int32)
    dst_arr = np.empty(count, dtype=np.int32)
    w_arr = np.empty(count, dtype=np.float64)
    cdef cnp.int32_t[::1] src = src_arr
    cdef cnp.int32_t[::1] dst = dst_arr
    cdef cnp.float64_t[::1] w = w_arr

    # pass 2: fill
    pos = 0
    for a in range(rows):
        for b in range(cols):
            if upper_only and j0 + b <= i0 + a:
                continue
            if gram[a, b] > threshold:
                src[pos] = <cnp.int32_t> (i0 + a)
                dst[pos] = <cnp.int32_t> (j0 + b)
                w[pos] = gram[a, b]
                pos += 1
    return src_arr, dst_arr, w_arr
