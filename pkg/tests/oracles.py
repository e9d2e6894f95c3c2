"""Independent brute-force oracles used by the test suite.

Everything here is written from first principles (explicit loops, no
shared code with the library) so tests exercise two genuinely separate
routes to the same numbers.
"""

from __future__ import annotations

import math
import re

import numpy as np


def tokenize(text):
    return re.findall(r"[a-z0-9]+", text.lower())


def count_term(doc_tokens, term_tokens, all_phrases):
    """Occurrences of one term under the documented matching rules:
    unigrams as bag counts; multi-token phrases by a greedy longest-match
    scan over all phrases that advances past each match."""
    if len(term_tokens) == 1:
        return sum(1 for t in doc_tokens if t == term_tokens[0])
    count = 0
    i = 0
    phrases = sorted(all_phrases, key=len, reverse=True)
    while i < len(doc_tokens):
        matched = None
        for phrase in phrases:
            if tuple(doc_tokens[i:i + len(phrase)]) == tuple(phrase):
                matched = phrase
                break
        if matched is not None:
            if tuple(matched) == tuple(term_tokens):
                count += 1
            i += len(matched)
        else:
            i += 1
    return count


def tfidf_matrix(docs, concept_docs, terms):
    """Row-per-document TFIDF: tf * (ln((1+N)/(1+df)) + 1), rows L2
    normalized, df over `docs` only. concept_docs rows come first."""
    phrases = [t for t in terms if len(t) > 1]
    num_docs = len(docs)
    df = []
    for term in terms:
        df.append(sum(1 for d in docs if count_term(d, term, phrases) > 0))
    idf = [math.log((1 + num_docs) / (1 + dfi)) + 1.0 for dfi in df]
    rows = []
    for doc in list(concept_docs) + list(docs):
        row = [count_term(doc, term, phrases) * idf[k] for k, term in enumerate(terms)]
        norm = math.sqrt(sum(v * v for v in row))
        if norm > 0:
            row = [v / norm for v in row]
        rows.append(row)
    return np.array(rows)


def cosine(u, v):
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(x * x for x in v))
    if nu == 0 or nv == 0:
        return 0.0
    return sum(x * y for x, y in zip(u, v)) / (nu * nv)


def finite_diff_grad(f, values, h=1e-5):
    """Central finite differences of a scalar function of one matrix."""
    grad = np.zeros_like(values)
    it = np.nditer(values, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        plus = values.copy()
        plus[idx] += h
        minus = values.copy()
        minus[idx] -= h
        grad[idx] = (f(plus) - f(minus)) / (2 * h)
        it.iternext()
    return grad


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.linalg.norm(a) + np.linalg.norm(b)
    if denom == 0:
        return 0.0
    return np.linalg.norm(a - b) / denom


# --- metric oracles ----------------------------------------------------------

def accuracy(scores, labels, threshold=0.5):
    correct = 0
    for s, y in zip(scores, labels):
        pred = 1 if s >= threshold else 0
        correct += pred == y
    return correct / len(labels)


def macro_f1(scores, labels, threshold=0.5):
    preds = [1 if s >= threshold else 0 for s in scores]
    f1s = []
    for cls in (0, 1):
        tp = sum(1 for p, y in zip(preds, labels) if p == cls and y == cls)
        fp = sum(1 for p, y in zip(preds, labels) if p == cls and y != cls)
        fn = sum(1 for p, y in zip(preds, labels) if p != cls and y == cls)
        f1s.append(2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0)
    return sum(f1s) / 2.0


def auc(scores, labels):
    """O(P*N) pair counting, ties worth one half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def average_precision(scores, hits):
    """Descending ranking with ties broken by original index."""
    order = sorted(range(len(scores)), key=lambda k: (-scores[k], k))
    num_hits = 0
    precisions = []
    for rank, k in enumerate(order, start=1):
        if hits[k]:
            num_hits += 1
            precisions.append(num_hits / rank)
    return sum(precisions) / sum(hits) if any(hits) else 0.0


def macro_map(scores, labels):
    ap1 = average_precision(list(scores), [y == 1 for y in labels])
    ap0 = average_precision([1 - s for s in scores], [y == 0 for y in labels])
    return (ap0 + ap1) / 2.0
