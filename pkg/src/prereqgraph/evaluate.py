"""Metrics over held-out concept pairs and the recovered-graph analysis.

Tie rules are fixed and documented so the brute-force oracles in the test
suite can reproduce every value exactly: scores equal to the threshold
classify as positive; rankings break score ties by original pair order
(stable sort); AUC counts score ties as half.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from prereqgraph.corpus import AnnotationSet, ConceptList
from prereqgraph.errors import ValidationError
from prereqgraph.model import ModelState, score_pairs


@dataclass
class ScoredPairs:
    pairs: list[tuple[int, int]]
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if not (len(self.pairs) == len(self.scores) == len(self.labels)):
            raise ValidationError("pairs, scores and labels must align")
        if len(self.scores) and not np.all(np.isfinite(self.scores)):
            raise ValidationError("scores must be finite")


def _check_nonempty(sp: ScoredPairs):
    if len(sp.scores) == 0:
        raise ValidationError("empty scored-pair set")


def _predictions(sp: ScoredPairs, threshold: float) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"threshold {threshold} outside (0, 1)")
    return (sp.scores >= threshold).astype(np.int64)


def accuracy(sp: ScoredPairs, threshold: float = 0.5) -> float:
    _check_nonempty(sp)
    return float(np.mean(_predictions(sp, threshold) == sp.labels))


def macro_f1(sp: ScoredPairs, threshold: float = 0.5) -> float:
    """Mean of per-class F1 over {0, 1}; an empty class contributes 0."""
    _check_nonempty(sp)
    predicted = _predictions(sp, threshold)
    f1s = []
    for cls in (0, 1):
        tp = int(np.sum((predicted == cls) & (sp.labels == cls)))
        fp = int(np.sum((predicted == cls) & (sp.labels != cls)))
        fn = int(np.sum((predicted != cls) & (sp.labels == cls)))
        denom = 2 * tp + fp + fn
        f1s.append(2.0 * tp / denom if denom else 0.0)
    return float(np.mean(f1s))


def auc(sp: ScoredPairs) -> float:
    """Mann-Whitney AUC: probability a random positive outscores a random
    negative, ties counting one half."""
    _check_nonempty(sp)
    num_pos = int(sp.labels.sum())
    num_neg = len(sp.labels) - num_pos
    if num_pos == 0 or num_neg == 0:
        raise ValidationError("AUC needs both classes present")
    ranks = _average_ranks(sp.scores)
    pos_rank_sum = float(ranks[sp.labels == 1].sum())
    return (pos_rank_sum - num_pos * (num_pos + 1) / 2.0) / (num_pos * num_neg)


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def average_precision(scores_for_class: np.ndarray, hits: np.ndarray) -> float:
    """AP of a descending ranking; ties broken by original index."""
    order = np.argsort(-scores_for_class, kind="mergesort")
    hit_sorted = hits[order]
    cum_hits = np.cumsum(hit_sorted)
    precision_at = cum_hits / np.arange(1, len(hits) + 1)
    total = int(hit_sorted.sum())
    if total == 0:
        return 0.0
    return float(precision_at[hit_sorted].sum() / total)


def mean_average_precision(sp: ScoredPairs) -> float:
    """Macro MAP over the two label classes; class-0 ranking uses
    1 - score."""
    _check_nonempty(sp)
    if len(np.unique(sp.labels)) < 2:
        raise ValidationError("MAP needs both classes present")
    ap1 = average_precision(sp.scores, sp.labels == 1)
    ap0 = average_precision(1.0 - sp.scores, sp.labels == 0)
    return float((ap0 + ap1) / 2.0)


def map_per_concept(sp: ScoredPairs) -> float:
    """Secondary MAP variant: mean AP over target concepts with at least
    one positive, ranking each target's candidate prerequisites."""
    _check_nonempty(sp)
    targets = sorted({q for _, q in sp.pairs})
    aps = []
    for q in targets:
        idx = np.asarray([k for k, (_, qq) in enumerate(sp.pairs) if qq == q])
        hits = sp.labels[idx] == 1
        if hits.any():
            aps.append(average_precision(sp.scores[idx], hits))
    if not aps:
        raise ValidationError("no target concept has a positive pair")
    return float(np.mean(aps))


METRICS = {
    "acc": accuracy,
    "f1": macro_f1,
    "map": mean_average_precision,
    "auc": auc,
}


def evaluate_split(state: ModelState, z: np.ndarray, test_pos, test_neg) -> dict[str, float]:
    """Score the held-out pairs with the decoder and compute all metrics."""
    pairs = list(test_pos) + list(test_neg)
    scores = score_pairs(z, state, pairs)
    labels = np.array([1] * len(test_pos) + [0] * len(test_neg))
    sp = ScoredPairs(pairs, scores, labels)
    return {name: fn(sp) for name, fn in METRICS.items()}


def mean_report(per_seed: dict[int, dict[str, float]]) -> dict[str, float]:
    """Arithmetic mean over seeds for each metric."""
    if not per_seed:
        raise ValidationError("no per-seed metrics to average")
    metrics = sorted(next(iter(per_seed.values())))
    return {
        m: float(np.mean([values[m] for values in per_seed.values()])) for m in metrics
    }


# --- recovered concept graph analysis ----------------------------------------

@dataclass
class ConceptGraphAnalysis:
    average_degree: float
    prerequisites: dict[str, list[tuple[str, float]]]


def analyze_concept_graph(state: ModelState, z: np.ndarray, concepts: ConceptList,
                          threshold: float = 0.5) -> ConceptGraphAnalysis:
    """Score every ordered concept pair, threshold, and report the
    undirected average degree plus each concept's predicted prerequisite
    list sorted by descending score."""
    c = len(concepts)
    pairs = [(p, q) for p in range(c) for q in range(c) if p != q]
    scores = score_pairs(z, state, pairs)
    predicted = np.zeros((c, c), dtype=bool)
    for (p, q), s in zip(pairs, scores):
        predicted[p, q] = s >= threshold
    # undirected incident edges, parallel (reciprocal) edges collapsed
    undirected = predicted | predicted.T
    average_degree = float(undirected.sum(axis=1).mean())

    score_matrix = np.zeros((c, c))
    for (p, q), s in zip(pairs, scores):
        score_matrix[p, q] = s
    prerequisites = {}
    for q in range(c):
        preds = [
            (concepts.concepts[p], float(score_matrix[p, q]))
            for p in range(c)
            if predicted[p, q]
        ]
        preds.sort(key=lambda item: (-item[1], item[0]))
        prerequisites[concepts.concepts[q]] = preds
    return ConceptGraphAnalysis(average_degree, prerequisites)


def gold_average_degree(annotations: AnnotationSet, num_concepts: int) -> float:
    """Undirected collapsed average degree of the annotation graph."""
    adj = np.zeros((num_concepts, num_concepts), dtype=bool)
    for p, q in annotations.positives:
        adj[p, q] = adj[q, p] = True
    return float(adj.sum(axis=1).mean())
