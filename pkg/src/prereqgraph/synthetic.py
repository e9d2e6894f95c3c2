"""Synthetic corpus generation for tests and desk-scale experiments.

Generates a concept vocabulary, a planted prerequisite DAG and lecture-like
resource files in which prerequisite-linked concepts co-occur with high
probability while unrelated concepts co-occur only at a background rate.
Also emits embedding files: an informative one whose vectors correlate
along planted edges (a stand-in for corpus-trained phrase vectors) and a
random one for untrained-embedding baselines.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class SyntheticSpec:
    num_concepts: int = 20
    num_resources: int = 60
    num_prereqs: int = 30
    co_prob: float = 0.8
    background_prob: float = 0.1
    mentions_per_concept: int = 3
    filler_vocab: int = 40
    fillers_per_resource: int = 8
    embedding_dim: int = 16
    phrase_fraction: float = 0.3
    seed: int = 0


def _concept_names(spec: SyntheticSpec, rng: np.random.Generator) -> list[str]:
    names = []
    for i in range(spec.num_concepts):
        if rng.random() < spec.phrase_fraction:
            names.append(f"topic{i} part{i}")
        else:
            names.append(f"topic{i}")
    return names


def _planted_edges(spec: SyntheticSpec, rng: np.random.Generator):
    """A random DAG: edges always point from lower to higher concept id."""
    candidates = [
        (p, q)
        for p in range(spec.num_concepts)
        for q in range(p + 1, spec.num_concepts)
    ]
    order = rng.permutation(len(candidates))[:spec.num_prereqs]
    return sorted(candidates[i] for i in order)


def generate_corpus(out_dir, spec: SyntheticSpec = SyntheticSpec()):
    """Write concepts.txt, annotations.tsv, resources/ and two embedding
    files under out_dir; returns (concept names, planted edges)."""
    out_dir = Path(out_dir)
    rng = np.random.default_rng(spec.seed)
    names = _concept_names(spec, rng)
    edges = _planted_edges(spec, rng)

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "concepts.txt").write_text(
        "\n".join(names) + "\n", encoding="utf-8"
    )
    (out_dir / "annotations.tsv").write_text(
        "".join(f"{names[p]}\t{names[q]}\n" for p, q in edges), encoding="utf-8"
    )

    neighbors: dict[int, set[int]] = {i: set() for i in range(spec.num_concepts)}
    for p, q in edges:
        neighbors[p].add(q)
        neighbors[q].add(p)

    resource_dir = out_dir / "resources"
    resource_dir.mkdir(exist_ok=True)
    for rid in range(spec.num_resources):
        focus = int(rng.integers(spec.num_concepts))
        mentioned = {focus}
        for other in range(spec.num_concepts):
            if other == focus:
                continue
            p = spec.co_prob if other in neighbors[focus] else spec.background_prob
            if rng.random() < p:
                mentioned.add(other)
        chunks = []
        for cid in sorted(mentioned):
            chunks.extend([names[cid]] * spec.mentions_per_concept)
        chunks.extend(
            f"filler{int(v)}" for v in rng.integers(spec.filler_vocab,
                                                    size=spec.fillers_per_resource)
        )
        rng.shuffle(chunks)
        (resource_dir / f"res{rid:03d}.txt").write_text(
            " ".join(chunks) + "\n", encoding="utf-8"
        )

    _write_embeddings(out_dir / "embeddings.txt", names, edges, spec, rng,
                      informative=True)
    _write_embeddings(out_dir / "embeddings_random.txt", names, edges, spec, rng,
                      informative=False)
    return names, edges


def _write_embeddings(path: Path, names, edges, spec: SyntheticSpec,
                      rng: np.random.Generator, informative: bool):
    dim = spec.embedding_dim
    base = rng.standard_normal((spec.num_concepts, dim))
    if informative:
        # propagate along planted edges so linked concepts get correlated
        # vectors, mimicking distributional similarity in a real corpus
        vectors = base.copy()
        for p, q in edges:
            vectors[q] = 0.55 * vectors[p] + 0.45 * vectors[q]
    else:
        vectors = rng.standard_normal((spec.num_concepts, dim))
    lines = []
    for cid, name in enumerate(names):
        tokens = name.split()
        for token in tokens:
            lines.append(_vector_line(token, vectors[cid], rng, jitter=0.05))
        if len(tokens) > 1:
            lines.append(_vector_line("_".join(tokens), vectors[cid], rng, jitter=0.05))
    for f in range(spec.filler_vocab):
        lines.append(_vector_line(f"filler{f}", rng.standard_normal(dim), rng, jitter=0.0))
    path.write_text("".join(lines), encoding="utf-8")


def _vector_line(key: str, vec: np.ndarray, rng: np.random.Generator,
                 jitter: float) -> str:
    noisy = vec + jitter * rng.standard_normal(len(vec))
    return key + " " + " ".join(f"{v:.6f}" for v in noisy) + "\n"
