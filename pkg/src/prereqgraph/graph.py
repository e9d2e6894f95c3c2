"""The heterogeneous concept-resource graph and its normalized adjacencies.

Node ids are global: concepts take 0..C-1, resources take C..C+Nr-1.
Similarity-derived edges (concept-resource, resource-resource) are stored
once per unordered pair and treated symmetrically; labeled
concept-concept edges are stored directed and symmetrized when the dense
encoder adjacency is built (the decoder recovers direction).

Unsupervised graphs carry no concept-concept edge list at all: the key is
structurally absent, so that code path cannot read label information.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from prereqgraph.corpus import AnnotationSet, FeatureMatrix
from prereqgraph.errors import FormatError, ValidationError
from prereqgraph.kernels import cosine_block, unit_rows

Edge = tuple[int, int, float]


class EdgeType(Enum):
    CONCEPT_CONCEPT = "concept-concept"
    CONCEPT_RESOURCE = "concept-resource"
    RESOURCE_RESOURCE = "resource-resource"


SIMILARITY_TYPES = (EdgeType.CONCEPT_RESOURCE, EdgeType.RESOURCE_RESOURCE)


@dataclass(frozen=True)
class HeteroGraph:
    num_concepts: int
    num_resources: int
    edges: dict[EdgeType, tuple[Edge, ...]]

    @property
    def num_nodes(self) -> int:
        return self.num_concepts + self.num_resources

    def edge_types(self) -> list[EdgeType]:
        """Active edge types, in a fixed canonical order."""
        return [t for t in EdgeType if t in self.edges]

    def validate(self):
        c, n = self.num_concepts, self.num_nodes
        for edge_type, edges in self.edges.items():
            for i, j, w in edges:
                if not (0 <= i < n and 0 <= j < n):
                    raise ValidationError(f"edge ({i}, {j}) outside node range")
                if i == j:
                    raise ValidationError(f"self-loop edge stored at node {i}")
                if not (np.isfinite(w) and 0.0 <= w <= 1.0):
                    raise ValidationError(f"edge weight {w} outside [0, 1]")
                kinds = sorted(node < c for node in (i, j))
                if edge_type is EdgeType.CONCEPT_RESOURCE and kinds != [False, True]:
                    raise ValidationError(f"concept-resource edge ({i}, {j}) mistyped")
                if edge_type is EdgeType.CONCEPT_CONCEPT and not all(kinds):
                    raise ValidationError(f"concept-concept edge ({i}, {j}) mistyped")
                if edge_type is EdgeType.RESOURCE_RESOURCE and any(kinds):
                    raise ValidationError(f"resource-resource edge ({i}, {j}) mistyped")


def build_similarity_edges(enriched: FeatureMatrix, types, threshold: float = 0.0):
    """Cosine-similarity edges over enriched TFIDF rows, one edge per
    unordered eligible pair with weight > threshold.

    Concept-concept pairs are never produced here. All-zero feature rows
    fall back to the uniform vector before cosine (see kernels.unit_rows).
    """
    if not 0.0 <= threshold < 1.0:
        raise ValidationError(f"threshold {threshold} outside [0, 1)")
    c = enriched.num_concepts
    n = enriched.num_nodes
    x = unit_rows(enriched.values)
    out: dict[EdgeType, tuple[Edge, ...]] = {}
    for edge_type in types:
        if edge_type is EdgeType.CONCEPT_RESOURCE:
            src, dst, w = cosine_block(x, 0, c, c, n, threshold, False)
        elif edge_type is EdgeType.RESOURCE_RESOURCE:
            src, dst, w = cosine_block(x, c, n, c, n, threshold, True)
        else:
            raise ValidationError(f"{edge_type} is not similarity-derived")
        # cosine of unit rows can exceed 1 by rounding; clip for the invariant
        w = np.minimum(w, 1.0)
        out[edge_type] = tuple(
            (int(i), int(j), float(wij)) for i, j, wij in zip(src, dst, w)
        )
    return out


def build_graph(enriched: FeatureMatrix, num_resources: int,
                threshold: float = 0.0) -> HeteroGraph:
    """The unsupervised graph: similarity edges only, no concept-concept."""
    edges = build_similarity_edges(enriched, SIMILARITY_TYPES, threshold)
    graph = HeteroGraph(enriched.num_concepts, num_resources, edges)
    graph.validate()
    return graph


def add_label_edges(graph: HeteroGraph, annotations: AnnotationSet,
                    fraction: float, seed: int) -> HeteroGraph:
    """Insert weight-1.0 concept-concept edges for a seeded random subset
    of the given positives. Fraction 0 returns the graph unchanged (the
    unsupervised setting, with the edge list structurally absent)."""
    if not 0.0 <= fraction <= 1.0:
        raise ValidationError(f"fraction {fraction} outside [0, 1]")
    pairs = annotations.sorted_pairs()
    k = int(np.floor(fraction * len(pairs)))
    if k == 0:
        return HeteroGraph(graph.num_concepts, graph.num_resources, dict(graph.edges))
    rng = np.random.default_rng(seed)
    chosen = [pairs[i] for i in rng.permutation(len(pairs))[:k]]
    edges = dict(graph.edges)
    edges[EdgeType.CONCEPT_CONCEPT] = tuple(
        (p, q, 1.0) for p, q in sorted(chosen)
    )
    out = HeteroGraph(graph.num_concepts, graph.num_resources, edges)
    out.validate()
    return out


def _dense_adjacency(graph: HeteroGraph, edge_types) -> np.ndarray:
    n = graph.num_nodes
    a = np.zeros((n, n))
    for edge_type in edge_types:
        for i, j, w in graph.edges[edge_type]:
            # every stored edge contributes symmetrically to message passing
            a[i, j] = max(a[i, j], w)
            a[j, i] = max(a[j, i], w)
    return a


def _sym_normalize(a: np.ndarray) -> np.ndarray:
    a_hat = a + np.eye(a.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]


def normalize(graph: HeteroGraph, symmetric: bool = True) -> dict[EdgeType, np.ndarray]:
    """Per-relation dense adjacency for message passing.

    Default is symmetric normalization with self-loops,
    D^-1/2 (A + I) D^-1/2 with D the degree matrix of (A + I); weighted
    edges contribute their weights to degrees. symmetric=False keeps the
    raw symmetrized A + I for fidelity experiments.
    """
    out = {}
    for edge_type in graph.edge_types():
        a = _dense_adjacency(graph, [edge_type])
        out[edge_type] = _sym_normalize(a) if symmetric else a + np.eye(a.shape[0])
    return out


def normalize_union(graph: HeteroGraph, symmetric: bool = True) -> np.ndarray:
    """A single normalized adjacency over the union of every edge type,
    for the plain (non-relational) GCN encoder."""
    a = _dense_adjacency(graph, graph.edge_types())
    return _sym_normalize(a) if symmetric else a + np.eye(a.shape[0])


# --- edge-list file round trip ----------------------------------------------

def save_graph(graph: HeteroGraph, path):
    lines = [
        "graph\t{}\t{}\t{}".format(
            graph.num_concepts,
            graph.num_resources,
            ",".join(t.value for t in graph.edge_types()),
        )
    ]
    for edge_type in graph.edge_types():
        for i, j, w in graph.edges[edge_type]:
            lines.append(f"{edge_type.value}\t{i}\t{j}\t{w!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_graph(path) -> HeteroGraph:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("graph\t"):
        raise FormatError(f"{path}: missing graph header")
    header = lines[0].split("\t")
    if len(header) != 4:
        raise FormatError(f"{path}: malformed header {lines[0]!r}")
    num_concepts, num_resources = int(header[1]), int(header[2])
    edges: dict[EdgeType, list[Edge]] = {
        EdgeType(tag): [] for tag in header[3].split(",") if tag
    }
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise FormatError(f"{path}:{line_no}: expected 4 tab fields")
        edge_type = EdgeType(parts[0])
        edges.setdefault(edge_type, []).append(
            (int(parts[1]), int(parts[2]), float(parts[3]))
        )
    graph = HeteroGraph(
        num_concepts, num_resources, {t: tuple(e) for t, e in edges.items()}
    )
    graph.validate()
    return graph
