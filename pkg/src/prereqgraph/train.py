"""Dataset splitting, negative sampling and the full-batch training loop.

Unsupervised runs reconstruct only the similarity-derived edges (the
concept-concept edge list is structurally absent from the graph and the
split is never read), so concept relations are learned purely through
resource-mediated message passing. Semi-supervised runs additionally
reconstruct the training-split concept pairs against per-epoch resampled
negative concept pairs.

All randomness flows from the run seed through named SeedSequence
children, so the split, the init and the sampling streams are independent
of each other and identical across reruns.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from prereqgraph import model as M
from prereqgraph.autodiff import AdamState, adam_step, backward
from prereqgraph.corpus import AnnotationSet, FeatureMatrix
from prereqgraph.errors import ValidationError
from prereqgraph.graph import (
    EdgeType,
    HeteroGraph,
    add_label_edges,
    normalize,
    normalize_union,
)

UNSUPERVISED = "unsupervised"
SEMISUPERVISED = "semisupervised"


@dataclass(frozen=True)
class SplitSpec:
    train_pos: tuple[tuple[int, int], ...]
    test_pos: tuple[tuple[int, int], ...]
    test_neg: tuple[tuple[int, int], ...]
    seed: int
    train_fraction: float


@dataclass(frozen=True)
class TrainSettings:
    encoder: M.EncoderConfig = field(default_factory=M.EncoderConfig)
    epochs: int = 200
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    symmetric_normalize: bool = True


@dataclass
class TrainRun:
    settings: TrainSettings
    seed: int
    mode: str
    losses: list[float]
    recon_losses: list[float]
    state: M.ModelState


def _child_seed(seed: int, stream: str) -> int:
    ss = np.random.SeedSequence([seed, int.from_bytes(stream.encode(), "big")])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def split(annotations: AnnotationSet, train_fraction: float, seed: int,
          num_concepts: int) -> SplitSpec:
    """Seeded shuffle of the positives into train/test plus balanced test
    negatives drawn from ordered non-positive, non-self concept pairs."""
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError(f"train_fraction {train_fraction} outside (0, 1)")
    positives = annotations.sorted_pairs()
    if not positives:
        raise ValidationError("no positive pairs to split")
    rng = np.random.default_rng(_child_seed(seed, "split"))
    order = rng.permutation(len(positives))
    n_train = int(np.floor(train_fraction * len(positives)))
    train_pos = tuple(positives[i] for i in order[:n_train])
    test_pos = tuple(positives[i] for i in order[n_train:])

    positive_set = set(positives)
    available = num_concepts * (num_concepts - 1) - len(positive_set)
    if available < len(test_pos):
        raise ValidationError(
            f"only {available} non-positive ordered pairs, need {len(test_pos)}"
        )
    test_neg: list[tuple[int, int]] = []
    chosen: set[tuple[int, int]] = set()
    while len(test_neg) < len(test_pos):
        p, q = (int(v) for v in rng.integers(0, num_concepts, size=2))
        pair = (p, q)
        if p == q or pair in positive_set or pair in chosen:
            continue
        chosen.add(pair)
        test_neg.append(pair)
    return SplitSpec(train_pos, test_pos, tuple(test_neg), seed, train_fraction)


def _sample_negative_pairs(rng, count, num_concepts, num_nodes, forbidden,
                           concept_pairs: bool):
    """Uniform ordered pairs avoiding the forbidden set.

    concept_pairs=True draws concept-concept pairs; otherwise draws from
    the similarity-eligible blocks (concept-resource in either
    orientation, or resource-resource)."""
    out = []
    while len(out) < count:
        if concept_pairs:
            i, j = (int(v) for v in rng.integers(0, num_concepts, size=2))
        else:
            i = int(rng.integers(0, num_nodes))
            j = int(rng.integers(0, num_nodes))
            if i < num_concepts and j < num_concepts:
                continue  # concept-concept block is not a similarity target
        if i == j or (i, j) in forbidden:
            continue
        out.append((i, j))
    return out


def _similarity_positive_pairs(graph: HeteroGraph) -> list[tuple[int, int]]:
    pairs = []
    for edge_type in (EdgeType.CONCEPT_RESOURCE, EdgeType.RESOURCE_RESOURCE):
        for i, j, _ in graph.edges.get(edge_type, ()):
            pairs.append((i, j))
    return pairs


def encoder_adjacencies(graph: HeteroGraph, settings: TrainSettings):
    if settings.encoder.variant == "gcn":
        return [normalize_union(graph, settings.symmetric_normalize)]
    adjs = normalize(graph, settings.symmetric_normalize)
    return [adjs[t] for t in graph.edge_types()]


def train(graph: HeteroGraph, features: FeatureMatrix, settings: TrainSettings,
          split_spec: SplitSpec | None, mode: str, seed: int) -> TrainRun:
    """Full-batch training of one seeded run.

    Every epoch: encode, decode, cross-entropy reconstruction (+ KL for
    variational models), Adam step. Negative pairs are resampled each
    epoch at a 1:1 ratio with the positive targets.
    """
    if mode not in (UNSUPERVISED, SEMISUPERVISED):
        raise ValidationError(f"unknown mode {mode!r}")
    if mode == UNSUPERVISED and EdgeType.CONCEPT_CONCEPT in graph.edges:
        raise ValidationError(
            "unsupervised training requires a graph without concept-concept edges"
        )
    if settings.encoder.variant == "rgcn":
        # one relation weight per active edge type
        expected = len(graph.edge_types())
        if settings.encoder.num_relations != expected:
            settings = replace(
                settings, encoder=replace(settings.encoder, num_relations=expected)
            )

    adjs = encoder_adjacencies(graph, settings)
    x = features.values

    sim_pos = _similarity_positive_pairs(graph)
    if not sim_pos:
        raise ValidationError("graph has no similarity edges to reconstruct")
    sim_forbidden = set(sim_pos)

    cc_pos: list[tuple[int, int]] = []
    cc_forbidden: set[tuple[int, int]] = set()
    if mode == SEMISUPERVISED:
        cc_pos = [(i, j) for i, j, _ in graph.edges.get(EdgeType.CONCEPT_CONCEPT, ())]
        if split_spec is None:
            raise ValidationError("semi-supervised training needs a split")
        # keep train positives, test positives and test negatives out of the
        # sampled negatives so no test pair ever becomes a training target
        cc_forbidden = (
            set(split_spec.train_pos) | set(split_spec.test_pos) | set(split_spec.test_neg)
        )

    init_rng = np.random.default_rng(_child_seed(seed, "init"))
    state = M.init_model(settings.encoder, x.shape[1], init_rng)
    opt = AdamState(state.parameters(), lr=settings.lr, beta1=settings.beta1,
                    beta2=settings.beta2, eps=settings.adam_eps)
    epoch_rng = np.random.default_rng(_child_seed(seed, "train"))

    losses: list[float] = []
    recon_losses: list[float] = []
    pos_pairs = sim_pos + cc_pos
    for epoch in range(settings.epochs):
        neg_pairs = _sample_negative_pairs(
            epoch_rng, len(sim_pos), graph.num_concepts, graph.num_nodes,
            sim_forbidden, concept_pairs=False,
        )
        if cc_pos:
            neg_pairs += _sample_negative_pairs(
                epoch_rng, len(cc_pos), graph.num_concepts, graph.num_nodes,
                cc_forbidden, concept_pairs=True,
            )
        eps_seed = int(epoch_rng.integers(0, 2**63))
        try:
            latent = M.encode(adjs, x, state, seed=eps_seed)
            scores = M.decode_bilinear(latent.z, state)
            loss, recon_value, _ = M.total_loss(scores, pos_pairs, neg_pairs, latent)
            loss_value = loss.item()
            if not np.isfinite(loss_value):
                raise FloatingPointError("loss is not finite")
            backward(loss)
            adam_step(state.parameters(), opt)
        except FloatingPointError as exc:
            norms = {k: float(np.linalg.norm(v.values)) for k, v in state.params.items()}
            raise RuntimeError(
                f"training diverged at epoch {epoch}: {exc}; parameter norms {norms}"
            ) from exc
        losses.append(loss_value)
        recon_losses.append(recon_value)
    return TrainRun(settings, seed, mode, losses, recon_losses, state)


def prepare_run_graph(base_graph: HeteroGraph, split_spec: SplitSpec | None,
                      mode: str, supervision_fraction: float, seed: int) -> HeteroGraph:
    """The per-run training graph: unchanged for unsupervised runs, label
    edges from a seeded fraction of the train positives otherwise."""
    if mode == UNSUPERVISED:
        return base_graph
    if split_spec is None:
        raise ValidationError("semi-supervised runs need a split")
    train_annotations = AnnotationSet(frozenset(split_spec.train_pos))
    return add_label_edges(
        base_graph, train_annotations, supervision_fraction, _child_seed(seed, "labels")
    )


def run_seeds(base_graph: HeteroGraph, features: FeatureMatrix,
              annotations: AnnotationSet, settings: TrainSettings, seeds: list[int],
              mode: str, supervision_fraction: float = 1.0,
              train_fraction: float = 0.9):
    """Independent end-to-end runs, one per seed.

    Returns a list of (seed, SplitSpec, TrainRun | None, error | None);
    a failing seed is recorded without cancelling its siblings.
    """
    if not seeds:
        raise ValidationError("seed list is empty")
    results = []
    for seed in seeds:
        try:
            split_spec = split(annotations, train_fraction, seed, base_graph.num_concepts)
            run_graph = prepare_run_graph(
                base_graph, split_spec, mode, supervision_fraction, seed
            )
            run = train(run_graph, features, settings, split_spec, mode, seed)
            results.append((seed, split_spec, run, None))
        except Exception as exc:  # propagate per-run failures to the caller
            results.append((seed, None, None, exc))
    return results
