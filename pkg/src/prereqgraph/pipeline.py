"""Disk-level orchestration behind the CLI subcommands.

Layout under the config's out_dir:

  build/              graph.tsv, features.npy, concepts.txt,
                      annotations.tsv, manifest.json
  seed_<s>/           config.txt, split.tsv, loss.tsv, checkpoint.npz,
                      metrics.tsv

Every artifact is a deterministic function of the inputs and the seed, so
reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from prereqgraph import corpus as C
from prereqgraph import evaluate as E
from prereqgraph import graph as G
from prereqgraph import model as M
from prereqgraph import train as T
from prereqgraph.config import RunConfig, load_config, save_config
from prereqgraph.errors import ValidationError


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def build_dir(config: RunConfig) -> Path:
    return Path(config.out_dir) / "build"


def cmd_build(config: RunConfig) -> dict:
    """Ingest the corpus, build features and the similarity graph, and
    write the build artifacts plus a manifest of counts and hashes."""
    concepts, annotations, resources = C.load_corpus(
        config.concepts, config.annotations, config.resources
    )
    if config.feature == "dense":
        features = C.dense_features(config.embeddings, resources, concepts)
    else:
        features = C.tfidf_sparse_features(resources, concepts)
    enriched = C.tfidf_enriched_features(resources, concepts)
    graph = G.build_graph(enriched, len(resources), config.edge_threshold)

    out = build_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    G.save_graph(graph, out / "graph.tsv")
    np.save(out / "features.npy", features.values)
    (out / "concepts.txt").write_text(
        "\n".join(concepts.concepts) + "\n", encoding="utf-8"
    )
    (out / "annotations.tsv").write_text(
        "".join(f"{p}\t{q}\n" for p, q in annotations.sorted_pairs()),
        encoding="utf-8",
    )
    manifest = {
        "num_concepts": len(concepts),
        "num_resources": len(resources),
        "num_annotations": len(annotations),
        "feature_kind": config.feature,
        "feature_dim": features.dim,
        "edges": {t.value: len(e) for t, e in graph.edges.items()},
        "hashes": {
            name: _sha256(out / name)
            for name in ("graph.tsv", "features.npy", "concepts.txt", "annotations.tsv")
        },
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def load_build(config: RunConfig):
    out = build_dir(config)
    if not (out / "manifest.json").is_file():
        raise ValidationError(f"no build artifacts under {out}; run build first")
    graph = G.load_graph(out / "graph.tsv")
    values = np.load(out / "features.npy")
    features = C.FeatureMatrix(values, graph.num_concepts)
    concepts = C.ConceptList.from_strings(
        (out / "concepts.txt").read_text(encoding="utf-8").splitlines()
    )
    pairs = set()
    for line in (out / "annotations.tsv").read_text(encoding="utf-8").splitlines():
        if line.strip():
            p, q = line.split("\t")
            pairs.add((int(p), int(q)))
    return graph, features, concepts, C.AnnotationSet(frozenset(pairs))


def _settings(config: RunConfig) -> T.TrainSettings:
    encoder = M.EncoderConfig(
        variant=config.encoder,
        variational=config.variational,
        hidden_dim=config.hidden_dim,
        latent_dim=config.latent_dim,
        num_relations=2,
        diagonal_decoder=config.diagonal_decoder,
    )
    return T.TrainSettings(
        encoder=encoder,
        epochs=config.epochs,
        lr=config.lr,
        symmetric_normalize=config.symmetric_normalize,
    )


def seed_dir(config: RunConfig, seed: int) -> Path:
    return Path(config.out_dir) / f"seed_{seed}"


def run_one_seed(config: RunConfig, seed: int) -> dict[str, float]:
    """Split, train and evaluate a single seed; writes its run directory."""
    graph, features, _, annotations = load_build(config)
    split_spec = T.split(annotations, config.train_fraction, seed, graph.num_concepts)
    run_graph = T.prepare_run_graph(
        graph, split_spec, config.mode, config.supervision_fraction, seed
    )
    run = T.train(run_graph, features, _settings(config), split_spec, config.mode, seed)

    out = seed_dir(config, seed)
    out.mkdir(parents=True, exist_ok=True)
    save_config(config, out / "config.txt")
    _save_split(split_spec, out / "split.tsv")
    (out / "loss.tsv").write_text(
        "".join(f"{epoch}\t{loss!r}\n" for epoch, loss in enumerate(run.losses)),
        encoding="utf-8",
    )
    M.save_checkpoint(run.state, out / "checkpoint.npz")

    adjs = T.encoder_adjacencies(run_graph, run.settings)
    z = M.latent_mean(adjs, features.values, run.state)
    metrics = E.evaluate_split(run.state, z, split_spec.test_pos, split_spec.test_neg)
    _write_metrics(out / "metrics.tsv", {seed: metrics}, mean=False)
    return metrics


def cmd_train(config: RunConfig, jobs: int = 1) -> dict[int, dict[str, float]]:
    """Train every configured seed; per-seed failures are collected and
    re-raised after the surviving seeds finish."""
    results: dict[int, dict[str, float]] = {}
    failures: dict[int, str] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {s: pool.submit(run_one_seed, config, s) for s in config.seeds}
            for seed, future in futures.items():
                try:
                    results[seed] = future.result()
                except Exception as exc:
                    failures[seed] = str(exc)
    else:
        for seed in config.seeds:
            try:
                results[seed] = run_one_seed(config, seed)
            except Exception as exc:
                failures[seed] = str(exc)
    if failures:
        detail = "; ".join(f"seed {s}: {msg}" for s, msg in failures.items())
        raise RuntimeError(f"{len(failures)} seed(s) failed: {detail}")
    return results


def cmd_eval(run_dirs: list[Path], out_path: Path | None = None) -> str:
    """Aggregate per-seed metrics files into one report with mean rows."""
    per_seed: dict[int, dict[str, float]] = {}
    for run_dir in run_dirs:
        run_dir = Path(run_dir)
        metrics_file = run_dir / "metrics.tsv"
        if not metrics_file.is_file():
            raise ValidationError(f"incomplete run {run_dir}: missing metrics.tsv")
        for line in metrics_file.read_text(encoding="utf-8").splitlines():
            metric, seed, value = line.split("\t")
            per_seed.setdefault(int(seed), {})[metric] = float(value)
    report = _format_metrics(per_seed, mean=True)
    if out_path is not None:
        Path(out_path).write_text(report, encoding="utf-8")
    return report


def cmd_analyze(run_dir: Path, threshold: float = 0.5,
                out_path: Path | None = None) -> str:
    """Score all ordered concept pairs from a finished run and report the
    recovered prerequisite graph."""
    run_dir = Path(run_dir)
    for required in ("config.txt", "checkpoint.npz", "split.tsv"):
        if not (run_dir / required).is_file():
            raise ValidationError(f"incomplete run {run_dir}: missing {required}")
    config = load_config(run_dir / "config.txt")
    seed = int(run_dir.name.split("_")[-1])
    graph, features, concepts, annotations = load_build(config)
    split_spec = _load_split(run_dir / "split.tsv", config.train_fraction)
    run_graph = T.prepare_run_graph(
        graph, split_spec, config.mode, config.supervision_fraction, seed
    )
    state = M.load_checkpoint(run_dir / "checkpoint.npz")
    settings = T.TrainSettings(
        encoder=state.config, symmetric_normalize=config.symmetric_normalize
    )
    adjs = T.encoder_adjacencies(run_graph, settings)
    z = M.latent_mean(adjs, features.values, state)
    analysis = E.analyze_concept_graph(state, z, concepts, threshold)

    lines = [f"average_degree\t{analysis.average_degree!r}"]
    for concept in concepts.concepts:
        preds = ",".join(name for name, _ in analysis.prerequisites[concept])
        lines.append(f"{concept}\t{preds}")
    text = "\n".join(lines) + "\n"
    if out_path is not None:
        Path(out_path).write_text(text, encoding="utf-8")
    return text


def _save_split(split_spec: T.SplitSpec, path: Path):
    lines = []
    for tag, pairs in (
        ("train_pos", split_spec.train_pos),
        ("test_pos", split_spec.test_pos),
        ("test_neg", split_spec.test_neg),
    ):
        lines.extend(f"{tag}\t{p}\t{q}" for p, q in pairs)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_split(path: Path, train_fraction: float) -> T.SplitSpec:
    groups: dict[str, list[tuple[int, int]]] = {
        "train_pos": [], "test_pos": [], "test_neg": []
    }
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        tag, p, q = line.split("\t")
        groups[tag].append((int(p), int(q)))
    return T.SplitSpec(
        tuple(groups["train_pos"]), tuple(groups["test_pos"]),
        tuple(groups["test_neg"]), seed=-1, train_fraction=train_fraction,
    )


def _format_metrics(per_seed: dict[int, dict[str, float]], mean: bool) -> str:
    lines = []
    for seed in sorted(per_seed):
        for metric in sorted(per_seed[seed]):
            lines.append(f"{metric}\t{seed}\t{per_seed[seed][metric]!r}")
    if mean and per_seed:
        means = E.mean_report(per_seed)
        for metric in sorted(means):
            lines.append(f"{metric}\tmean\t{means[metric]!r}")
    return "\n".join(lines) + "\n"


def _write_metrics(path: Path, per_seed: dict[int, dict[str, float]], mean: bool):
    path.write_text(_format_metrics(per_seed, mean), encoding="utf-8")
