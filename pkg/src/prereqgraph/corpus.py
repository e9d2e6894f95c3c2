"""Corpus ingestion and node-feature construction.

Ingests the concept list, prerequisite annotations and the lecture-text
directory, then builds node features: sparse TFIDF over the concept
vocabulary (model input), enriched TFIDF over the full corpus vocabulary
(edge construction only), and dense embeddings averaged from a
token/phrase embedding file.

Tokenization is deliberately simple and documented so independent oracle
scripts can reproduce it: lowercase, split on non-alphanumeric runs,
keep numbers, drop everything else. No stopword removal.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from prereqgraph.errors import FormatError, ParseError, ValidationError
from prereqgraph.kernels import PhraseTable

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class ConceptList:
    """Ordered concept vocabulary; ids are contiguous 0..C-1."""

    concepts: tuple[str, ...]
    index: dict[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {c: i for i, c in enumerate(self.concepts)})

    def __len__(self):
        return len(self.concepts)

    @staticmethod
    def from_strings(raw: list[str]) -> "ConceptList":
        seen: dict[str, int] = {}
        normalized: list[str] = []
        for line_no, raw_concept in enumerate(raw, start=1):
            concept = " ".join(raw_concept.lower().split())
            if not concept:
                raise ValidationError(f"empty concept at position {line_no}")
            if concept in seen:
                raise ValidationError(
                    f"duplicate concept {concept!r} (positions {seen[concept]} and {line_no})"
                )
            seen[concept] = line_no
            normalized.append(concept)
        return ConceptList(tuple(normalized))


@dataclass(frozen=True)
class ResourceDoc:
    resource_id: int
    source_path: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class AnnotationSet:
    """Ordered positive pairs (p, q): p is a prerequisite of q."""

    positives: frozenset[tuple[int, int]]

    def __len__(self):
        return len(self.positives)

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.positives)


@dataclass
class FeatureMatrix:
    """Per-node features, concepts first then resources."""

    values: np.ndarray
    num_concepts: int
    vocabulary: list[str] | None = None

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def load_concepts(concept_file: Path) -> ConceptList:
    """Read one concept per line; 'id<TAB>concept' lines are accepted too."""
    raw: list[str] = []
    for line_no, line in enumerate(_read_lines(concept_file), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) == 1:
            raw.append(parts[0])
        elif len(parts) == 2:
            if not parts[0].strip().isdigit():
                raise ParseError(f"{concept_file}:{line_no}: non-numeric id {parts[0]!r}")
            raw.append(parts[1])
        else:
            raise ParseError(f"{concept_file}:{line_no}: expected 1 or 2 tab fields")
    return ConceptList.from_strings(raw)


def load_annotations(annotation_file: Path, concepts: ConceptList) -> AnnotationSet:
    """Read 'source<TAB>target' pairs; source is a prerequisite of target."""
    positives: set[tuple[int, int]] = set()
    unknown: list[str] = []
    for line_no, line in enumerate(_read_lines(annotation_file), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2:
            raise ParseError(f"{annotation_file}:{line_no}: expected 2 tab fields")
        names = [" ".join(p.lower().split()) for p in parts]
        ids = []
        for name in names:
            if name not in concepts.index:
                unknown.append(f"line {line_no}: {name!r}")
            else:
                ids.append(concepts.index[name])
        if len(ids) == 2:
            if ids[0] == ids[1]:
                raise ValidationError(
                    f"{annotation_file}:{line_no}: self pair {names[0]!r}"
                )
            positives.add((ids[0], ids[1]))
    if unknown:
        raise ValidationError(
            f"{annotation_file}: unknown concepts in annotations: " + "; ".join(unknown)
        )
    return AnnotationSet(frozenset(positives))


def load_resources(resource_dir: Path) -> list[ResourceDoc]:
    """Read every .txt file, sorted by name for deterministic ids."""
    resource_dir = Path(resource_dir)
    if not resource_dir.is_dir():
        raise ValidationError(f"resource directory {resource_dir} does not exist")
    paths = sorted(resource_dir.glob("*.txt"))
    if not paths:
        raise ValidationError(f"resource directory {resource_dir} has no .txt files")
    docs = []
    for rid, path in enumerate(paths):
        tokens = tuple(tokenize(path.read_text(encoding="utf-8")))
        if not tokens:
            raise ValidationError(f"resource {path} contains no tokens")
        docs.append(ResourceDoc(rid, str(path), tokens))
    return docs


def load_corpus(concept_file, annotation_file, resource_dir):
    concepts = load_concepts(Path(concept_file))
    annotations = load_annotations(Path(annotation_file), concepts)
    resources = load_resources(Path(resource_dir))
    return concepts, annotations, resources


def _read_lines(path: Path) -> list[str]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"input file {path} does not exist")
    return path.read_text(encoding="utf-8").splitlines()


# --- term counting -----------------------------------------------------------

class _TermIndex:
    """Maps a term set (unigrams + multi-token phrases) over a token index."""

    def __init__(self, terms: list[tuple[str, ...]], token_ids: dict[str, int]):
        self.terms = terms
        self.token_ids = token_ids
        self.unigram_cols: dict[int, int] = {}
        phrases: list[tuple[int, ...]] = []
        self.phrase_cols: list[int] = []
        for col, term in enumerate(terms):
            if len(term) == 1:
                self.unigram_cols[token_ids[term[0]]] = col
            else:
                phrases.append(tuple(token_ids[t] for t in term))
                self.phrase_cols.append(col)
        self.table = PhraseTable(phrases, len(token_ids)) if phrases else None

    def count(self, tokens: tuple[str, ...]) -> np.ndarray:
        """Term counts in one document.

        Unigrams count as a plain bag of words; multi-token phrases count
        via the greedy longest-match scan, and their constituent tokens
        still count individually.
        """
        counts = np.zeros(len(self.terms))
        ids = np.fromiter(
            (self.token_ids.get(t, -1) for t in tokens), dtype=np.int32, count=len(tokens)
        )
        for tid, n in Counter(ids[ids >= 0]).items():
            col = self.unigram_cols.get(int(tid))
            if col is not None:
                counts[col] = n
        if self.table is not None:
            # unknown tokens cannot start or continue a phrase; remap them to a
            # sentinel id outside every phrase
            known = ids.copy()
            known[known < 0] = len(self.token_ids)
            counts[self.phrase_cols] = _scan_with_padding(
                self.table, known, len(self.token_ids)
            )
        return counts


def _scan_with_padding(table: PhraseTable, ids: np.ndarray, vocab_size: int) -> np.ndarray:
    # the table was built for vocab_size; ids may contain vocab_size as the
    # out-of-vocabulary sentinel, so extend the head index by one empty slot
    if ids.max(initial=-1) >= vocab_size:
        padded = PhraseTable.__new__(PhraseTable)
        padded.num_phrases = table.num_phrases
        padded._head_offsets = np.append(table._head_offsets, table._head_offsets[-1]).astype(np.int32)
        padded._head_phrase_ids = table._head_phrase_ids
        padded._phrase_flat = table._phrase_flat
        padded._phrase_offsets = table._phrase_offsets
        table = padded
    return table.count(ids)


def _smoothed_idf(df: np.ndarray, num_docs: int) -> np.ndarray:
    return np.log((1.0 + num_docs) / (1.0 + df)) + 1.0


def _l2_rows(values: np.ndarray) -> np.ndarray:
    """L2-normalize rows, leaving all-zero rows at zero."""
    norms = np.linalg.norm(values, axis=1, keepdims=True)
    return np.divide(values, np.where(norms == 0.0, 1.0, norms))


def _concept_terms(concepts: ConceptList) -> list[tuple[str, ...]]:
    return [tuple(tokenize(c)) for c in concepts.concepts]


def _build_token_index(resources, concepts) -> dict[str, int]:
    tokens: set[str] = set()
    for doc in resources:
        tokens.update(doc.tokens)
    for term in _concept_terms(concepts):
        tokens.update(term)
    return {t: i for i, t in enumerate(sorted(tokens))}


def _tfidf(resources, concepts, terms: list[tuple[str, ...]]) -> np.ndarray:
    """TFIDF rows for concept nodes then resource nodes over given terms.

    IDF is computed over the resource documents with smoothing:
    idf(t) = ln((1 + N) / (1 + df(t))) + 1. A concept node is featurized
    as the one-document bag of its own tokens/phrase. Rows L2-normalized,
    all-zero rows left at zero.
    """
    token_ids = _build_token_index(resources, concepts)
    index = _TermIndex(terms, token_ids)
    doc_counts = np.stack([index.count(doc.tokens) for doc in resources])
    concept_counts = np.stack(
        [index.count(term) for term in _concept_terms(concepts)]
    )
    df = (doc_counts > 0).sum(axis=0)
    idf = _smoothed_idf(df, len(resources))
    rows = np.vstack([concept_counts, doc_counts]) * idf
    return _l2_rows(rows)


def tfidf_sparse_features(resources: list[ResourceDoc], concepts: ConceptList) -> FeatureMatrix:
    """(C + Nr) x C TFIDF features over the concept-term vocabulary only."""
    if len(concepts) == 0:
        raise ValidationError("concept list is empty")
    terms = _concept_terms(concepts)
    values = _tfidf(resources, concepts, terms)
    return FeatureMatrix(values, len(concepts), list(concepts.concepts))


def tfidf_enriched_features(resources: list[ResourceDoc], concepts: ConceptList) -> FeatureMatrix:
    """TFIDF over the full corpus token vocabulary plus concept phrases.

    Same row layout as tfidf_sparse_features; used only for building
    similarity edges, never as model input.
    """
    if not resources:
        raise ValidationError("resource list is empty")
    unigrams: set[str] = set()
    for doc in resources:
        unigrams.update(doc.tokens)
    concept_terms = _concept_terms(concepts)
    for term in concept_terms:
        if len(term) == 1:
            unigrams.add(term[0])
    phrases = sorted({term for term in concept_terms if len(term) > 1})
    terms = [(t,) for t in sorted(unigrams)] + phrases
    values = _tfidf(resources, concepts, terms)
    vocabulary = [" ".join(t) for t in terms]
    return FeatureMatrix(values, len(concepts), vocabulary)


# --- dense embedding features ------------------------------------------------

def load_embeddings(embedding_file) -> dict[str, np.ndarray]:
    """word2vec-style text format; phrases keyed with underscores."""
    lines = _read_lines(Path(embedding_file))
    vectors: dict[str, np.ndarray] = {}
    dim = None
    for line_no, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            continue
        if line_no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
            continue  # optional "vocab_size dim" header
        key, values = parts[0], parts[1:]
        try:
            vec = np.asarray([float(v) for v in values])
        except ValueError as exc:
            raise ParseError(f"{embedding_file}:{line_no}: {exc}") from exc
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise FormatError(
                f"{embedding_file}:{line_no}: vector dimension {len(vec)} != {dim}"
            )
        vectors[key] = vec
    if not vectors:
        raise FormatError(f"{embedding_file}: no vectors found")
    return vectors


def dense_features(embedding_file, resources: list[ResourceDoc],
                   concepts: ConceptList) -> FeatureMatrix:
    """Element-wise token/phrase averaging of ingested embeddings.

    Concept node = average of its token vectors plus its full-phrase
    vector when present. Resource node = average over all its token
    occurrences plus matched concept-phrase occurrences. Out-of-vocabulary
    tokens are skipped; a node with no in-vocabulary support receives the
    corpus-mean vector.
    """
    vectors = load_embeddings(embedding_file)
    dim = len(next(iter(vectors.values())))

    corpus_tokens = sorted({t for doc in resources for t in doc.tokens})
    in_vocab = [vectors[t] for t in corpus_tokens if t in vectors]
    corpus_mean = np.mean(in_vocab, axis=0) if in_vocab else np.zeros(dim)

    concept_terms = _concept_terms(concepts)
    token_ids = _build_token_index(resources, concepts)
    multi = sorted({term for term in concept_terms if len(term) > 1})
    table = (
        PhraseTable([tuple(token_ids[t] for t in term) for term in multi], len(token_ids))
        if multi
        else None
    )
    phrase_vecs = [vectors.get("_".join(term)) for term in multi]

    rows = np.empty((len(concepts) + len(resources), dim))
    for cid, term in enumerate(concept_terms):
        parts = [vectors[t] for t in term if t in vectors]
        phrase_vec = vectors.get("_".join(term)) if len(term) > 1 else None
        if phrase_vec is not None:
            parts.append(phrase_vec)
        rows[cid] = np.mean(parts, axis=0) if parts else corpus_mean

    for doc in resources:
        total = np.zeros(dim)
        support = 0
        for token in doc.tokens:
            vec = vectors.get(token)
            if vec is not None:
                total += vec
                support += 1
        if table is not None:
            ids = np.fromiter(
                (token_ids[t] for t in doc.tokens), dtype=np.int32, count=len(doc.tokens)
            )
            for hits, vec in zip(table.count(ids), phrase_vecs):
                if hits and vec is not None:
                    total += hits * vec
                    support += int(hits)
        row = total / support if support else corpus_mean
        rows[len(concepts) + doc.resource_id] = row
    return FeatureMatrix(rows, len(concepts), None)
