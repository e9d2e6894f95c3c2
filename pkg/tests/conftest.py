import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from prereqgraph.corpus import AnnotationSet, ConceptList, ResourceDoc


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_resources(texts):
    from prereqgraph.corpus import tokenize

    return [
        ResourceDoc(i, f"mem://{i}.txt", tuple(tokenize(t))) for i, t in enumerate(texts)
    ]


@pytest.fixture
def tiny_corpus():
    """3 concepts (one a phrase), 3 resources with hand-countable terms."""
    concepts = ConceptList.from_strings(["parsing", "dynamic programming", "syntax"])
    resources = make_resources(
        [
            "parsing and more parsing with syntax",
            "dynamic programming beats naive parsing",
            "graphs and dynamic programming dynamic programming",
        ]
    )
    annotations = AnnotationSet(frozenset({(2, 0), (0, 1)}))
    return concepts, annotations, resources


@pytest.fixture
def micro_corpus_dir():
    path = Path(__file__).parent / "fixtures" / "micro"
    if not (path / "concepts.txt").is_file():
        pytest.skip("micro fixture not generated")
    return path
