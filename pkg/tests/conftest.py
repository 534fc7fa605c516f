"""Shared builders for tests: tiny documents, synthetic corpora, campaigns."""

from __future__ import annotations

import random

import pytest

from crowdspan.corpus import Document, DocumentGroup, GoldCorpus, make_span

_VOCAB = (
    "gene", "protein", "cell", "tissue", "patient", "mutation", "allele",
    "study", "analysis", "clinical", "onset", "chronic", "acute", "renal",
    "cardiac", "hepatic", "neural", "tumor", "lesion", "biopsy", "marker",
    "therapy", "dosage", "cohort", "screen", "variant", "pathway", "sample",
)


def text_doc(doc_id: str, text: str) -> Document:
    """Document whose full_text equals ``text`` (first word becomes the title)."""
    first, _, rest = text.partition(" ")
    return Document(doc_id, first, rest)


def token_span(doc: Document, first_token: int, last_token: int):
    """Span covering tokens [first_token, last_token] of the document."""
    bounds = doc.token_boundaries
    return make_span(doc, bounds[first_token][0], bounds[last_token][1])


def synthetic_corpus(
    n_docs: int = 20,
    seed: int = 7,
    min_tokens: int = 40,
    max_tokens: int = 80,
    gold_per_doc: int = 6,
) -> GoldCorpus:
    """Deterministic corpus of word-salad abstracts with token-aligned gold."""
    rng = random.Random(seed)
    documents: dict[str, Document] = {}
    gold: dict[str, frozenset] = {}
    for i in range(n_docs):
        doc_id = f"d{i + 1:03d}"
        n_tokens = rng.randint(min_tokens, max_tokens)
        words = [rng.choice(_VOCAB) for _ in range(n_tokens)]
        doc = Document(doc_id, " ".join(words[:4]), " ".join(words[4:]))
        documents[doc_id] = doc
        starts = rng.sample(range(n_tokens - 3), min(gold_per_doc, n_tokens - 3))
        spans = []
        taken: list[tuple[int, int]] = []
        for start in sorted(starts):
            width = rng.randint(1, 3)
            first, last = start, min(start + width - 1, n_tokens - 1)
            if any(first <= hi and last >= lo for lo, hi in taken):
                continue
            taken.append((first, last))
            spans.append(token_span(doc, first, last))
        gold[doc_id] = frozenset(spans)
    partition = {d: DocumentGroup.REGULAR for d in documents}
    return GoldCorpus(documents=documents, gold=gold, partition=partition)


@pytest.fixture
def small_corpus() -> GoldCorpus:
    return synthetic_corpus(n_docs=8, seed=13, min_tokens=20, max_tokens=30, gold_per_doc=4)
