"""Shared fixtures: a small tag set, vocabulary and toy corpora."""

import sys

import numpy as np
import pytest

from transfer_ner.corpus import TagSet, TaggedSentence, Vocabulary
from transfer_ner.embeddings import random_embeddings

TAGS = ["O", "B-loc", "I-loc", "B-per", "I-per"]


def make_sentence(words, tags, vocab, tagset):
    return TaggedSentence.from_words(words, [tagset.id(t) for t in tags], vocab)


def separable_corpus(n, seed=0, n_words=8, length=(4, 8)):
    """Sentences where every word has one fixed tag and no two chunks touch."""
    tagset = TagSet(TAGS)
    rng = np.random.default_rng(seed)
    lex = {"O": [f"o{i}" for i in range(n_words)],
           "B-loc": [f"bl{i}" for i in range(n_words)], "I-loc": [f"il{i}" for i in range(n_words)],
           "B-per": [f"bp{i}" for i in range(n_words)], "I-per": [f"ip{i}" for i in range(n_words)]}
    raw = []
    for _ in range(n):
        L = int(rng.integers(*length))
        words, tags = [], []
        while len(words) < L:
            if rng.random() < 0.3:
                etype = ["loc", "per"][int(rng.integers(2))]
                span = int(rng.integers(1, 3))
                for j in range(span):
                    tag = f"{'B' if j == 0 else 'I'}-{etype}"
                    tags.append(tag)
                    words.append(lex[tag][int(rng.integers(n_words))])
                # chunks are always closed by an outside word
                tags.append("O")
                words.append(lex["O"][int(rng.integers(n_words))])
            else:
                tags.append("O")
                words.append(lex["O"][int(rng.integers(n_words))])
        raw.append((words, tags))
    vocab = Vocabulary(sorted({w for ws in lex.values() for w in ws}))
    sents = [make_sentence(w, t, vocab, tagset) for w, t in raw]
    return sents, vocab, tagset


@pytest.fixture
def tagset():
    return TagSet(TAGS)


@pytest.fixture
def toy():
    """(sentences, vocab, tagset, table) for a small separable corpus."""
    sents, vocab, tagset = separable_corpus(40, seed=1)
    return sents, vocab, tagset, random_embeddings(vocab, 6, seed=0, scale=1.0)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
