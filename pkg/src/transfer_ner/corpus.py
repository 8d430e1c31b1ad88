"""Reading, cleaning, splitting and folding IOB-tagged corpora.

Corpus files hold one token per line as ``surface<TAB>tag`` with a single
blank line between sentences. Unlabeled corpora may drop the tag column;
the column count of the first non-blank line decides the layout.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ParseError, TagSetError

PAD = 0
UNK = 1
PAD_WORD = "<pad>"
UNK_WORD = "<unk>"
OUTSIDE = "O"


@dataclass(frozen=True)
class Token:
    surface: str
    vocab_id: int = UNK

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if self.vocab_id < 0:
            raise ValueError("vocab_id must be non-negative")


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[Token, ...]
    tags: tuple[int, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.tags)} tags")

    @classmethod
    def from_words(cls, words, tags, vocab: Vocabulary | None = None):
        ids = [vocab.id(w) if vocab is not None else UNK for w in words]
        return cls(tuple(Token(w, i) for w, i in zip(words, ids)), tuple(int(t) for t in tags))

    def __len__(self):
        return len(self.tokens)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(t.vocab_id for t in self.tokens)

    def with_tags(self, tags) -> TaggedSentence:
        return TaggedSentence(self.tokens, tuple(int(t) for t in tags))

    def encode(self, vocab: Vocabulary) -> TaggedSentence:
        return TaggedSentence.from_words(self.words, self.tags, vocab)


def _fingerprint(items: Iterable[str]) -> str:
    h = hashlib.sha256()
    for item in items:
        h.update(item.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()[:16]


class Vocabulary:
    """Word/id bijection with two reserved ids (0 padding, 1 unknown)."""

    reserved = (PAD_WORD, UNK_WORD)

    def __init__(self, words: Iterable[str] = (), capacity: int | None = None):
        self._words = list(self.reserved)
        self._index = {w: i for i, w in enumerate(self._words)}
        for w in words:
            if w in self._index:
                continue
            self._index[w] = len(self._words)
            self._words.append(w)
        n_real = len(self._words) - len(self.reserved)
        self.capacity = capacity if capacity is not None else max(n_real, 1)
        if n_real > self.capacity:
            raise ValueError(f"{n_real} words exceed capacity {self.capacity}")

    def __len__(self):
        return len(self._words)

    def __contains__(self, word):
        return word in self._index and self._index[word] >= len(self.reserved)

    def __iter__(self):
        return iter(self._words)

    def id(self, word: str) -> int:
        return self._index.get(word, UNK)

    def word(self, idx: int) -> str:
        return self._words[idx]

    @property
    def words(self) -> list[str]:
        return list(self._words)

    def fingerprint(self) -> str:
        return _fingerprint(self._words)

    def save(self, path):
        Path(path).write_text(
            "".join(w + "\n" for w in self._words[len(self.reserved):]), encoding="utf-8")

    @classmethod
    def load(cls, path, capacity=None):
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([ln for ln in lines if ln], capacity=capacity)


class TagSet:
    """Dense tag ids with ``O`` fixed at id 0.

    Remaining tags are ordered by entity type, ``B-`` before ``I-``, so the
    id assignment does not depend on file order. Every ``I-X`` gets a
    matching ``B-X`` so that IOB repair always has a target.
    """

    def __init__(self, tags: Iterable[str]):
        types = set()
        for tag in tags:
            if tag == OUTSIDE:
                continue
            prefix, _, etype = tag.partition("-")
            if prefix not in ("B", "I") or not etype:
                raise TagSetError(f"tag {tag!r} is not O, B-<type> or I-<type>")
            types.add((etype, prefix))
        ordered = [OUTSIDE]
        for etype, prefix in sorted(types):
            ordered.append(f"{prefix}-{etype}")
            if prefix == "I" and (etype, "B") not in types:
                ordered.insert(len(ordered) - 1, f"B-{etype}")
        self.tags = ordered
        self._index = {t: i for i, t in enumerate(ordered)}
        self._parsed = [self._parse(t) for t in ordered]

    @staticmethod
    def _parse(tag):
        if tag == OUTSIDE:
            return OUTSIDE, None
        prefix, _, etype = tag.partition("-")
        return prefix, etype

    def __len__(self):
        return len(self.tags)

    def __contains__(self, tag):
        return tag in self._index

    def __eq__(self, other):
        return isinstance(other, TagSet) and self.tags == other.tags

    def __repr__(self):
        return f"TagSet({self.tags!r})"

    def id(self, tag: str) -> int:
        try:
            return self._index[tag]
        except KeyError:
            raise TagSetError(f"unknown tag {tag!r}") from None

    def tag(self, idx: int) -> str:
        return self.tags[idx]

    def parse(self, idx: int) -> tuple[str, str | None]:
        """(prefix, entity type) for a tag id; ``("O", None)`` for outside."""
        return self._parsed[idx]

    @property
    def entity_types(self) -> list[str]:
        return sorted({etype for _, etype in self._parsed if etype is not None})

    def fingerprint(self) -> str:
        return _fingerprint(self.tags)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    test_fraction: float = 0.2
    k_folds: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction <= 1:
            raise ConfigError(f"train_fraction must be in (0, 1], got {self.train_fraction}")
        if self.test_fraction < 0:
            raise ConfigError("test_fraction must be non-negative")
        if self.train_fraction + self.test_fraction > 1 + 1e-9:
            raise ConfigError("train_fraction + test_fraction exceeds 1")
        if self.k_folds < 1:
            raise ConfigError("k_folds must be positive")


# -- reading and writing ------------------------------------------------------

def _read_blocks(path):
    """Yield lists of (line number, columns) per sentence block."""
    block = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                if block:
                    yield block
                    block = []
                continue
            block.append((lineno, line.split("\t")))
    if block:
        yield block


def read_raw(path) -> list[tuple[list[str], list[str]]]:
    """Parse a corpus file into (words, tag strings) pairs without any lookup."""
    ncols = None
    out = []
    for block in _read_blocks(path):
        words, tags = [], []
        for lineno, cols in block:
            if ncols is None:
                ncols = len(cols)
                if ncols not in (1, 2):
                    raise ParseError(f"expected 1 or 2 columns, got {ncols}", path, lineno)
            if len(cols) != ncols or not cols[0]:
                raise ParseError(f"expected {ncols} columns, got {len(cols)}", path, lineno)
            words.append(cols[0])
            tags.append(cols[1] if ncols == 2 else OUTSIDE)
        out.append((words, tags))
    return out


def scan_tagset(*paths) -> TagSet:
    tags = set()
    for path in paths:
        for _, sent_tags in read_raw(path):
            tags.update(sent_tags)
    return TagSet(tags)


def load_corpus(path, tagset: TagSet, vocab: Vocabulary | None = None) -> list[TaggedSentence]:
    sentences = []
    for words, tags in read_raw(path):
        sentences.append(TaggedSentence.from_words(words, [tagset.id(t) for t in tags], vocab))
    return sentences


def write_corpus(path, sentences: Iterable[TaggedSentence], tagset: TagSet | None = None):
    """Write sentences in corpus format; without a tag set only surfaces are written."""
    blocks = []
    for sent in sentences:
        if tagset is None:
            lines = list(sent.words)
        else:
            lines = [f"{w}\t{tagset.tag(t)}" for w, t in zip(sent.words, sent.tags)]
        blocks.append("\n".join(lines) + "\n")
    Path(path).write_text("\n".join(blocks), encoding="utf-8")


# -- cleaning -----------------------------------------------------------------

def build_vocabulary(sentences, capacity: int) -> Vocabulary:
    """Keep the ``capacity`` most frequent surfaces, ties by first occurrence."""
    if capacity < 1:
        raise ConfigError("vocabulary capacity must be >= 1")
    counts = Counter()
    first_seen = {}
    for sent in sentences:
        words = sent.words if isinstance(sent, TaggedSentence) else sent
        for w in words:
            if w not in first_seen:
                first_seen[w] = len(first_seen)
            counts[w] += 1
    ranked = sorted(counts, key=lambda w: (-counts[w], first_seen[w]))
    return Vocabulary(ranked[:capacity], capacity=capacity)


def unknown_fraction(sentence: TaggedSentence, vocab: Vocabulary) -> float:
    return sum(1 for w in sentence.words if w not in vocab) / len(sentence)


def filter_noise(sentences: Iterable[TaggedSentence], vocab: Vocabulary,
                 min_length=3, max_unknown=0.5) -> list[TaggedSentence]:
    """Drop sentences shorter than ``min_length`` or with more than
    ``max_unknown`` out-of-vocabulary tokens (exactly half is kept)."""
    return [s for s in sentences
            if len(s) >= min_length and unknown_fraction(s, vocab) <= max_unknown]


# -- splitting ----------------------------------------------------------------

def split(sentences: Sequence, spec: SplitSpec):
    n = len(sentences)
    n_test = math.floor(n * spec.test_fraction + 1e-9)
    unused = math.floor(n * (1.0 - spec.train_fraction - spec.test_fraction) + 1e-9)
    n_train = n - n_test - max(unused, 0)
    if n_test == 0:
        raise ConfigError(f"test split of {n} sentences at fraction {spec.test_fraction} is empty")
    if n_train <= 0:
        raise ConfigError("train split is empty")
    perm = np.random.default_rng(spec.seed).permutation(n)
    train = [sentences[i] for i in perm[:n_train]]
    test = [sentences[i] for i in perm[n_train:n_train + n_test]]
    return train, test


def _fold_bounds(n, k):
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    return list(zip(starts.tolist(), sizes))


def k_folds(train: Sequence, k: int, seed=0):
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if len(train) < k:
        raise ConfigError(f"{len(train)} sentences cannot form {k} folds")
    perm = np.random.default_rng(seed).permutation(len(train))
    folds = []
    for start, size in _fold_bounds(len(train), k):
        held = set(perm[start:start + size].tolist())
        fold_val = [train[i] for i in perm[start:start + size]]
        fold_train = [train[i] for i in perm if i not in held]
        folds.append((fold_train, fold_val))
    return folds


def rotating_subsets(train: Sequence, fraction: float, k: int, seed=0):
    """``k`` training subsets of ``floor(n * fraction)`` sentences each.

    Subset ``j`` is a cyclic window over a seeded permutation that starts at
    the boundary of fold ``j``; with ``fraction == 1/k`` the windows are
    exactly the k disjoint folds. Every subset has the same size, so scores
    at different fractions compare equal amounts of data.
    """
    n = len(train)
    if not 0 < fraction <= 1:
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    if k < 1 or n < k:
        raise ConfigError(f"{n} sentences cannot form {k} rotations")
    m = max(1, math.floor(n * fraction + 1e-9))
    perm = np.random.default_rng(seed).permutation(n)
    subsets = []
    for start, _ in _fold_bounds(n, k):
        subsets.append([train[perm[(start + j) % n]] for j in range(m)])
    return subsets


# -- IOB ----------------------------------------------------------------------

def is_iob_valid(tags: Sequence[int], tagset: TagSet) -> bool:
    prev_type = None
    for t in tags:
        prefix, etype = tagset.parse(t)
        if prefix == "I" and etype != prev_type:
            return False
        prev_type = etype
    return True


def repair_iob(tags: Sequence[int], tagset: TagSet) -> list[int]:
    """Turn every I-X that does not continue an X chunk into B-X."""
    out = []
    prev_type = None
    for t in tags:
        prefix, etype = tagset.parse(t)
        if prefix == "I" and etype != prev_type:
            t = tagset.id(f"B-{etype}")
        out.append(int(t))
        prev_type = etype
    return out
