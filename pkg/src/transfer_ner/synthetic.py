"""Seeded synthetic source/target corpora for desk-scale experiments.

The target domain is a lexicalized process: every word in a fixed lexicon
has exactly one tag (``O``, ``B-X`` or ``I-X``), sentences are runs of
outside words interleaved with entity chunks, and word choice within a tag
class follows a Zipf law.

The source domain mixes two genres. With probability ``1 - delta`` a source
sentence is drawn exactly like a target sentence. With probability
``delta`` it comes from a divergent genre that

* replaces outside words by source-only words at rate ``foreign_rate``
  (these fall outside a vocabulary built from target text),
* is denser in entities, realized only by an "ambiguous" subset of each
  type's lexicon, and
* labels those entities with a *different* type than the target does.

``delta = 0`` therefore makes the two domains identical, and the measured
lexical overlap decreases as ``delta`` grows.

The generator also emits a word-vector table standing in for embeddings
pretrained on target text: each lexicon word gets uniform noise plus
``embedding_signal`` times a centroid shared by its entity type (or by all
outside words). ``embedding_signal = 0`` gives unstructured random vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .corpus import OUTSIDE, TagSet, TaggedSentence, Vocabulary, build_vocabulary, write_corpus
from .embeddings import EmbeddingTable
from .errors import ConfigError

FILES = ("source", "target_train", "target_test", "target_pool")


@dataclass(frozen=True)
class SyntheticSpec:
    vocab_size: int = 300
    entity_types: tuple = ("loc", "org", "per", "time")
    sentences: int = 500
    n_source: int = -1          # -1: use ``sentences``
    n_target_train: int = -1
    n_target_test: int = -1
    n_target_pool: int = -1
    min_len: int = 6
    max_len: int = 14
    delta: float = 0.3
    seed: int = 0
    entity_rate: float = 0.2
    max_entity_len: int = 3
    zipf: float = 1.0
    outside_share: float = 0.5
    ambiguous_share: float = 0.5
    foreign_rate: float = 0.4
    divergent_entity_boost: float = 1.5
    embedding_dim: int = 50
    embedding_signal: float = 0.5

    def __post_init__(self):
        if isinstance(self.entity_types, str):
            object.__setattr__(self, "entity_types",
                               tuple(t.strip() for t in self.entity_types.split(",") if t.strip()))
        if not 0 <= self.delta <= 1:
            raise ConfigError(f"delta must be in [0, 1], got {self.delta}")
        if not self.entity_types:
            raise ConfigError("at least one entity type is required")
        if self.min_len < 1 or self.max_len < self.min_len:
            raise ConfigError("need 1 <= min_len <= max_len")
        if self.sentences < 0:
            raise ConfigError("sentence count must be non-negative")
        n_entity_words = self.vocab_size - round(self.vocab_size * self.outside_share)
        if round(self.vocab_size * self.outside_share) < 1 or n_entity_words < 2 * len(self.entity_types):
            raise ConfigError("vocab_size too small for the requested entity types")
        for name in ("entity_rate", "outside_share", "ambiguous_share", "foreign_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must be in [0, 1]")
        if self.max_entity_len < 1:
            raise ConfigError("max_entity_len must be >= 1")
        if self.embedding_dim < 1 or self.embedding_signal < 0:
            raise ConfigError("embedding_dim must be positive and embedding_signal non-negative")

    def count(self, name) -> int:
        n = getattr(self, f"n_{name}")
        return self.sentences if n < 0 else n

    def tagset(self) -> TagSet:
        tags = [OUTSIDE]
        for t in self.entity_types:
            tags += [f"B-{t}", f"I-{t}"]
        return TagSet(tags)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


class _WordClass:
    def __init__(self, words, rng, zipf):
        self.words = list(words)
        ranks = rng.permutation(len(self.words)) + 1
        w = 1.0 / ranks.astype(np.float64) ** zipf
        self.p = w / w.sum()

    def subset(self, share, rng):
        k = max(1, round(len(self.words) * share))
        idx = np.sort(rng.choice(len(self.words), size=k, replace=False))
        sub = _WordClass.__new__(_WordClass)
        sub.words = [self.words[i] for i in idx]
        p = self.p[idx]
        sub.p = p / p.sum()
        return sub

    def draw(self, rng):
        return self.words[rng.choice(len(self.words), p=self.p)]


class Lexicon:
    """Word classes of one generated world, keyed by tag string."""

    def __init__(self, spec: SyntheticSpec):
        rng = np.random.default_rng([spec.seed, 0])
        V = spec.vocab_size
        n_out = round(V * spec.outside_share)
        names = [f"w{i:05d}" for i in rng.permutation(V)]
        self.outside = _WordClass(names[:n_out], rng, spec.zipf)
        per_type = (V - n_out) // len(spec.entity_types)
        self.begin, self.inside = {}, {}
        pos = n_out
        for etype in spec.entity_types:
            chunk = names[pos:pos + per_type]
            pos += per_type
            n_b = min(max(1, round(per_type * 0.6)), per_type - 1)
            self.begin[etype] = _WordClass(chunk[:n_b], rng, spec.zipf)
            self.inside[etype] = _WordClass(chunk[n_b:], rng, spec.zipf)
        self.foreign = _WordClass([f"s{i:05d}" for i in range(max(1, V // 2))], rng, spec.zipf)
        types = list(spec.entity_types)
        # divergent genre: ambiguous subset of type X is labeled as the next type
        self.relabel = {t: types[(i + 1) % len(types)] for i, t in enumerate(types)}
        self.amb_begin = {t: c.subset(spec.ambiguous_share, rng) for t, c in self.begin.items()}
        self.amb_inside = {t: c.subset(spec.ambiguous_share, rng) for t, c in self.inside.items()}
        self.types = types

        self._tags = {w: OUTSIDE for w in self.outside.words}
        for t in types:
            self._tags.update({w: f"B-{t}" for w in self.begin[t].words})
            self._tags.update({w: f"I-{t}" for w in self.inside[t].words})

    def tag_of(self, word):
        """Target-domain tag of a lexicon word (None for source-only words)."""
        return self._tags.get(word)

    def embeddings(self, vocab: Vocabulary, dim=50, signal=0.5, seed=0) -> EmbeddingTable:
        """Type-clustered vectors for ``vocab``; rows of non-lexicon words are pure noise."""
        rng = np.random.default_rng([seed, 5])
        centroids = {c: rng.uniform(-1.0, 1.0, dim) for c in [OUTSIDE] + self.types}
        vectors = rng.uniform(-1.0, 1.0, (len(vocab), dim))
        for idx, word in enumerate(vocab.words):
            tag = self.tag_of(word)
            if tag is not None:
                vectors[idx] += signal * centroids[OUTSIDE if tag == OUTSIDE else tag[2:]]
        return EmbeddingTable(vectors)


def _sentence(lex: Lexicon, spec: SyntheticSpec, rng, divergent=False):
    L = int(rng.integers(spec.min_len, spec.max_len + 1))
    rate = min(1.0, spec.entity_rate * (spec.divergent_entity_boost if divergent else 1.0))
    words, tags = [], []
    while len(words) < L:
        if rng.random() < rate:
            etype = lex.types[int(rng.integers(len(lex.types)))]
            n = min(int(rng.integers(1, spec.max_entity_len + 1)), L - len(words))
            if divergent:
                b_cls, i_cls, label = lex.amb_begin[etype], lex.amb_inside[etype], lex.relabel[etype]
            else:
                b_cls, i_cls, label = lex.begin[etype], lex.inside[etype], etype
            words.append(b_cls.draw(rng))
            tags.append(f"B-{label}")
            for _ in range(n - 1):
                words.append(i_cls.draw(rng))
                tags.append(f"I-{label}")
        else:
            if divergent and rng.random() < spec.foreign_rate:
                words.append(lex.foreign.draw(rng))
            else:
                words.append(lex.outside.draw(rng))
            tags.append(OUTSIDE)
    return words, tags


@dataclass
class SyntheticCorpora:
    """Raw ``(words, tag strings)`` sentences for each generated file."""

    source: list
    target_train: list
    target_test: list
    target_pool: list
    tagset: TagSet
    lexicon: Lexicon

    def sentences(self, name, vocab=None) -> list[TaggedSentence]:
        return [TaggedSentence.from_words(w, [self.tagset.id(t) for t in tags], vocab)
                for w, tags in getattr(self, name)]


def generate(spec: SyntheticSpec) -> SyntheticCorpora:
    lex = Lexicon(spec)
    out = {}
    for stream, name in enumerate(FILES, start=1):
        rng = np.random.default_rng([spec.seed, stream])
        sents = []
        for _ in range(spec.count(name)):
            divergent = name == "source" and rng.random() < spec.delta
            sents.append(_sentence(lex, spec, rng, divergent))
        out[name] = sents
    return SyntheticCorpora(tagset=spec.tagset(), lexicon=lex, **out)


def target_vocabulary(corpora: SyntheticCorpora, capacity=13450) -> Vocabulary:
    """Vocabulary over the target training and pool text, as experiments build it."""
    return build_vocabulary([w for w, _ in corpora.target_train + corpora.target_pool], capacity)


def write_files(corpora: SyntheticCorpora, out_dir, spec: SyntheticSpec | None = None) -> dict[str, Path]:
    """Write the four corpus files and, given ``spec``, an ``embeddings.txt`` table."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name in FILES:
        path = out_dir / f"{name}.txt"
        labeled = name != "target_pool"
        write_corpus(path, corpora.sentences(name), corpora.tagset if labeled else None)
        paths[name] = path
    if spec is not None:
        vocab = target_vocabulary(corpora)
        table = corpora.lexicon.embeddings(vocab, spec.embedding_dim, spec.embedding_signal, spec.seed)
        paths["embeddings"] = out_dir / "embeddings.txt"
        table.save(paths["embeddings"], vocab)
    return paths


def lexical_overlap(source, target) -> float:
    """Fraction of source tokens whose (word, tag) pair also occurs in ``target``.

    Both arguments are lists of raw ``(words, tags)`` pairs.
    """
    pairs = {(w, t) for words, tags in target for w, t in zip(words, tags)}
    total = hit = 0
    for words, tags in source:
        for w, t in zip(words, tags):
            total += 1
            hit += (w, t) in pairs
    return hit / total if total else 0.0
