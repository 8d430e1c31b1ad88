"""Word vectors and the sentence-level vectors derived from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import TaggedSentence, Vocabulary
from .errors import DomainError, FormatError

DEFAULT_DIM = 50
MISSING_SCALE = 0.1


@dataclass(frozen=True)
class EmbeddingTable:
    vectors: np.ndarray  # (vocab size, dim)

    def __post_init__(self):
        v = np.array(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] < 1:
            raise FormatError(f"embedding matrix must be 2-D with dim >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise FormatError("embedding matrix has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]

    def lookup(self, ids) -> np.ndarray:
        return self.vectors[np.asarray(ids, dtype=np.intp)]

    def save(self, path, vocab: Vocabulary):
        """Write every row as ``word v1 ... vd`` (reserved rows included)."""
        with open(path, "w", encoding="utf-8") as fh:
            for word, row in zip(vocab.words, self.vectors):
                fh.write(word + " " + " ".join(repr(float(x)) for x in row) + "\n")


def random_embeddings(vocab: Vocabulary | int, dim=DEFAULT_DIM, seed=0,
                      scale=MISSING_SCALE) -> EmbeddingTable:
    n = vocab if isinstance(vocab, int) else len(vocab)
    if dim < 1:
        raise DomainError("embedding dim must be >= 1")
    rng = np.random.default_rng(seed)
    return EmbeddingTable(rng.uniform(-scale, scale, size=(n, dim)))


def load_embeddings(path, vocab: Vocabulary, seed=0, scale=MISSING_SCALE) -> EmbeddingTable:
    """Read a text embedding file and align it to ``vocab``.

    Vocabulary entries missing from the file (reserved ids included) keep the
    row they would get from ``random_embeddings`` with the same seed, so a
    word's fallback vector does not depend on which other words are present.
    """
    found = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim < 1:
                    raise FormatError(f"{path}:{lineno}: no vector values")
            elif len(values) != dim:
                raise FormatError(f"{path}:{lineno}: expected {dim} values, got {len(values)}")
            try:
                found[word] = np.array([float(x) for x in values])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    if dim is None:
        raise FormatError(f"{path}: empty embedding file")
    vectors = np.array(random_embeddings(vocab, dim, seed, scale).vectors)
    for idx, word in enumerate(vocab.words):
        if word in found:
            vectors[idx] = found[word]
    return EmbeddingTable(vectors)


def sentence_vector(sentence: TaggedSentence, table: EmbeddingTable) -> np.ndarray:
    if len(sentence) == 0:
        raise DomainError("cannot vectorize an empty sentence")
    return table.lookup(sentence.ids).mean(axis=0)


def sentence_matrix(sentences, table: EmbeddingTable) -> np.ndarray:
    return np.array([sentence_vector(s, table) for s in sentences]).reshape(len(sentences), table.dim)


def corpus_mean(sentences, table: EmbeddingTable) -> np.ndarray:
    if len(sentences) == 0:
        raise DomainError("corpus mean of an empty corpus")
    return sentence_matrix(sentences, table).mean(axis=0)
