"""Embedding tables, file loading and sentence vectors."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from transfer_ner.corpus import TaggedSentence, Token, Vocabulary
from transfer_ner.embeddings import (EmbeddingTable, corpus_mean, load_embeddings,
                                     random_embeddings, sentence_matrix, sentence_vector)
from transfer_ner.errors import DomainError, FormatError


class TestEmbeddingTable:
    def test_rejects_non_finite(self):
        with pytest.raises(FormatError):
            EmbeddingTable(np.array([[0.0, np.nan]]))

    def test_read_only(self):
        t = EmbeddingTable(np.zeros((3, 2)))
        with pytest.raises(ValueError):
            t.vectors[0, 0] = 1.0

    def test_random_is_seeded_and_bounded(self):
        a = random_embeddings(10, 4, seed=7, scale=0.1)
        b = random_embeddings(10, 4, seed=7, scale=0.1)
        np.testing.assert_array_equal(a.vectors, b.vectors)
        assert np.all(np.abs(a.vectors) <= 0.1)


class TestLoadEmbeddings:
    def test_roundtrip_through_save(self, tmp_path):
        vocab = Vocabulary(["a", "b"])
        table = random_embeddings(vocab, 3, seed=1, scale=1.0)
        table.save(tmp_path / "e.txt", vocab)
        back = load_embeddings(tmp_path / "e.txt", vocab)
        np.testing.assert_array_equal(back.vectors, table.vectors)

    def test_missing_word_gets_seeded_fallback(self, tmp_path):
        (tmp_path / "e.txt").write_text("a 1 2\n", encoding="utf-8")
        vocab = Vocabulary(["a", "b"])
        t = load_embeddings(tmp_path / "e.txt", vocab, seed=4)
        np.testing.assert_array_equal(t.vectors[2], [1.0, 2.0])
        fallback = random_embeddings(vocab, 2, seed=4)
        np.testing.assert_array_equal(t.vectors[3], fallback.vectors[3])

    def test_load_save_load_identity(self, tmp_path):
        (tmp_path / "e.txt").write_text("b 0.5 -1.25\na 3 4\n", encoding="utf-8")
        vocab = Vocabulary(["a", "b", "c"])
        first = load_embeddings(tmp_path / "e.txt", vocab)
        first.save(tmp_path / "f.txt", vocab)
        second = load_embeddings(tmp_path / "f.txt", vocab, seed=99)
        np.testing.assert_array_equal(second.vectors[2:4], first.vectors[2:4])
        np.testing.assert_array_equal(second.vectors[2], [3.0, 4.0])

    def test_zero_scale_gives_zero_table(self):
        assert not random_embeddings(5, 3, scale=0.0).vectors.any()

    def test_inconsistent_dim(self, tmp_path):
        (tmp_path / "e.txt").write_text("a 1 2\nb 1\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_embeddings(tmp_path / "e.txt", Vocabulary(["a", "b"]))

    def test_empty_file(self, tmp_path):
        (tmp_path / "e.txt").write_text("", encoding="utf-8")
        with pytest.raises(FormatError):
            load_embeddings(tmp_path / "e.txt", Vocabulary(["a"]))


class TestSentenceVectors:
    def test_mean_of_word_vectors(self):
        vocab = Vocabulary(["a", "b"])
        table = EmbeddingTable(np.array([[0, 0], [9, 9], [1, 2], [3, 6]], dtype=float))
        s = TaggedSentence.from_words(["a", "b", "a"], [0, 0, 0], vocab)
        np.testing.assert_allclose(sentence_vector(s, table), [5 / 3, 10 / 3])
        m = sentence_matrix([s, s], table)
        assert m.shape == (2, 2)
        np.testing.assert_allclose(corpus_mean([s], table), sentence_vector(s, table))

    @given(st.permutations(list(range(2, 7))))
    def test_permutation_invariant(self, order):
        vocab = Vocabulary(["a", "b", "c", "d", "e"])
        table = random_embeddings(vocab, 4, seed=3, scale=1.0)
        base = TaggedSentence(tuple(Token(vocab.word(i), i) for i in range(2, 7)), (0,) * 5)
        perm = TaggedSentence(tuple(Token(vocab.word(i), i) for i in order), (0,) * 5)
        np.testing.assert_allclose(sentence_vector(perm, table), sentence_vector(base, table),
                                   rtol=0, atol=1e-12)
        assert np.all(np.isfinite(sentence_vector(perm, table)))

    def test_empty_inputs_rejected(self):
        table = EmbeddingTable(np.zeros((2, 2)))
        with pytest.raises(DomainError):
            sentence_vector(TaggedSentence((), ()), table)
        with pytest.raises(DomainError):
            corpus_mean([], table)
