"""Chunk extraction and entity-level scoring."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from transfer_ner.corpus import TagSet, repair_iob
from transfer_ner.errors import ContractError, DomainError
from transfer_ner.evaluation import Chunk, extract_chunks, f1_score, score

from conftest import TAGS

TS = TagSet(TAGS)


def ids(*tags):
    return [TS.id(t) for t in tags]


valid_seqs = st.lists(st.lists(st.integers(0, len(TAGS) - 1), min_size=1, max_size=10),
                      min_size=1, max_size=6).map(lambda ss: [repair_iob(s, TS) for s in ss])


class TestChunks:
    def test_extraction(self):
        seq = ids("B-loc", "I-loc", "O", "B-per", "B-per", "I-per")
        assert extract_chunks(seq, TS) == [Chunk("loc", 0, 2), Chunk("per", 3, 4), Chunk("per", 4, 6)]

    def test_invalid_sequence_rejected(self):
        with pytest.raises(ContractError):
            extract_chunks(ids("O", "I-loc"), TS)

    def test_bad_span(self):
        with pytest.raises(ValueError):
            Chunk("loc", 2, 2)


class TestScore:
    def test_hand_example(self):
        gold = [ids("B-loc", "I-loc", "O", "B-per")]
        pred = [ids("B-loc", "O", "O", "B-per")]
        r = score(gold, pred, TS)
        # one of two predicted chunks matches exactly, one of two gold chunks found
        assert (r.n_gold, r.n_predicted, r.n_correct) == (2, 2, 1)
        assert r.precision == r.recall == r.f1 == 0.5
        assert r.accuracy == 0.75
        assert r.per_type["per"][:3] == (1.0, 1.0, 1.0)
        assert r.per_type["loc"][:3] == (0.0, 0.0, 0.0)

    def test_type_mismatch_is_wrong(self):
        r = score([ids("B-loc")], [ids("B-per")], TS)
        assert r.n_correct == 0 and r.f1 == 0.0

    def test_zero_denominators(self):
        r = score([ids("O", "O")], [ids("O", "O")], TS)
        assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)
        assert f1_score(0.0, 0.0) == 0.0

    def test_length_errors(self):
        with pytest.raises(DomainError):
            score([ids("O")], [], TS)
        with pytest.raises(DomainError):
            score([ids("O")], [ids("O", "O")], TS)

    def test_report_formats(self):
        r = score([ids("B-loc")], [ids("B-loc")], TS)
        assert "f1 = 1.000000" in r.to_keyvalue()
        assert r.to_table(sep=",").splitlines()[-1] == "overall,1.000000,1.000000,1.000000,1,1,1"

    @given(valid_seqs, st.randoms())
    def test_swap_gold_and_predicted_swaps_p_and_r(self, gold, rnd):
        pred = [repair_iob([rnd.randrange(len(TAGS)) for _ in g], TS) for g in gold]
        a, b = score(gold, pred, TS), score(pred, gold, TS)
        assert a.precision == b.recall and a.recall == b.precision and a.f1 == b.f1

    @given(valid_seqs, st.randoms())
    def test_f1_between_p_and_r_and_micro_consistency(self, gold, rnd):
        pred = [repair_iob([rnd.randrange(len(TAGS)) for _ in g], TS) for g in gold]
        r = score(gold, pred, TS)
        if r.precision > 0 and r.recall > 0:
            assert min(r.precision, r.recall) - 1e-12 <= r.f1 <= max(r.precision, r.recall) + 1e-12
        matches = sum(v[5] for v in r.per_type.values())
        predicted = sum(v[4] for v in r.per_type.values())
        assert r.precision == pytest.approx(matches / predicted if predicted else 0.0)

    @given(valid_seqs)
    def test_perfect_prediction(self, gold):
        r = score(gold, gold, TS)
        assert r.accuracy == 1.0
        assert r.f1 == (1.0 if r.n_gold else 0.0)
