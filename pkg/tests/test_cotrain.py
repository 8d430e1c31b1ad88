"""Co-training loop mechanics with stub learners."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transfer_ner.corpus import TagSet, TaggedSentence, Token
from transfer_ner.cotrain import (CotrainAborted, CotrainConfig, _handover, cotrain, log_table,
                                  select_top_k)
from transfer_ner.errors import ConfigError

TS = TagSet(["O", "B-a", "I-a"])


def sent(n):
    return TaggedSentence((Token(f"u{n}", 2),), (1,))


class StubTagger:
    def __init__(self, salt, size):
        self.salt, self.size = salt, size

    def tag(self, s):
        n = int(s.words[0][1:])
        conf = ((n * 7919 + self.salt * 104729) % 1000) / 1000.0
        # larger training sets tag the single token correctly
        return ([1] if self.size % 2 == 0 else [0]), conf


def stub_learner(salt):
    return lambda data: StubTagger(salt, len(data))


class TestSelection:
    def test_top_k_ties_keep_order(self):
        assert select_top_k([0.5, 0.9, 0.5, 0.9], 3) == [1, 3, 0]
        with pytest.raises(ConfigError):
            select_top_k([0.1], 0)

    def test_per_learner_conflict_goes_to_more_confident(self):
        conf1 = np.array([0.9, 0.8, 0.1, 0.0])
        conf2 = np.array([0.95, 0.0, 0.7, 0.1])
        chosen = _handover(conf1, conf2, 2, "per_learner")
        # position 0 is in both top-2 lists; learner 2 is more confident
        assert chosen == {0: 2, 1: 1, 2: 2}

    def test_pooled_takes_k_overall(self):
        conf1 = np.array([0.9, 0.8, 0.1])
        conf2 = np.array([0.95, 0.0, 0.7])
        assert _handover(conf1, conf2, 2, "pooled") == {0: 2, 1: 1}

    def test_config_validation(self):
        for bad in (dict(k=0), dict(max_iterations=0), dict(sharing="x")):
            with pytest.raises(ConfigError):
                CotrainConfig(**bad)


class TestLoop:
    def _run(self, n_labeled=3, n_pool=40, k=5, iters=50, sharing="per_learner"):
        labeled = [sent(1000 + i) for i in range(n_labeled)]
        pool = [sent(i) for i in range(n_pool)]
        test = [sent(2000 + i) for i in range(4)]
        seen = []
        state = cotrain(stub_learner(1), stub_learner(2), labeled, pool, test, TS,
                        CotrainConfig(k, iters, sharing=sharing),
                        on_iteration=lambda st_: seen.append((len(st_.pool), st_.r1, st_.r2,
                                                              len(st_.s1) + len(st_.s2))))
        return state, seen, n_labeled

    def test_pool_drains_and_invariants_hold(self):
        state, seen, n_lab = self._run()
        assert state.pool == []
        assert len(state.log) == len(seen) == state.iteration
        pools = [p for p, *_ in seen]
        assert all(a > b for a, b in zip(pools, pools[1:]))
        r1s, r2s = [r for _, r, _, _ in seen], [r for _, _, r, _ in seen]
        assert r1s == sorted(r1s) and r2s == sorted(r2s)
        # conservation: each pool sentence lands in exactly one training set
        for pool_left, _, _, total in seen:
            assert total - 2 * n_lab + pool_left == 40
        assert state.s1_from_pool | state.s2_from_pool == set(range(40))

    def test_records(self):
        state, _, _ = self._run()
        first = state.log[0]
        assert first.iteration == 1 and first.pool_size == 40
        assert first.first.learner == "ernn" and first.second.learner == "crf"
        assert first.first.train_size == 3
        rows = log_table(state.log).splitlines()
        assert rows[0].startswith("iteration,learner")
        assert len(rows) == 1 + 2 * len(state.log)

    def test_large_k_consumes_pool_in_one_round(self):
        state, _, _ = self._run(k=100)
        assert state.pool == []
        assert len(state.log) == 1

    def test_max_iterations_stops_early(self):
        state, _, _ = self._run(k=1, iters=3)
        assert len(state.log) == 3 and len(state.pool) > 0

    @given(st.integers(1, 6), st.integers(0, 30), st.integers(1, 12),
           st.sampled_from(["per_learner", "pooled"]))
    @settings(max_examples=40, deadline=None)
    def test_disjointness_property(self, n_lab, n_pool, k, sharing):
        state, seen, _ = self._run(n_lab, n_pool, k, iters=100, sharing=sharing)
        assert state.pool == []
        assert not (state.s1_from_pool & state.s2_from_pool)
        assert len(state.log) == max(1, len(seen))

    def test_no_labels(self):
        with pytest.raises(ConfigError):
            cotrain(stub_learner(1), stub_learner(2), [], [sent(1)], [sent(2)], TS)

    def test_learner_failure_aborts_with_log(self):
        calls = []

        def flaky(data):
            calls.append(len(data))
            if len(calls) > 1:
                raise ValueError("boom")
            return StubTagger(3, len(data))

        with pytest.raises(CotrainAborted) as err:
            cotrain(flaky, stub_learner(2), [sent(1000)], [sent(i) for i in range(10)],
                    [sent(2000)], TS, CotrainConfig(2, 10))
        assert len(err.value.log) == 1
