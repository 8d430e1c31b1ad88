"""Two-learner co-training over an unlabeled pool.

Each round trains both learners on their own training sets, scores them on
a held-out set, labels the remaining pool with each model and hands each
model's most confident labelings to the *other* learner. The loop stops
once the pool is empty or after ``max_iterations`` rounds.

A learner is any callable ``learner(sentences) -> tagger`` where
``tagger.tag(sentence)`` returns ``(tags, sentence_confidence)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import TagSet
from .errors import ConfigError, TransferNerError
from .evaluation import evaluate_tagger


@dataclass(frozen=True)
class CotrainConfig:
    k: int = 300
    max_iterations: int = 10
    seed: int = 0
    # "per_learner": each learner hands over its own top k (up to 2k per round);
    # "pooled": the k most confident labelings across both learners.
    sharing: str = "per_learner"

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.sharing not in ("per_learner", "pooled"):
            raise ConfigError(f"unknown sharing mode {self.sharing!r}")


@dataclass(frozen=True)
class LearnerScore:
    learner: str
    precision: float
    recall: float
    f1: float
    train_size: int


@dataclass(frozen=True)
class IterationRecord:
    """Scores of both learners in one round; pool size is before selection."""

    iteration: int
    first: LearnerScore
    second: LearnerScore
    pool_size: int


@dataclass
class CotrainState:
    s1: list
    s2: list
    pool: list                                   # indices into the unlabeled corpus, pool order
    s1_from_pool: set = field(default_factory=set)
    s2_from_pool: set = field(default_factory=set)
    r1: float = 0.0
    r2: float = 0.0
    best1: object = None
    best2: object = None
    iteration: int = 0
    log: list = field(default_factory=list)

    def check(self):
        pool = set(self.pool)
        if len(pool) != len(self.pool):
            raise AssertionError("pool holds duplicates")
        if self.s1_from_pool & self.s2_from_pool or pool & self.s1_from_pool or pool & self.s2_from_pool:
            raise AssertionError("s1, s2 and the pool overlap")


class CotrainAborted(TransferNerError):
    def __init__(self, message, log):
        super().__init__(message)
        self.log = log


def select_top_k(confidences, k) -> list[int]:
    """Positions of the ``k`` highest confidences; ties keep pool order."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    order = np.argsort(-np.asarray(confidences, dtype=np.float64), kind="stable")
    return [int(i) for i in order[:k]]


def _handover(conf1, conf2, k, sharing):
    """Map pool position -> labeling learner (1 or 2) for this round's selection."""
    if sharing == "per_learner":
        chosen = {}
        top1, top2 = set(select_top_k(conf1, k)), set(select_top_k(conf2, k))
        for pos in sorted(top1 | top2):
            if pos in top1 and pos in top2:
                chosen[pos] = 1 if conf1[pos] >= conf2[pos] else 2
            else:
                chosen[pos] = 1 if pos in top1 else 2
        return chosen
    best = np.maximum(conf1, conf2)
    return {pos: (1 if conf1[pos] >= conf2[pos] else 2) for pos in select_top_k(best, k)}


def cotrain(learner1, learner2, labeled, unlabeled, test, tagset: TagSet,
            cfg: CotrainConfig = CotrainConfig(), names=("ernn", "crf"), on_iteration=None):
    """Run the co-training loop and return the final :class:`CotrainState`.

    ``state.best1``/``state.best2`` hold the best model seen for each learner
    (by test F1), ``state.log`` one :class:`IterationRecord` per round.
    """
    if len(labeled) == 0:
        raise ConfigError("co-training needs labeled sentences")
    state = CotrainState(list(labeled), list(labeled), list(range(len(unlabeled))))
    for it in range(1, cfg.max_iterations + 1):
        state.iteration = it
        try:
            m1 = learner1(state.s1)
            m2 = learner2(state.s2)
        except Exception as exc:
            raise CotrainAborted(f"learner training failed in round {it}: {exc}", state.log) from exc
        rep1 = evaluate_tagger(m1, test, tagset)
        rep2 = evaluate_tagger(m2, test, tagset)
        pool_size = len(state.pool)
        state.log.append(IterationRecord(
            it,
            LearnerScore(names[0], rep1.precision, rep1.recall, rep1.f1, len(state.s1)),
            LearnerScore(names[1], rep2.precision, rep2.recall, rep2.f1, len(state.s2)),
            pool_size))
        if state.best1 is None or rep1.f1 > state.r1:
            state.r1, state.best1 = rep1.f1, m1
        if state.best2 is None or rep2.f1 > state.r2:
            state.r2, state.best2 = rep2.f1, m2
        if state.pool:
            sents = [unlabeled[j] for j in state.pool]
            lab1 = [m1.tag(s) for s in sents]
            lab2 = [m2.tag(s) for s in sents]
            conf1 = np.array([c for _, c in lab1])
            conf2 = np.array([c for _, c in lab2])
            chosen = _handover(conf1, conf2, cfg.k, cfg.sharing)
            for pos, who in chosen.items():
                j = state.pool[pos]
                if who == 1:
                    state.s2.append(sents[pos].with_tags(lab1[pos][0]))
                    state.s2_from_pool.add(j)
                else:
                    state.s1.append(sents[pos].with_tags(lab2[pos][0]))
                    state.s1_from_pool.add(j)
            state.pool = [j for pos, j in enumerate(state.pool) if pos not in chosen]
        state.check()
        if on_iteration is not None:
            on_iteration(state)
        if not state.pool:
            break
    return state


def log_table(log, sep=",") -> str:
    rows = [sep.join(("iteration", "learner", "precision", "recall", "f1", "train_size", "pool_size"))]
    for r in log:
        for sc in (r.first, r.second):
            rows.append(sep.join((str(r.iteration), sc.learner, f"{sc.precision:.6f}",
                                  f"{sc.recall:.6f}", f"{sc.f1:.6f}", str(sc.train_size),
                                  str(r.pool_size))))
    return "\n".join(rows) + "\n"
