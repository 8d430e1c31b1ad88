"""First-order HMM tagger with add-kappa smoothing and Viterbi decoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import TagSet, Vocabulary, repair_iob
from ..errors import ConfigError


def _logsumexp(a, axis=None):
    m = np.max(a, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis) if axis is not None else out.item()


@dataclass(frozen=True)
class HmmParams:
    log_initial: np.ndarray     # (n tags,)
    log_transition: np.ndarray  # (n tags, n tags), row = previous tag
    log_emission: np.ndarray    # (n tags, vocab size)
    kappa: float

    @property
    def n_tags(self):
        return self.log_initial.shape[0]

    def arrays(self):
        return {"log_initial": self.log_initial, "log_transition": self.log_transition,
                "log_emission": self.log_emission}


def hmm_train(data, tagset: TagSet, vocab: Vocabulary, kappa=0.1) -> HmmParams:
    if len(data) == 0:
        raise ConfigError("no training sentences")
    if not kappa > 0:
        raise ConfigError("kappa must be positive")
    C, V = len(tagset), len(vocab)
    init = np.zeros(C)
    trans = np.zeros((C, C))
    emit = np.zeros((C, V))
    for sent in data:
        tags = np.asarray(sent.tags, dtype=np.intp)
        init[tags[0]] += 1
        np.add.at(trans, (tags[:-1], tags[1:]), 1)
        np.add.at(emit, (tags, np.asarray(sent.ids, dtype=np.intp)), 1)

    def normalize(counts):
        smoothed = counts + kappa
        return np.log(smoothed / smoothed.sum(axis=-1, keepdims=True))

    return HmmParams(normalize(init), normalize(trans), normalize(emit), kappa)


def _emissions(params, sentence):
    ids = np.asarray(sentence.ids, dtype=np.intp)
    return params.log_emission[:, ids].T  # (len, n tags)


def path_log_prob(params: HmmParams, sentence, tags) -> float:
    """Joint log-probability of a sentence and one tag path."""
    E = _emissions(params, sentence)
    tags = list(tags)
    score = params.log_initial[tags[0]] + E[0, tags[0]]
    for t in range(1, len(tags)):
        score += params.log_transition[tags[t - 1], tags[t]] + E[t, tags[t]]
    return float(score)


def log_likelihood(params: HmmParams, sentence) -> float:
    """log p(sentence), summed over all tag paths (forward algorithm)."""
    E = _emissions(params, sentence)
    alpha = params.log_initial + E[0]
    for t in range(1, len(E)):
        alpha = _logsumexp(alpha[:, None] + params.log_transition, axis=0) + E[t]
    return float(_logsumexp(alpha))


def hmm_decode(params: HmmParams, sentence):
    """Viterbi path and its joint log-probability."""
    E = _emissions(params, sentence)
    L, C = E.shape
    delta = params.log_initial + E[0]
    back = np.zeros((L, C), dtype=np.intp)
    for t in range(1, L):
        cand = delta[:, None] + params.log_transition
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(C)] + E[t]
    best = int(np.argmax(delta))
    path = [best]
    for t in range(L - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return path, float(delta[best])


@dataclass
class HmmTagger:
    params: HmmParams
    tagset: TagSet

    kind = "hmm"

    def tag(self, sentence):
        """IOB-repaired Viterbi tags and the length-normalized path posterior."""
        path, logp = hmm_decode(self.params, sentence)
        conf = np.exp((logp - log_likelihood(self.params, sentence)) / len(sentence))
        return repair_iob(path, self.tagset), float(conf)
