"""First-order linear-chain CRF trained by SGD on the L2-regularized
conditional log-likelihood.

Feature templates (all conjoined with the current tag):

* ``cur``   identity of the current word
* ``prev``  identity of the previous word (padding id before the start)
* ``next``  identity of the next word (padding id past the end)
* ``trans`` tag bigram, plus ``start`` for the bigram with the sentence start
* ``bias``  tag unigram
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import PAD, TagSet, repair_iob
from ..errors import ConfigError, TrainingDiverged
from .hmm import _logsumexp

TEMPLATES = ("cur", "prev", "next", "trans", "bias")


@dataclass
class CrfParams:
    weights: dict           # template name -> array
    templates: tuple
    l2: float
    n_tags: int
    vocab_size: int

    @classmethod
    def zeros(cls, n_tags, vocab_size, templates=TEMPLATES, l2=1.0):
        unknown = set(templates) - set(TEMPLATES)
        if unknown:
            raise ConfigError(f"unknown CRF templates {sorted(unknown)}")
        w = {}
        for name in ("cur", "prev", "next"):
            if name in templates:
                w[name] = np.zeros((vocab_size, n_tags))
        if "trans" in templates:
            w["trans"] = np.zeros((n_tags, n_tags))
            w["start"] = np.zeros(n_tags)
        if "bias" in templates:
            w["bias"] = np.zeros(n_tags)
        return cls(w, tuple(t for t in TEMPLATES if t in templates), l2, n_tags, vocab_size)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.weights[k].ravel() for k in sorted(self.weights)])

    def arrays(self):
        return dict(self.weights)

    def copy(self):
        return CrfParams({k: v.copy() for k, v in self.weights.items()}, self.templates,
                         self.l2, self.n_tags, self.vocab_size)


def _neighbours(sentence):
    ids = np.asarray(sentence.ids, dtype=np.intp)
    prev = np.concatenate([[PAD], ids[:-1]]).astype(np.intp)
    nxt = np.concatenate([ids[1:], [PAD]]).astype(np.intp)
    return ids, prev, nxt


def unary_scores(params: CrfParams, sentence) -> np.ndarray:
    """Per-position tag scores from the word and bias templates, (len, n tags)."""
    w = params.weights
    cur, prev, nxt = _neighbours(sentence)
    E = np.zeros((len(cur), params.n_tags))
    if "cur" in w:
        E += w["cur"][cur]
    if "prev" in w:
        E += w["prev"][prev]
    if "next" in w:
        E += w["next"][nxt]
    if "bias" in w:
        E += w["bias"]
    return E


def _transitions(params):
    C = params.n_tags
    w = params.weights
    return w.get("start", np.zeros(C)), w.get("trans", np.zeros((C, C)))


def path_score(params: CrfParams, sentence, tags) -> float:
    E = unary_scores(params, sentence)
    start, trans = _transitions(params)
    tags = list(tags)
    s = start[tags[0]] + E[0, tags[0]]
    for t in range(1, len(tags)):
        s += trans[tags[t - 1], tags[t]] + E[t, tags[t]]
    return float(s)


def forward_scores(params, sentence, E=None):
    """Log forward table alpha (len, n tags) and log Z."""
    E = unary_scores(params, sentence) if E is None else E
    start, trans = _transitions(params)
    alpha = np.empty_like(E)
    alpha[0] = start + E[0]
    for t in range(1, len(E)):
        alpha[t] = _logsumexp(alpha[t - 1][:, None] + trans, axis=0) + E[t]
    return alpha, float(_logsumexp(alpha[-1]))


def backward_scores(params, sentence, E=None):
    """Log backward table beta (len, n tags) and log Z computed from it."""
    E = unary_scores(params, sentence) if E is None else E
    start, trans = _transitions(params)
    beta = np.zeros_like(E)
    for t in range(len(E) - 2, -1, -1):
        beta[t] = _logsumexp(trans + (E[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta, float(_logsumexp(start + E[0] + beta[0]))


def marginals(params, sentence):
    """Posterior tag marginals per position and pairwise marginals per edge."""
    E = unary_scores(params, sentence)
    _, trans = _transitions(params)
    alpha, logZ = forward_scores(params, sentence, E)
    beta, _ = backward_scores(params, sentence, E)
    unary = np.exp(alpha + beta - logZ)
    pair = np.exp(alpha[:-1, :, None] + trans[None] + (E[1:] + beta[1:])[:, None, :] - logZ)
    return unary, pair, logZ


def log_likelihood_and_grad(params: CrfParams, sentences, l2=None):
    """Regularized objective ``sum log p(y|x) - l2/2 ||w||^2`` and its gradient."""
    l2 = params.l2 if l2 is None else l2
    grad = {k: np.zeros_like(v) for k, v in params.weights.items()}
    total = 0.0
    for sent in sentences:
        total += _add_sentence_grad(params, sent, grad)
    for k, v in params.weights.items():
        total -= 0.5 * l2 * float(np.sum(v * v))
        grad[k] -= l2 * v
    return total, grad


def _add_sentence_grad(params, sentence, grad):
    """Accumulate d log p(y|x) into ``grad``; return log p(y|x)."""
    unary, pair, logZ = marginals(params, sentence)
    tags = np.asarray(sentence.tags, dtype=np.intp)
    L = len(tags)
    observed = np.zeros_like(unary)
    observed[np.arange(L), tags] = 1.0
    diff = observed - unary
    cur, prev, nxt = _neighbours(sentence)
    if "cur" in grad:
        np.add.at(grad["cur"], cur, diff)
    if "prev" in grad:
        np.add.at(grad["prev"], prev, diff)
    if "next" in grad:
        np.add.at(grad["next"], nxt, diff)
    if "bias" in grad:
        grad["bias"] += diff.sum(axis=0)
    if "trans" in grad:
        grad["start"] += diff[0]
        np.add.at(grad["trans"], (tags[:-1], tags[1:]), 1.0)
        grad["trans"] -= pair.sum(axis=0)
    return path_score(params, sentence, tags) - logZ


def crf_train(data, tagset: TagSet, vocab_size, templates=TEMPLATES, l2=1.0, epochs=10,
              learning_rate=0.1, seed=0) -> CrfParams:
    """SGD over shuffled sentences with a proximal (shrinkage) L2 step.

    The L2 penalty is spread evenly over the ``N`` sentences of an epoch:
    each update is ``w <- (w + lr * grad log p(y|x)) / (1 + lr * l2 / N)``,
    which stays stable for any ``l2``.
    """
    if len(data) == 0:
        raise ConfigError("no training sentences")
    if l2 < 0 or learning_rate < 0 or epochs < 1:
        raise ConfigError("l2 and learning_rate must be non-negative, epochs positive")
    params = CrfParams.zeros(len(tagset), vocab_size, templates, l2)
    rng = np.random.default_rng(seed)
    shrink = 1.0 / (1.0 + learning_rate * l2 / len(data))
    for epoch in range(1, epochs + 1):
        objective = 0.0
        for idx in rng.permutation(len(data)):
            grad = {k: np.zeros_like(v) for k, v in params.weights.items()}
            ll = _add_sentence_grad(params, data[idx], grad)
            if not np.isfinite(ll):
                raise TrainingDiverged("non-finite CRF objective", epoch)
            objective += ll
            for k, v in params.weights.items():
                v += learning_rate * grad[k]
                v *= shrink
        if not np.isfinite(objective):
            raise TrainingDiverged("non-finite CRF objective", epoch)
    return params


def crf_decode(params: CrfParams, sentence):
    """Viterbi path and the length-normalized path probability ``p(path|x)^(1/len)``."""
    E = unary_scores(params, sentence)
    start, trans = _transitions(params)
    L, C = E.shape
    delta = start + E[0]
    back = np.zeros((L, C), dtype=np.intp)
    for t in range(1, L):
        cand = delta[:, None] + trans
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(C)] + E[t]
    best = int(np.argmax(delta))
    path = [best]
    for t in range(L - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    _, logZ = forward_scores(params, sentence, E)
    conf = float(np.exp(min(0.0, (float(delta[best]) - logZ) / L)))
    return path, conf


@dataclass
class CrfTagger:
    params: CrfParams
    tagset: TagSet

    kind = "crf"

    def tag(self, sentence):
        path, conf = crf_decode(self.params, sentence)
        return repair_iob(path, self.tagset), conf
