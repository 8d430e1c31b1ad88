"""Elman RNN and the enhanced ERNN tagger.

Plain RNN, per token t::

    T_t = A(x_t U + T_{t-1} W)
    o_t = softmax(T_t V + b1)

ERNN inserts a confluent layer that mixes the hidden state with a vector
``i`` summarizing transferred source-domain sentences::

    S_t = F(T_t W + i w2 + b0)
    o_t = softmax(S_t V + b1)

``A`` is the combined activation ``alpha * sigmoid(x) + beta * (a x + b)``;
``F`` is the sigmoid unless the confluent layer is configured to use ``A``.
Training is per-sentence SGD on summed token cross-entropy with full
backpropagation through time and gradient-norm clipping.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .corpus import PAD, TagSet, repair_iob
from .embeddings import EmbeddingTable, sentence_vector
from .errors import ConfigError, ContractError, DomainError, TrainingDiverged
from .transfer import KernelSpec, TransferPlan, kernel_scores

KINDS = ("rnn", "ernn")


@dataclass(frozen=True)
class ActivationSpec:
    alpha: float = 0.5
    beta: float = 0.5
    a: float = 0.2
    b: float = 0.5

    def __post_init__(self):
        if not all(np.isfinite([self.alpha, self.beta, self.a, self.b])):
            raise ConfigError("activation coefficients must be finite")


def sigmoid(x):
    # tanh form stays finite for any input magnitude
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def activation(spec: ActivationSpec, x):
    x = np.asarray(x, dtype=np.float64)
    return spec.alpha * sigmoid(x) + spec.beta * (spec.a * x + spec.b)


def activation_derivative(spec: ActivationSpec, x):
    s = sigmoid(x)
    return spec.alpha * s * (1.0 - s) + spec.beta * spec.a


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


_SIGMOID = ActivationSpec(alpha=1.0, beta=0.0)


def _confluent_spec(spec, confluent):
    if confluent == "sigmoid":
        return _SIGMOID
    if confluent == "combined":
        return spec
    raise ConfigError(f"confluent activation must be 'sigmoid' or 'combined', got {confluent!r}")


# -- parameters ---------------------------------------------------------------

@dataclass
class RnnParams:
    U: np.ndarray   # (window * embed dim, hidden)
    W: np.ndarray   # (hidden, hidden); also the confluent weight in ERNN
    V: np.ndarray   # (hidden, n tags)
    b1: np.ndarray  # (n tags,)
    h0: np.ndarray  # (hidden,)

    kind = "rnn"

    def __post_init__(self):
        H = self.W.shape[0]
        if (self.U.shape[1] != H or self.W.shape != (H, H) or self.V.shape[0] != H
                or self.b1.shape != (self.V.shape[1],) or self.h0.shape != (H,)):
            raise ContractError(f"inconsistent parameter shapes: {self.shapes()}")

    @property
    def hidden(self):
        return self.W.shape[0]

    @property
    def n_tags(self):
        return self.V.shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def shapes(self):
        return {k: v.shape for k, v in self.arrays().items()}

    def copy(self):
        return type(self)(**{k: v.copy() for k, v in self.arrays().items()})

    def is_finite(self):
        return all(np.all(np.isfinite(v)) for v in self.arrays().values())


@dataclass
class ErnnParams(RnnParams):
    w2: np.ndarray = None  # (source dim, hidden)
    b0: np.ndarray = None  # (hidden,)

    kind = "ernn"

    def __post_init__(self):
        super().__post_init__()
        if self.w2 is None or self.b0 is None:
            raise ContractError("ERNN parameters need w2 and b0")
        if self.w2.shape[1] != self.hidden or self.b0.shape != (self.hidden,):
            raise ContractError(f"inconsistent parameter shapes: {self.shapes()}")

    @property
    def source_dim(self):
        return self.w2.shape[0]


def params_from_arrays(kind, arrays) -> RnnParams:
    cls = {"rnn": RnnParams, "ernn": ErnnParams}[kind]
    return cls(**{f.name: np.array(arrays[f.name], dtype=np.float64) for f in fields(cls)})


def init_params(kind, in_dim, hidden, n_tags, source_dim=None, rng=None, scale=0.1) -> RnnParams:
    if kind not in KINDS:
        raise ConfigError(f"model kind must be one of {KINDS}, got {kind!r}")
    rng = np.random.default_rng(rng)
    arrays = dict(
        U=rng.uniform(-scale, scale, (in_dim, hidden)),
        W=rng.uniform(-scale, scale, (hidden, hidden)),
        V=rng.uniform(-scale, scale, (hidden, n_tags)),
        b1=np.zeros(n_tags),
        h0=np.zeros(hidden),
    )
    if kind == "ernn":
        if source_dim is None:
            raise ConfigError("ERNN needs the source summary dimension")
        arrays["w2"] = rng.uniform(-scale, scale, (source_dim, hidden))
        arrays["b0"] = np.zeros(hidden)
    return params_from_arrays(kind, arrays)


# -- source summaries ---------------------------------------------------------

@dataclass(frozen=True)
class SourceSummary:
    i: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        v = np.array(self.i, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise DomainError("source summary has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "i", v)

    @property
    def dim(self):
        return self.i.shape[0]

    def vector_for(self, sentence, table):
        return self.i


@dataclass(frozen=True)
class NearestSourceBank:
    """Per-sentence source input: the most kernel-similar transferred sentence."""

    vectors: np.ndarray
    kernel: KernelSpec = KernelSpec()
    provenance: str = ""

    @property
    def dim(self):
        return self.vectors.shape[1]

    def vector_for(self, sentence, table):
        scores = kernel_scores(self.kernel, self.vectors, sentence_vector(sentence, table))
        return self.vectors[int(np.argmax(scores))]


def build_source_summary(plan: TransferPlan, source, table: EmbeddingTable) -> SourceSummary:
    """Count-weighted mean of the sentence vectors of a plan's instances."""
    if len(plan) == 0 or plan.total == 0:
        raise DomainError("cannot summarize an empty transfer plan")
    total = np.zeros(table.dim)
    for e in plan.entries:
        total += e.copies * sentence_vector(source[e.index], table)
    return SourceSummary(total / plan.total,
                         f"{plan.strategy} plan: {len(plan)} sentences, {plan.total} instances")


def build_source_bank(plan: TransferPlan, source, table: EmbeddingTable,
                      kernel=KernelSpec()) -> NearestSourceBank:
    if len(plan) == 0:
        raise DomainError("cannot build a source bank from an empty plan")
    vectors = np.array([sentence_vector(source[e.index], table) for e in plan.entries])
    return NearestSourceBank(vectors, kernel, f"nearest of {len(plan)} planned sentences")


def _source_vector(source, sentence, table, params):
    if source is None:
        raise DomainError("ERNN needs a source summary")
    if isinstance(source, np.ndarray):
        vec = source
    else:
        vec = source.vector_for(sentence, table)
    if vec.shape != (params.source_dim,):
        raise DomainError(f"source vector has shape {vec.shape}, w2 expects ({params.source_dim},)")
    return vec


# -- forward / backward -------------------------------------------------------

def window_inputs(ids, vectors: np.ndarray, window=1) -> np.ndarray:
    """Concatenate the embeddings of each token's ``window`` neighbourhood."""
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"window must be odd and positive, got {window}")
    ids = np.asarray(ids, dtype=np.intp)
    half = window // 2
    padded = np.concatenate([np.full(half, PAD), ids, np.full(half, PAD)]).astype(np.intp)
    cols = [vectors[padded[k:k + len(ids)]] for k in range(window)]
    return np.concatenate(cols, axis=1)


def _forward(params, X, i, spec, confluent):
    L, H = X.shape[0], params.hidden
    if X.shape[1] != params.U.shape[0]:
        raise ContractError(f"input width {X.shape[1]} does not match U {params.U.shape}")
    XU = X @ params.U
    pre = np.empty((L, H))
    T = np.empty((L, H))
    prev = params.h0
    for t in range(L):
        pre[t] = XU[t] + prev @ params.W
        prev = activation(spec, pre[t])
        T[t] = prev
    cache = {"X": X, "pre": pre, "T": T}
    if params.kind == "ernn":
        C = T @ params.W + (i @ params.w2 + params.b0)
        S = activation(_confluent_spec(spec, confluent), C)
        cache["C"] = C
    else:
        S = T
    cache["S"] = S
    cache["P"] = softmax(S @ params.V + params.b1)
    return cache


def _backward(params, cache, y, i, spec, confluent):
    P, S, T, pre, X = cache["P"], cache["S"], cache["T"], cache["pre"], cache["X"]
    L = len(y)
    rows = np.arange(L)
    loss = -float(np.sum(np.log(P[rows, y])))
    g = {}
    dZ = P.copy()
    dZ[rows, y] -= 1.0
    g["V"] = S.T @ dZ
    g["b1"] = dZ.sum(axis=0)
    dS = dZ @ params.V.T
    if params.kind == "ernn":
        dC = dS * activation_derivative(_confluent_spec(spec, confluent), cache["C"])
        gW = T.T @ dC
        g["b0"] = dC.sum(axis=0)
        g["w2"] = np.outer(i, g["b0"])
        dT = dC @ params.W.T
    else:
        gW = np.zeros_like(params.W)
        dT = dS
    dpre = np.empty_like(pre)
    carry = np.zeros(params.hidden)
    deriv = activation_derivative(spec, pre)
    for t in range(L - 1, -1, -1):
        dpre[t] = (dT[t] + carry) * deriv[t]
        carry = dpre[t] @ params.W.T
    g["U"] = X.T @ dpre
    T_prev = np.vstack([params.h0[None, :], T[:-1]])
    g["W"] = gW + T_prev.T @ dpre
    g["h0"] = carry
    g["X"] = dpre @ params.U.T
    return loss, g


def _check_kind(params, kind):
    if kind is not None and kind != params.kind:
        raise ContractError(f"parameters are {params.kind!r}, caller asked for {kind!r}")


def rnn_forward(params: RnnParams, sentence, table: EmbeddingTable, spec=ActivationSpec(),
                window=1) -> np.ndarray:
    """Per-token tag distributions, shape (len(sentence), n tags)."""
    if len(sentence) == 0:
        raise DomainError("empty sentence")
    X = window_inputs(sentence.ids, table.vectors, window)
    return _forward(params, X, None, spec, "sigmoid")["P"]


def ernn_forward(params: ErnnParams, sentence, table: EmbeddingTable, i, spec=ActivationSpec(),
                 window=1, confluent="sigmoid") -> np.ndarray:
    if len(sentence) == 0:
        raise DomainError("empty sentence")
    vec = _source_vector(i, sentence, table, params)
    X = window_inputs(sentence.ids, table.vectors, window)
    return _forward(params, X, vec, spec, confluent)["P"]


def _sentence_loss_grad(params, sentence, vectors, source, table, spec, window, confluent):
    vec = _source_vector(source, sentence, table, params) if params.kind == "ernn" else None
    X = window_inputs(sentence.ids, vectors, window)
    cache = _forward(params, X, vec, spec, confluent)
    return _backward(params, cache, np.asarray(sentence.tags, dtype=np.intp), vec, spec, confluent)


def gradients(params: RnnParams, kind, batch, table: EmbeddingTable, i=None, spec=ActivationSpec(),
              window=1, confluent="sigmoid", embeddings=False):
    """Summed cross-entropy over ``batch`` and its gradient for every parameter.

    Returns ``(loss, grads)`` where ``grads`` maps parameter names to arrays of
    the same shape. With ``embeddings=True`` the gradient with respect to the
    embedding matrix is included under ``"E"``.
    """
    _check_kind(params, kind)
    if len(batch) == 0:
        raise DomainError("empty batch")
    total = 0.0
    grads = {k: np.zeros_like(v) for k, v in params.arrays().items()}
    if embeddings:
        grads["E"] = np.zeros_like(table.vectors)
    for sent in batch:
        loss, g = _sentence_loss_grad(params, sent, table.vectors, i, table, spec, window, confluent)
        total += loss
        for k in params.arrays():
            grads[k] += g[k]
        if embeddings:
            _scatter_input_grad(grads["E"], g["X"], sent.ids, table.dim, window)
    return total, grads


def _scatter_input_grad(gE, gX, ids, dim, window):
    half = window // 2
    ids = np.asarray(ids, dtype=np.intp)
    padded = np.concatenate([np.full(half, PAD), ids, np.full(half, PAD)]).astype(np.intp)
    for k in range(window):
        np.add.at(gE, padded[k:k + len(ids)], gX[:, k * dim:(k + 1) * dim])


def sequence_loss(params, sentence, table, i=None, spec=ActivationSpec(), window=1,
                  confluent="sigmoid") -> float:
    """Summed token cross-entropy of one sentence (forward pass only)."""
    vec = _source_vector(i, sentence, table, params) if params.kind == "ernn" else None
    P = _forward(params, window_inputs(sentence.ids, table.vectors, window), vec, spec, confluent)["P"]
    return -float(np.sum(np.log(P[np.arange(len(sentence)), list(sentence.tags)])))


# -- training and decoding ----------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 10
    window: int = 1
    seed: int = 0
    clip: float = 5.0
    hidden: int = 32
    init_scale: float = 0.1
    confluent: str = "sigmoid"
    finetune_embeddings: bool = False

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if self.window < 1 or self.window % 2 == 0:
            raise ConfigError("window must be odd and positive")
        if not self.clip > 0:
            raise ConfigError("clip must be positive")
        if self.hidden < 1:
            raise ConfigError("hidden size must be positive")
        _confluent_spec(ActivationSpec(), self.confluent)


@dataclass
class NeuralTagger:
    """A trained RNN/ERNN together with everything needed to decode."""

    params: RnnParams
    table: EmbeddingTable
    tagset: TagSet
    activation: ActivationSpec = ActivationSpec()
    source: SourceSummary | NearestSourceBank | None = None
    window: int = 1
    confluent: str = "sigmoid"
    losses: list = field(default_factory=list)

    @property
    def kind(self):
        return self.params.kind

    def distributions(self, sentence) -> np.ndarray:
        if self.kind == "ernn":
            return ernn_forward(self.params, sentence, self.table, self.source, self.activation,
                                self.window, self.confluent)
        return rnn_forward(self.params, sentence, self.table, self.activation, self.window)

    def decode(self, sentence):
        return decode(self.params, self.kind, sentence, self.table, self.tagset, self.source,
                      self.activation, self.window, self.confluent)

    def tag(self, sentence):
        """IOB-valid tags and a sentence confidence (mean of per-token max probability)."""
        tags, conf = self.decode(sentence)
        return tags, float(np.mean(conf))

    def mean_loss(self, sentences) -> float:
        total = sum(sequence_loss(self.params, s, self.table, self.source, self.activation,
                                  self.window, self.confluent) for s in sentences)
        return total / sum(len(s) for s in sentences)


def decode(params, kind, sentence, table, tagset: TagSet, i=None, spec=ActivationSpec(),
           window=1, confluent="sigmoid"):
    """Argmax tags (ties to the lowest id, then IOB-repaired) and per-token confidence."""
    _check_kind(params, kind)
    if params.kind == "ernn":
        P = ernn_forward(params, sentence, table, i, spec, window, confluent)
    else:
        P = rnn_forward(params, sentence, table, spec, window)
    tags = repair_iob(np.argmax(P, axis=1).tolist(), tagset)
    return tags, P.max(axis=1)


def train(kind, data, table: EmbeddingTable, tagset: TagSet, i=None, cfg=TrainConfig(),
          spec=ActivationSpec()) -> NeuralTagger:
    if kind not in KINDS:
        raise ConfigError(f"model kind must be one of {KINDS}, got {kind!r}")
    if len(data) == 0:
        raise ConfigError("no training sentences")
    if kind == "ernn" and i is None:
        raise ConfigError("ERNN training needs a source summary")
    rng = np.random.default_rng(cfg.seed)
    params = init_params(kind, cfg.window * table.dim, cfg.hidden, len(tagset),
                         i.dim if kind == "ernn" else None, rng, cfg.init_scale)
    if cfg.finetune_embeddings:
        table = EmbeddingTable(np.array(table.vectors))
    vectors = np.array(table.vectors)  # writable working copy when fine-tuning
    arrays = params.arrays()
    losses = []
    n_tokens = sum(len(s) for s in data)
    for epoch in range(1, cfg.epochs + 1):
        total = 0.0
        for idx in rng.permutation(len(data)):
            sent = data[idx]
            loss, g = _sentence_loss_grad(params, sent, vectors, i if kind == "ernn" else None,
                                          table, spec, cfg.window, cfg.confluent)
            if not np.isfinite(loss):
                raise TrainingDiverged("non-finite training loss", epoch)
            total += loss
            names = list(arrays)
            norm2 = sum(float(np.sum(g[k] ** 2)) for k in names)
            if cfg.finetune_embeddings:
                gE = np.zeros_like(vectors)
                _scatter_input_grad(gE, g["X"], sent.ids, table.dim, cfg.window)
                norm2 += float(np.sum(gE ** 2))
            scale = cfg.learning_rate
            norm = np.sqrt(norm2)
            if norm > cfg.clip:
                scale *= cfg.clip / norm
            for k in names:
                arrays[k] -= scale * g[k]
            if cfg.finetune_embeddings:
                vectors -= scale * gE
        losses.append(total / n_tokens)
    if not params.is_finite():
        raise TrainingDiverged("non-finite parameters", cfg.epochs)
    if cfg.finetune_embeddings:
        table = EmbeddingTable(vectors)
    return NeuralTagger(params, table, tagset, spec, i if kind == "ernn" else None,
                        cfg.window, cfg.confluent, losses)


