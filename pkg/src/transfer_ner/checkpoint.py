"""Save and load trained taggers as ``.npz`` archives.

An archive holds the model arrays plus a JSON metadata record with the model
kind, the tag list, the vocabulary words and fingerprints of both. Loading
against a vocabulary or tag set whose fingerprint differs is rejected.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .baselines import CrfParams, CrfTagger, HmmParams, HmmTagger
from .corpus import TagSet, Vocabulary
from .embeddings import EmbeddingTable
from .errors import DataError
from .neural import (ActivationSpec, NearestSourceBank, NeuralTagger, SourceSummary,
                     params_from_arrays)
from .transfer import KernelSpec

FORMAT_VERSION = 1


def _model_record(tagger):
    """(kind, arrays, extra metadata) for any supported tagger."""
    kind = tagger.kind
    if kind in ("rnn", "ernn"):
        arrays = {f"param.{k}": v for k, v in tagger.params.arrays().items()}
        arrays["table"] = np.asarray(tagger.table.vectors)
        act = tagger.activation
        meta = {"activation": {"alpha": act.alpha, "beta": act.beta, "a": act.a, "b": act.b},
                "window": tagger.window, "confluent": tagger.confluent,
                "losses": list(tagger.losses)}
        src = tagger.source
        if isinstance(src, SourceSummary):
            arrays["source.i"] = src.i
            meta["source"] = {"type": "summary", "provenance": src.provenance}
        elif isinstance(src, NearestSourceBank):
            arrays["source.vectors"] = src.vectors
            meta["source"] = {"type": "nearest", "provenance": src.provenance,
                              "kernel": [src.kernel.kind, src.kernel.sigma, src.kernel.degree]}
        return kind, arrays, meta
    if kind == "hmm":
        p = tagger.params
        arrays = {"param.log_initial": p.log_initial, "param.log_transition": p.log_transition,
                  "param.log_emission": p.log_emission}
        return kind, arrays, {"kappa": p.kappa}
    if kind == "crf":
        p = tagger.params
        arrays = {f"param.{k}": v for k, v in p.weights.items()}
        return kind, arrays, {"templates": list(p.templates), "l2": p.l2}
    raise DataError(f"cannot checkpoint model of kind {kind!r}")


def save_model(path, tagger, vocab: Vocabulary):
    kind, arrays, extra = _model_record(tagger)
    meta = {
        "format": FORMAT_VERSION,
        "kind": kind,
        "tags": [tagger.tagset.tag(i) for i in range(len(tagger.tagset))],
        "tagset_fingerprint": tagger.tagset.fingerprint(),
        "vocab": vocab.words,
        "vocab_fingerprint": vocab.fingerprint(),
        **extra,
    }
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)
    return path


def read_metadata(path) -> dict:
    try:
        with np.load(path, allow_pickle=False) as z:
            return json.loads(str(z["__meta__"]))
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"{path}: not a model checkpoint ({exc})") from None


def load_model(path, vocab: Vocabulary | None = None, tagset: TagSet | None = None):
    """Return ``(tagger, vocabulary)``; reject a mismatched ``vocab`` or ``tagset``."""
    meta = read_metadata(path)
    if meta.get("format") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint format {meta.get('format')!r}")
    if vocab is not None and vocab.fingerprint() != meta["vocab_fingerprint"]:
        raise DataError(f"{path}: vocabulary fingerprint mismatch")
    if tagset is not None and tagset.fingerprint() != meta["tagset_fingerprint"]:
        raise DataError(f"{path}: tag set fingerprint mismatch")
    saved_vocab = Vocabulary(meta["vocab"][2:])
    saved_tags = TagSet(meta["tags"])
    if saved_vocab.fingerprint() != meta["vocab_fingerprint"] or \
            saved_tags.fingerprint() != meta["tagset_fingerprint"]:
        raise DataError(f"{path}: checkpoint metadata is inconsistent")
    with np.load(path, allow_pickle=False) as z:
        arrays = {k: z[k] for k in z.files if k != "__meta__"}
    params = {k[len("param."):]: v for k, v in arrays.items() if k.startswith("param.")}
    kind = meta["kind"]
    if kind in ("rnn", "ernn"):
        source = None
        src = meta.get("source")
        if src and src["type"] == "summary":
            source = SourceSummary(arrays["source.i"], src["provenance"])
        elif src and src["type"] == "nearest":
            k = src["kernel"]
            source = NearestSourceBank(arrays["source.vectors"], KernelSpec(k[0], k[1], int(k[2])),
                                       src["provenance"])
        tagger = NeuralTagger(params_from_arrays(kind, params), EmbeddingTable(arrays["table"]),
                              saved_tags, ActivationSpec(**meta["activation"]), source,
                              meta["window"], meta["confluent"], meta.get("losses", []))
    elif kind == "hmm":
        tagger = HmmTagger(HmmParams(params["log_initial"], params["log_transition"],
                                     params["log_emission"], meta["kappa"]), saved_tags)
    elif kind == "crf":
        n_tags = len(saved_tags)
        cp = CrfParams(params, tuple(meta["templates"]), meta["l2"], n_tags, len(saved_vocab))
        tagger = CrfTagger(cp, saved_tags)
    else:
        raise DataError(f"{path}: unknown model kind {kind!r}")
    return tagger, saved_vocab
