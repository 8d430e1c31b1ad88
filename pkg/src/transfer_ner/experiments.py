"""Experiment drivers shared by the command line and the acceptance tests.

Every driver takes a validated :class:`ExperimentConfig`, runs one pass per
seed in ``experiment.seeds`` and returns a :class:`ResultTable`. A run seed
drives everything random in that pass: synthetic data generation, the
embedding table, splits, model initialization and shuffling.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import CrfTagger, HmmTagger, crf_train, hmm_train
from .config import ExperimentConfig, _names
from .corpus import (TagSet, TaggedSentence, build_vocabulary, filter_noise, read_raw,
                     rotating_subsets, split)
from .cotrain import cotrain as run_cotrain
from .cotrain import log_table
from .embeddings import corpus_mean, load_embeddings, random_embeddings
from .errors import ConfigError
from .evaluation import evaluate_tagger
from .neural import SourceSummary, build_source_bank, build_source_summary, train
from .synthetic import FILES, generate
from .transfer import materialize, plan_replicate, plan_top_n, rank_source


# -- datasets -----------------------------------------------------------------

@dataclass
class Dataset:
    tagset: TagSet
    vocab: object
    table: object
    source: list
    target_train: list      # labeled target sentences available for training
    target_test: list
    target_pool: list       # unlabeled target sentences (tags are placeholders)


def _raw_corpora(cfg: ExperimentConfig, seed):
    """(name -> raw sentences, tag set, lexicon or None) from files or the generator."""
    if cfg.data.from_files:
        raw = {}
        for name in FILES:
            path = getattr(cfg.data, name)
            raw[name] = read_raw(path) if path else []
        tags = {t for name in ("source", "target_train", "target_test")
                for _, ts in raw[name] for t in ts}
        return raw, TagSet(tags or {"O"}), None
    corpora = generate(dataclasses.replace(cfg.synthetic, seed=seed))
    raw = {name: getattr(corpora, name) for name in FILES}
    return raw, corpora.tagset, corpora.lexicon


def prepare(cfg: ExperimentConfig, seed) -> Dataset:
    """Load or generate corpora, build the target vocabulary and embeddings."""
    raw, tagset, lexicon = _raw_corpora(cfg, seed)
    vocab_text = [w for w, _ in raw["target_train"] + raw["target_pool"]]
    if not vocab_text:
        vocab_text = [w for w, _ in raw["target_test"]]
    if not vocab_text:
        raise ConfigError("no target text to build a vocabulary from")
    vocab = build_vocabulary(vocab_text, cfg.data.vocab_capacity)

    def encode(name):
        sents = [TaggedSentence.from_words(w, [tagset.id(t) for t in ts], vocab)
                 for w, ts in raw[name]]
        if cfg.data.filter_noise and name != "target_test":
            sents = filter_noise(sents, vocab)
        return sents

    target_train = encode("target_train")
    if cfg.data.target_labels >= 0:
        target_train = target_train[:cfg.data.target_labels]
    if cfg.data.embeddings:
        table = load_embeddings(cfg.data.embeddings, vocab, seed=seed)
    elif lexicon is not None and cfg.synthetic.embedding_signal > 0:
        syn = cfg.synthetic
        table = lexicon.embeddings(vocab, syn.embedding_dim, syn.embedding_signal, seed)
    else:
        table = random_embeddings(vocab, cfg.data.embedding_dim, seed, cfg.data.embedding_scale)
    return Dataset(tagset, vocab, table, encode("source"), target_train,
                   encode("target_test"), encode("target_pool"))


# -- model fitting ------------------------------------------------------------

def fit(model, data, ds: Dataset, cfg: ExperimentConfig, seed, source=None):
    """Train one tagger of kind ``hmm``, ``crf``, ``rnn`` or ``ernn``."""
    if model == "hmm":
        return HmmTagger(hmm_train(data, ds.tagset, ds.vocab, cfg.baselines.hmm_kappa), ds.tagset)
    if model == "crf":
        b = cfg.baselines
        params = crf_train(data, ds.tagset, len(ds.vocab), tuple(_names(b.crf_templates)),
                           b.crf_l2, b.crf_epochs, b.crf_learning_rate, seed)
        return CrfTagger(params, ds.tagset)
    if model in ("rnn", "ernn"):
        tcfg = dataclasses.replace(cfg.train, seed=seed)
        return train(model, data, ds.table, ds.tagset, source if model == "ernn" else None,
                     tcfg, cfg.activation)
    raise ConfigError(f"unknown model {model!r}")


def transfer_plan(ds: Dataset, cfg: ExperimentConfig):
    """Rank the source against the target text and apply the configured strategy."""
    if not ds.source:
        raise ConfigError("instance transfer needs a non-empty source corpus")
    target_text = ds.target_train + ds.target_pool or ds.target_test
    t = cfg.transfer
    ranked = rank_source(ds.source, corpus_mean(target_text, ds.table), ds.table, t.kernel_spec())
    if t.strategy == "top_n":
        return plan_top_n(ranked, min(t.n, len(ranked)))
    schedule = t.replication_schedule()
    if t.scale_schedule:
        schedule = schedule.scaled(len(ranked))
    return plan_replicate(ranked, schedule)


def source_input(plan, ds: Dataset, cfg: ExperimentConfig):
    if len(plan) == 0:
        raise ConfigError("transfer plan is empty")
    if cfg.transfer.summary == "nearest":
        return build_source_bank(plan, ds.source, ds.table, cfg.transfer.kernel_spec())
    return build_source_summary(plan, ds.source, ds.table)


# -- result tables ------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


@dataclass
class ResultTable:
    columns: tuple
    rows: list = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(tuple(values))

    def column(self, name):
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(_fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        cells = [list(self.columns)] + [[_fmt(v) for v in row] for row in self.rows]
        widths = [max(len(r[j]) for r in cells) for j in range(len(self.columns))]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
                         for r in cells) + "\n"

    def write(self, out_dir, stem):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{stem}.csv").write_text(self.to_csv(), encoding="utf-8")
        (out_dir / f"{stem}.txt").write_text(self.to_text(), encoding="utf-8")
        return out_dir / f"{stem}.csv"


def _append_means(table: ResultTable, key_cols, value_cols, seeds):
    """Append ``seed = mean`` rows averaging ``value_cols`` per key when seeds > 1."""
    if len(seeds) < 2:
        return
    kidx = [table.columns.index(c) for c in key_cols]
    groups = {}
    for row in table.rows:
        groups.setdefault(tuple(row[j] for j in kidx), []).append(row)
    for key, rows in groups.items():
        out = dict(zip(key_cols, key))
        out["seed"] = "mean"
        for c in value_cols:
            j = table.columns.index(c)
            out[c] = float(np.mean([r[j] for r in rows]))
        table.add(*(out.get(c, "") for c in table.columns))


# -- drivers ------------------------------------------------------------------

def learning_curve(cfg: ExperimentConfig, log=None) -> ResultTable:
    """Train each model on growing fractions of the labeled target corpus.

    The corpus is split once into train and test; each (fraction, K) cell
    trains on K equally sized rotating subsets and averages their test scores.
    """
    table = ResultTable(("seed", "fraction", "folds", "model", "train_size",
                         "precision", "recall", "f1"))
    models = _names(cfg.learning_curve.models)
    seeds = cfg.experiment.seed_list()
    for seed in seeds:
        ds = prepare(cfg, seed)
        train_set, test_set = split(ds.target_train, dataclasses.replace(cfg.split, seed=seed))
        for fraction, k in cfg.learning_curve.cells():
            subsets = rotating_subsets(train_set, fraction, k, seed)
            for model in models:
                reps = [evaluate_tagger(fit(model, sub, ds, cfg, seed), test_set, ds.tagset)
                        for sub in subsets]
                p = float(np.mean([r.precision for r in reps]))
                r_ = float(np.mean([r.recall for r in reps]))
                f = float(np.mean([r.f1 for r in reps]))
                table.add(seed, fraction, k, model, len(subsets[0]), p, r_, f)
                if log:
                    log(f"seed {seed} fraction {fraction} {model}: F1 {f:.4f}")
    _append_means(table, ("fraction", "folds", "model", "train_size"),
                  ("precision", "recall", "f1"), seeds)
    return table


def _variant_data(variant, labels, source, transferred):
    """Training sentences of one variant: labels (_L), all source (_D_) or the plan (ERNN)."""
    data = list(labels) if "_L" in variant else []
    if "_D_" in variant:
        data += source
    elif variant.startswith("ERNN"):
        data += transferred
    return data


def transfer_experiment(cfg: ExperimentConfig, log=None) -> ResultTable:
    variants = cfg.transfer_exp.variant_list()
    if cfg.data.target_labels == 0 and any("_L" in v for v in variants):
        raise ConfigError("variants with target labels need data.target_labels != 0")
    table = ResultTable(("seed", "variant", "train_size", "precision", "recall", "f1"))
    seeds = cfg.experiment.seed_list()
    for seed in seeds:
        ds = prepare(cfg, seed)
        labels = ds.target_train
        if any("_L" in v for v in variants) and not labels:
            raise ConfigError("no labeled target sentences for the _L variants")
        plan = source = transferred = None
        if any(v.startswith("ERNN") for v in variants):
            plan = transfer_plan(ds, cfg)
            source = source_input(plan, ds, cfg)
            transferred = materialize(plan, ds.source)
        if any("_D_" in v for v in variants) and not ds.source:
            raise ConfigError("the _D_ variants need a source corpus")
        for v in variants:
            data = _variant_data(v, labels, ds.source, transferred)
            model = "ernn" if v.startswith("ERNN") else "rnn"
            tagger = fit(model, data, ds, cfg, seed, source)
            rep = evaluate_tagger(tagger, ds.target_test, ds.tagset)
            table.add(seed, v, len(data), rep.precision, rep.recall, rep.f1)
            if log:
                log(f"seed {seed} {v}: F1 {rep.f1:.4f}")
    _append_means(table, ("variant",), ("precision", "recall", "f1"), seeds)
    return table


def cotrain_experiment(cfg: ExperimentConfig, log=None) -> ResultTable:
    """Co-train an ERNN and a CRF from the labeled target set over the pool."""
    table = ResultTable(("seed", "iteration", "learner", "precision", "recall", "f1",
                         "train_size", "pool_size"))
    for seed in cfg.experiment.seed_list():
        ds = prepare(cfg, seed)
        if not ds.target_train:
            raise ConfigError("co-training needs labeled target sentences")
        if cfg.cotrain.include_transfer and ds.source:
            plan = transfer_plan(ds, cfg)
            source = source_input(plan, ds, cfg)
            extra = materialize(plan, ds.source)
        else:
            # without a source corpus the ERNN side input is the target mean
            source = SourceSummary(corpus_mean(ds.target_train, ds.table), "target mean")
            extra = []

        def ernn_learner(sents):
            return fit("ernn", sents + extra, ds, cfg, seed, source)

        def crf_learner(sents):
            return fit("crf", sents, ds, cfg, seed)

        state = run_cotrain(ernn_learner, crf_learner, ds.target_train, ds.target_pool,
                            ds.target_test, ds.tagset, cfg.cotrain.cotrain_config(seed))
        for rec in state.log:
            for sc in (rec.first, rec.second):
                table.add(seed, rec.iteration, sc.learner, sc.precision, sc.recall, sc.f1,
                          sc.train_size, rec.pool_size)
        if log:
            log(log_table(state.log).rstrip())
    return table


def sweep_activation(cfg: ExperimentConfig, log=None) -> ResultTable:
    points = cfg.sweep.points()
    table = ResultTable(("seed", "alpha", "beta", "precision", "recall", "f1", "best"))
    for seed in cfg.experiment.seed_list():
        ds = prepare(cfg, seed)
        if not ds.target_train:
            raise ConfigError("the activation sweep needs labeled target sentences")
        rows = []
        for alpha, beta in points:
            spec = dataclasses.replace(cfg.activation, alpha=alpha, beta=beta)
            tagger = fit("rnn", ds.target_train, ds, dataclasses.replace(cfg, activation=spec), seed)
            rep = evaluate_tagger(tagger, ds.target_test, ds.tagset)
            rows.append((alpha, beta, rep))
            if log:
                log(f"seed {seed} alpha {alpha} beta {beta}: F1 {rep.f1:.4f}")
        best = int(np.argmax([rep.f1 for _, _, rep in rows]))
        for j, (alpha, beta, rep) in enumerate(rows):
            table.add(seed, alpha, beta, rep.precision, rep.recall, rep.f1, "*" if j == best else "")
    return table


DRIVERS = {
    "learning-curve": learning_curve,
    "transfer-exp": transfer_experiment,
    "cotrain": cotrain_experiment,
    "sweep-activation": sweep_activation,
}
