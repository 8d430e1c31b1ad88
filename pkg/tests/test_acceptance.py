"""Acceptance criteria, one test per criterion.

Each test prints a ``[PASS]`` or ``[FAIL]`` line with the measured values;
the lines are repeated in the pytest terminal summary. Run on its own with::

    pytest tests/test_acceptance.py -v
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from transfer_ner.baselines import CrfTagger, HmmTagger, crf_decode, crf_train, hmm_decode, hmm_train
from transfer_ner.baselines.crf import CrfParams, marginals, path_score
from transfer_ner.baselines.hmm import HmmParams, path_log_prob
from transfer_ner.config import load_config
from transfer_ner.corpus import SplitSpec, TaggedSentence, Token, split
from transfer_ner.cotrain import CotrainConfig, cotrain
from transfer_ner.embeddings import corpus_mean, random_embeddings
from transfer_ner.evaluation import evaluate_tagger
from transfer_ner.experiments import fit, learning_curve, prepare, transfer_experiment
from transfer_ner.neural import SourceSummary, TrainConfig, train
from transfer_ner.transfer import (KernelSpec, RankedSource, ReplicationSchedule, kernel,
                                   materialize, plan_replicate)

from conftest import separable_corpus
from oracles import brute_force_best, finite_difference_gaps, random_net

RESULTS = []

# transfer fixture shared by criteria 6 and 7
TRANSFER_FIXTURE = ["experiment.seeds = 0,1,2,3,4", "synthetic.delta = 0.3",
                    "synthetic.n_source = 500", "synthetic.n_target_train = 200",
                    "synthetic.n_target_test = 1000", "synthetic.n_target_pool = 500"]


def record(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_c01_gradient_oracle():
    start = time.perf_counter()
    checked, failures, nets = 0, [], 0
    for seed in range(20):
        for kind, confluent in (("rnn", "sigmoid"), ("ernn", "sigmoid"), ("ernn", "combined")):
            net = random_net(np.random.default_rng(seed), kind, confluent)
            n, bad = finite_difference_gaps(net, rtol=1e-4, atol=1e-6)
            checked += n
            failures += bad
            nets += 1
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 30
    record("1 gradient oracle", ok,
           f"{nets} nets, {checked} coordinates, {len(failures)} mismatches, {elapsed:.1f}s (< 30s)")


def test_c02_kernels():
    rng = np.random.default_rng(0)
    rbf = KernelSpec("rbf", sigma=1.0)
    bad = 0
    for _ in range(1000):
        dim = int(rng.integers(1, 20))
        x, z = rng.normal(scale=2.0, size=dim), rng.normal(scale=2.0, size=dim)
        k = kernel(rbf, x, z)
        bad += not (kernel(rbf, x, x) == 1.0 and k == kernel(rbf, z, x) and 0.0 < k <= 1.0)
    # squared distance 2
    rbf_gap = abs(kernel(rbf, np.array([1.0, 0.0]), np.array([0.0, 1.0])) - math.exp(-1.0))
    # dot product 1
    poly = kernel(KernelSpec("polynomial", degree=2), np.array([0.5, 1.0]), np.array([2.0, 0.0]))
    ok = bad == 0 and rbf_gap <= 1e-12 and poly == 4.0
    record("2 kernels", ok, f"{bad}/1000 rbf property violations, |K-exp(-1)|={rbf_gap:.1e}, poly={poly}")


def test_c03_replication_schedule():
    ranked = RankedSource(tuple(range(1000)), tuple(float(1000 - r) for r in range(1000)))
    plan = plan_replicate(ranked, ReplicationSchedule.parse("250:80,500:50,800:30,inf:1"))
    instances = materialize(plan, list(range(1000)))
    expected = {1: 80, 250: 80, 251: 50, 500: 50, 501: 30, 800: 30, 801: 1, 1000: 1}
    by_rank = {e.rank: e.copies for e in plan.entries}
    got = {r: by_rank[r] for r in expected}
    counted = {r: instances.count(ranked.indices[r - 1]) for r in expected}
    ok = len(instances) == 41_700 and got == expected and counted == expected
    record("3 replication schedule", ok, f"{len(instances)} instances (41700), rank counts {got}")


def _random_instance(rng):
    n_tags = int(rng.integers(2, 5))
    L = int(rng.integers(1, 6))
    n_words = 6
    ids = rng.integers(0, n_words, L)
    sent = TaggedSentence(tuple(Token(f"w{i}", int(i)) for i in ids), (0,) * L)
    return sent, n_tags, n_words


def test_c04_decoder_oracles():
    rng = np.random.default_rng(4)
    hmm_bad = crf_bad = 0
    worst_norm = 0.0
    for _ in range(200):
        sent, C, V = _random_instance(rng)
        hmm = HmmParams(np.log(rng.dirichlet(np.ones(C))), np.log(rng.dirichlet(np.ones(C), size=C)),
                        np.log(rng.dirichlet(np.ones(V), size=C)), 0.1)
        hmm_bad += hmm_decode(hmm, sent)[0] != brute_force_best(
            lambda t: path_log_prob(hmm, sent, t), len(sent), C)[0]
        crf = CrfParams.zeros(C, V)
        for w in crf.weights.values():
            w += rng.normal(size=w.shape)
        crf_bad += crf_decode(crf, sent)[0] != brute_force_best(
            lambda t: path_score(crf, sent, t), len(sent), C)[0]
        unary, pair, _ = marginals(crf, sent)
        worst_norm = max(worst_norm, float(np.max(np.abs(unary.sum(axis=1) - 1.0))))
        if len(sent) > 1:
            worst_norm = max(worst_norm, float(np.max(np.abs(pair.sum(axis=(1, 2)) - 1.0))))
    ok = hmm_bad == 0 and crf_bad == 0 and worst_norm <= 1e-9
    record("4 decoder oracles", ok, f"HMM {hmm_bad}/200 and CRF {crf_bad}/200 disagreements, "
                                    f"max marginal error {worst_norm:.1e} (<= 1e-9)")


def test_c05_separability():
    start = time.perf_counter()
    sents, vocab, tagset = separable_corpus(200, seed=0)
    train_set, test_set = split(sents, SplitSpec(0.8, 0.2, seed=0))
    table = random_embeddings(vocab, 50, seed=0, scale=1.0)
    cfg = TrainConfig(epochs=40)
    taggers = {
        "HMM": HmmTagger(hmm_train(train_set, tagset, vocab, kappa=0.1), tagset),
        "CRF": CrfTagger(crf_train(train_set, tagset, len(vocab), l2=0.1, epochs=20,
                                   learning_rate=0.5), tagset),
        "RNN": train("rnn", train_set, table, tagset, cfg=cfg),
        "ERNN": train("ernn", train_set, table, tagset,
                      SourceSummary(corpus_mean(train_set, table)), cfg),
    }
    f1 = {k: evaluate_tagger(t, test_set, tagset).f1 for k, t in taggers.items()}
    elapsed = time.perf_counter() - start
    ok = all(v == 1.0 for v in f1.values()) and elapsed < 120
    record("5 separability", ok, ", ".join(f"{k} F1={v:.4f}" for k, v in f1.items())
           + f", {elapsed:.1f}s (< 120s)")


def _variant_f1(table):
    out = {}
    for row in table.rows:
        if row[0] != "mean":
            out.setdefault(row[1], {})[row[0]] = row[5]
    return out


def test_c06_transfer_benefit():
    cfg = load_config(None, TRANSFER_FIXTURE + ["data.target_labels = 0",
                                                "transfer_exp.variants = RNN_D_IT,ERNN_IT"])
    f1 = _variant_f1(transfer_experiment(cfg))
    base, ernn = np.mean(list(f1["RNN_D_IT"].values())), np.mean(list(f1["ERNN_IT"].values()))
    gap = 100 * (ernn - base)
    record("6 transfer benefit", gap >= 2.0,
           f"mean F1 ERNN_IT={ernn:.4f} RNN_D_IT={base:.4f}, gap {gap:+.2f} points (>= +2)")


def test_c07_few_label_ordering():
    cfg = load_config(None, TRANSFER_FIXTURE + ["data.target_labels = 200",
                                                "transfer_exp.variants = RNN_L,RNN_L_D_IT,ERNN_L_IT"])
    f1 = _variant_f1(transfer_experiment(cfg))
    seeds = sorted(f1["RNN_L"])
    held = [s for s in seeds if f1["ERNN_L_IT"][s] >= f1["RNN_L_D_IT"][s] >= f1["RNN_L"][s]]
    means = {v: np.mean(list(f1[v].values())) for v in ("ERNN_L_IT", "RNN_L_D_IT", "RNN_L")}
    record("7 few-label ordering", len(held) >= 4,
           f"ordering ERNN_L_IT >= RNN_L_D_IT >= RNN_L held in {len(held)}/5 seeds (>= 4); "
           + ", ".join(f"{k} mean F1={v:.4f}" for k, v in means.items()))


def test_c08_learning_curve():
    cfg = load_config(None, ["synthetic.n_target_train = 1000", "learning_curve.models = hmm,crf,rnn"])
    table = learning_curve(cfg)
    curves = {}
    for row in table.rows:
        curves.setdefault(row[3], {})[row[1]] = row[7]
    grew, first_step = [], []
    for model, pts in curves.items():
        fr = sorted(pts)
        grew.append(pts[1.0] > pts[0.2])
        steps = [pts[b] - pts[a] for a, b in zip(fr, fr[1:])]
        first_step.append(int(np.argmax(steps)) == 0)
    ok = all(grew) and sum(first_step) >= 2
    detail = "; ".join(f"{m} " + " ".join(f"{curves[m][f]:.3f}" for f in sorted(curves[m]))
                       for m in curves)
    record("8 learning curve", ok, f"{detail}; 100%>20% for {sum(grew)}/3, "
                                   f"largest step at 20->40 for {sum(first_step)}/3 (>= 2)")


def test_c09_cotrain_mechanics():
    cfg = load_config(None, ["synthetic.n_target_train = 100", "synthetic.n_target_pool = 1000",
                             "synthetic.n_target_test = 200", "synthetic.n_source = 0",
                             "train.epochs = 3", "baselines.crf_epochs = 3"])
    ds = prepare(cfg, 0)
    source = SourceSummary(corpus_mean(ds.target_train, ds.table))
    snapshots, violations = [], []

    def on_iteration(state):
        try:
            state.check()
        except AssertionError as exc:
            violations.append(str(exc))
        snapshots.append((len(state.pool), state.r1, state.r2))

    state = cotrain(lambda d: fit("ernn", d, ds, cfg, 0, source), lambda d: fit("crf", d, ds, cfg, 0),
                    ds.target_train, ds.target_pool, ds.target_test, ds.tagset,
                    CotrainConfig(k=100, max_iterations=50), on_iteration=on_iteration)
    r1 = [s[1] for s in snapshots]
    r2 = [s[2] for s in snapshots]
    monotone = all(a <= b for a, b in zip(r1, r1[1:])) and all(a <= b for a, b in zip(r2, r2[1:]))
    ok = (len(ds.target_train) == 100 and len(ds.target_pool) == 1000 and state.pool == []
          and not violations and monotone and len(state.log) == len(snapshots) == state.iteration)
    record("9 co-training mechanics", ok,
           f"{len(state.log)} iterations, final pool {len(state.pool)}, "
           f"{len(violations)} disjointness violations, trackers monotone={monotone}, "
           f"{len(state.log)} log rows")


DETERMINISM_CONFIG = """\
synthetic.sentences = 120
synthetic.n_source = 80
synthetic.n_target_pool = 60
train.epochs = 3
baselines.crf_epochs = 3
experiment.seeds = 0,1
cotrain.k = 30
data.target_labels = 40
learning_curve.fractions = 0.5,1.0
learning_curve.folds = 2,1
sweep.grid = 0.5:0.5
"""


def test_c10_cli_determinism(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(DETERMINISM_CONFIG, encoding="utf-8")
    commands = {"learning-curve": "learning_curve", "transfer-exp": "transfer_exp",
                "cotrain": "cotrain", "sweep-activation": "sweep_activation"}
    identical = {}
    for command, stem in commands.items():
        blobs = []
        for run in range(2):
            out = tmp_path / f"{stem}-{run}"
            proc = subprocess.run([sys.executable, "-m", "transfer_ner", command, "--config", str(cfg),
                                   "--seed", "3", "--out", str(out)], capture_output=True, text=True)
            blobs.append((out / f"{stem}.csv").read_bytes() if proc.returncode == 0 else None)
        identical[command] = blobs[0] is not None and blobs[0] == blobs[1]
    record("10 CLI determinism", all(identical.values()),
           ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in identical.items()))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
