"""Command-line interface: ``transfer-ner <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training
diverged.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as exp
from .checkpoint import load_model, save_model
from .config import load_config
from .corpus import write_corpus
from .errors import ConfigError, DataError, TransferNerError
from .evaluation import evaluate_tagger
from .synthetic import generate, lexical_overlap, write_files
from .transfer import materialize

log = logging.getLogger("transfer_ner")

EXPERIMENTS = {
    "learning-curve": "learning_curve",
    "transfer-exp": "transfer_exp",
    "cotrain": "cotrain",
    "sweep-activation": "sweep_activation",
}


def _config(args):
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides += [f"experiment.seeds = {args.seed}", f"synthetic.seed = {args.seed}"]
    return load_config(args.config, overrides)


def _seed(cfg):
    return cfg.experiment.seed_list()[0]


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args, cfg):
    corpora = generate(cfg.synthetic)
    paths = write_files(corpora, _out(args), cfg.synthetic)
    for name, path in paths.items():
        print(f"{name}\t{path}")
    print(f"lexical_overlap\t{lexical_overlap(corpora.source, corpora.target_train):.6f}")


def cmd_preprocess(args, cfg):
    ds = exp.prepare(cfg, _seed(cfg))
    out = _out(args)
    ds.vocab.save(out / "vocab.txt")
    ds.table.save(out / "embeddings.txt", ds.vocab)
    for name in ("source", "target_train", "target_test"):
        write_corpus(out / f"{name}.txt", getattr(ds, name), ds.tagset)
        print(f"{name}\t{len(getattr(ds, name))}")
    write_corpus(out / "target_pool.txt", ds.target_pool)
    print(f"target_pool\t{len(ds.target_pool)}")
    print(f"vocabulary\t{len(ds.vocab)}")


def cmd_rank(args, cfg):
    from .embeddings import corpus_mean
    from .transfer import rank_source
    ds = exp.prepare(cfg, _seed(cfg))
    if not ds.source:
        raise ConfigError("ranking needs a source corpus")
    target = ds.target_train + ds.target_pool or ds.target_test
    ranked = rank_source(ds.source, corpus_mean(target, ds.table), ds.table,
                         cfg.transfer.kernel_spec())
    path = _out(args) / "ranking.tsv"
    lines = ["rank\tindex\tscore"]
    lines += [f"{r}\t{i}\t{s:.12g}" for r, (i, s) in enumerate(zip(ranked.indices, ranked.scores), 1)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"ranked {len(ranked)} source sentences -> {path}")


def cmd_plan(args, cfg):
    ds = exp.prepare(cfg, _seed(cfg))
    plan = exp.transfer_plan(ds, cfg)
    path = _out(args) / "plan.tsv"
    plan.save(path)
    print(f"{plan.strategy} plan: {len(plan)} sentences, {plan.total} instances -> {path}")


def cmd_train(args, cfg):
    seed = _seed(cfg)
    ds = exp.prepare(cfg, seed)
    data, source = list(ds.target_train), None
    if args.model == "ernn":
        plan = exp.transfer_plan(ds, cfg)
        source = exp.source_input(plan, ds, cfg)
        data += materialize(plan, ds.source)
    if not data:
        raise ConfigError("no training sentences")
    tagger = exp.fit(args.model, data, ds, cfg, seed, source)
    path = save_model(_out(args) / f"{args.model}.npz", tagger, ds.vocab)
    print(f"trained {args.model} on {len(data)} sentences -> {path}")


def cmd_eval(args, cfg):
    ds = exp.prepare(cfg, _seed(cfg))
    tagger, _ = load_model(args.model_path, ds.vocab, ds.tagset)
    if not ds.target_test:
        raise DataError("empty target test set")
    report = evaluate_tagger(tagger, ds.target_test, ds.tagset)
    out = _out(args)
    (out / "eval.txt").write_text(report.to_keyvalue(), encoding="utf-8")
    (out / "eval.csv").write_text(report.to_table(sep=","), encoding="utf-8")
    sys.stdout.write(report.to_table())


def cmd_experiment(args, cfg):
    driver = exp.DRIVERS[args.command]
    table = driver(cfg, log=log.info)
    path = table.write(_out(args), EXPERIMENTS[args.command])
    sys.stdout.write(table.to_text())
    log.info("wrote %s", path)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="run seed (overrides experiment.seeds and synthetic.seed)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key; repeatable")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="transfer-ner", parents=[common],
                                     description="Instance-transfer NER toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write synthetic corpora and embeddings")
    sub.add_parser("preprocess", parents=[common], help="build vocabulary, filter noise, write cleaned corpora")
    sub.add_parser("rank", parents=[common], help="rank source sentences by kernel similarity")
    sub.add_parser("plan", parents=[common], help="write the instance-transfer plan")
    p = sub.add_parser("train", parents=[common], help="train one model and save a checkpoint")
    p.add_argument("--model", choices=("hmm", "crf", "rnn", "ernn"), default="rnn")
    p = sub.add_parser("eval", parents=[common], help="score a checkpoint on the target test set")
    p.add_argument("--model-path", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    return parser


COMMANDS = {
    "generate": cmd_generate,
    "preprocess": cmd_preprocess,
    "rank": cmd_rank,
    "plan": cmd_plan,
    "train": cmd_train,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        COMMANDS.get(args.command, cmd_experiment)(args, cfg)
    except TransferNerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
