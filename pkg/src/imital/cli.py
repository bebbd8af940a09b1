"""Command-line entry point.

Subcommands: gen-data, simulate, train, evaluate, bench-runtime.  A flat
``key = value`` config file can pre-set any flag (underscores for dashes);
explicit command-line flags win.  Exit codes: 0 success, 1 usage error,
2 runtime failure.  Seeds are mandatory inputs with fixed defaults; nothing
is seeded from the clock.
"""

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import evaluation, expert as expert_mod, learner as learner_mod
from . import policy as policy_mod, synthgen
from .alcore import STRATEGY_NAMES
from .errors import ImitalError, IoError, MissingModel


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _load_config(path):
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise _UsageError(f"{path}:{lineno}: expected key = value")
                key, _, val = line.partition("=")
                values[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise _UsageError(f"cannot read config {path}: {exc}") from exc
    return values


def _build_parser():
    parser = _Parser(prog="imital", description=__doc__)
    parser.add_argument("--config", help="flat key = value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write synthetic dataset CSVs + params log")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=1, help="number of datasets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--max-features", type=int, default=None)
    p.add_argument("--max-classes", type=int, default=None)

    p = sub.add_parser("simulate", help="run an expert simulation campaign")
    p.add_argument("--out", required=True, help="corpus output file")
    p.add_argument("--datasets", type=int, default=10, help="campaign size (alpha)")
    p.add_argument("--tau", type=int, default=10)
    p.add_argument("--j", type=int, default=policy_mod.TRAINING_J)
    p.add_argument("--k", type=int, default=policy_mod.DEFAULT_K)
    p.add_argument("--batch", type=int, default=5, help="AL batch size b")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--learner-epochs", type=int, default=50)
    p.add_argument("--learner-minibatch", type=int, default=32)
    p.add_argument("--learner-lr", type=float, default=1e-3)
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--max-features", type=int, default=None)
    p.add_argument("--max-classes", type=int, default=None)

    p = sub.add_parser("train", help="train the ranking policy on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="model output file")
    p.add_argument("--k", type=int, default=None, help="expected corpus k")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--minibatch", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--loss", choices=("ce", "mse"), default="ce")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("evaluate", help="benchmark strategies on dataset CSVs")
    p.add_argument("--data", required=True, nargs="+", help="dataset CSV paths")
    p.add_argument("--strategies", required=True, help="comma-separated names")
    p.add_argument("--model", default=None, help="policy file (needed for imital)")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--cycles", type=int, default=25)
    p.add_argument("--batch", type=int, default=5)
    p.add_argument("--j", type=int, default=policy_mod.APPLICATION_J)
    p.add_argument("--k", type=int, default=policy_mod.DEFAULT_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--learner-epochs", type=int, default=50)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("bench-runtime", help="query-cost table across pool sizes")
    p.add_argument("--sizes", required=True, help="comma-separated ascending pool sizes")
    p.add_argument("--strategies", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--cycles", type=int, default=3)
    p.add_argument("--batch", type=int, default=5)
    p.add_argument("--j", type=int, default=policy_mod.APPLICATION_J)
    p.add_argument("--k", type=int, default=policy_mod.DEFAULT_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional CSV output path")
    return parser


def _parse_strategies(spec):
    names = [s.strip() for s in spec.split(",") if s.strip()]
    for name in names:
        if name not in STRATEGY_NAMES:
            raise _UsageError(
                f"unknown strategy {name!r}; choose from {', '.join(STRATEGY_NAMES)}"
            )
    return names


def _require_dir(path, flag):
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise IoError(f"{flag}: directory does not exist: {parent}")


def cmd_gen_data(args):
    if args.count < 0 or args.seed < 0:
        raise _UsageError("--count and --seed must be non-negative")
    if args.count and not os.path.isdir(args.out):
        raise IoError(f"--out: directory does not exist: {args.out}")
    rng = np.random.default_rng(args.seed)
    log_lines = []
    for i in range(args.count):
        params = synthgen.sample_params(
            rng,
            max_samples=args.max_samples,
            max_features=args.max_features,
            max_classes=args.max_classes,
        )
        dataset = synthgen.generate(params)
        synthgen.save_csv(dataset, os.path.join(args.out, f"dataset_{i:03d}.csv"))
        log_lines.append(f"dataset_{i:03d} {params.to_record()}")
    if args.count:
        with open(os.path.join(args.out, "params.log"), "w") as fh:
            fh.write("\n".join(log_lines) + "\n")
    print(f"wrote {args.count} datasets to {args.out}")
    return 0


def cmd_simulate(args):
    cfg = expert_mod.CampaignConfig(
        n_datasets=args.datasets,
        tau=args.tau,
        j=args.j,
        k=args.k,
        b=args.batch,
        seed=args.seed,
        parallelism=args.parallelism,
        learner_epochs=args.learner_epochs,
        learner_minibatch=args.learner_minibatch,
        learner_lr=args.learner_lr,
        max_samples=args.max_samples,
        max_features=args.max_features,
        max_classes=args.max_classes,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    _require_dir(args.out, "--out")
    start = time.monotonic()
    with open(args.out, "w") as sink:
        summary = expert_mod.run_campaign(cfg, sink)
    print(
        f"records={summary.records_written} datasets={summary.datasets_completed} "
        f"failures={summary.failures}"
    )
    print(f"log: wall_seconds={time.monotonic() - start:.1f}")
    return 0


def cmd_train(args):
    cfg = policy_mod.CloneConfig(
        epochs=args.epochs,
        minibatch_size=args.minibatch,
        learning_rate=args.lr,
        validation_fraction=args.val_fraction,
        seed=args.seed,
        loss=args.loss,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    _require_dir(args.out, "--out")
    _, records = expert_mod.read_corpus(args.corpus, expected_k=args.k)
    net, report = policy_mod.train_policy(records, cfg)
    policy_mod.save_policy(net, args.out)
    print(f"trained on {len(records)} records (k={net.k})")
    print(f"train loss: {report.train_loss[0]:.4f} -> {report.train_loss[-1]:.4f}")
    if report.val_loss:
        print(f"val loss:   {report.val_loss[0]:.4f} -> {report.val_loss[-1]:.4f}")
    print(f"top-1 imitation accuracy: {report.top1_accuracy:.3f}")
    return 0


def cmd_evaluate(args):
    names = _parse_strategies(args.strategies)
    if args.reps < 1 or args.cycles < 1 or args.batch < 1:
        raise _UsageError("--reps, --cycles and --batch must be >= 1")
    model = None
    if "imital" in names:
        if not args.model:
            raise MissingModel("strategy 'imital' requires --model")
        model = policy_mod.load_policy(args.model)
    if not os.path.isdir(args.out_dir):
        raise IoError(f"--out-dir: directory does not exist: {args.out_dir}")
    learner_cfg = learner_mod.TrainConfig(epochs=args.learner_epochs)
    for path in args.data:
        dataset = synthgen.load_csv(path)
        result = evaluation.run_experiment(
            dataset,
            names,
            args.reps,
            args.batch,
            args.cycles,
            args.seed,
            learner_cfg,
            model=model,
            j=args.j,
            k=args.k,
        )
        text, rows, curve_rows = evaluation.report(result)
        stem = os.path.splitext(os.path.basename(path))[0]
        with open(os.path.join(args.out_dir, f"results_{stem}.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["name", "mean_f1auc", "rank", "mean_query_seconds", "candidates_per_cycle"]
            )
            for name, f1auc, rank, secs, cands in rows:
                writer.writerow([name, repr(f1auc), rank, repr(secs), repr(cands)])
        with open(os.path.join(args.out_dir, f"curves_{stem}.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["strategy", "rep", "cycle", "f1"])
            for row in curve_rows:
                writer.writerow([row[0], row[1], row[2], repr(row[3])])
        print(f"== {stem} ==")
        print(text)
    return 0


def cmd_bench_runtime(args):
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError as exc:
        raise _UsageError(f"--sizes: {exc}") from exc
    if sizes != sorted(sizes):
        raise _UsageError("--sizes must be ascending")
    names = _parse_strategies(args.strategies)
    model = None
    if "imital" in names:
        if not args.model:
            raise MissingModel("strategy 'imital' requires --model")
        model = policy_mod.load_policy(args.model)
    rows = evaluation.bench_runtime(
        sizes,
        names,
        args.cycles,
        args.batch,
        args.seed,
        model=model,
        j=args.j,
        k=args.k,
    )
    print("size       strategy     cycle   candidates   seconds")
    for size, name, cycle, cnt, sec in rows:
        print(f"{size:<10} {name:<12} {cycle:<7} {cnt:<12} {sec:.6f}")
    if args.out:
        _require_dir(args.out, "--out")
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["size", "strategy", "cycle", "candidates", "seconds"])
            for row in rows:
                writer.writerow(row)
    return 0


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "simulate": cmd_simulate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "bench-runtime": cmd_bench_runtime,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        # pre-scan for --config so its values become flag defaults
        if "--config" in argv:
            if argv.index("--config") + 1 >= len(argv):
                raise _UsageError("--config requires a path")
            cfg_path = argv[argv.index("--config") + 1]
            for action in parser._subparsers._group_actions[0].choices.values():
                defaults = {}
                known = {a.dest for a in action._actions}
                for key, val in _load_config(cfg_path).items():
                    if key in known:
                        defaults[key] = val
                action.set_defaults(**defaults)
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ImitalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
