"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 verification budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from contextlib import contextmanager

from . import bench, lower_bounds
from .classifiers import LinearModel, TrainConfig, train
from .data import DataError, dumps, load_csv, load_sparse_text, stratified_subsample
from .guarantees import QueryGenerationError, generate_query_set, verify_f1, verify_mcc
from .metrics import f1, mcc, table_from_predictions
from .samplers import (
    STRATEGIES,
    Coreset,
    SamplingError,
    f1_sample_size,
    mcc_sample_size,
    stratified_uniform,
)
from .synthetic import noisy_separable, two_gaussians

EXIT_USAGE = 1
EXIT_BUDGET = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _load(args):
    if args.format == "csv":
        label = args.label_column
        return load_csv(args.data, label, args.positive_value, header=args.header)
    return load_sparse_text(args.data)


def _add_data_args(p, required=True):
    p.add_argument("--data", required=required, help="dataset path, '-' for stdin")
    p.add_argument("--format", choices=("csv", "sparse"), default="csv")
    p.add_argument("--label-column", default="-1", help="CSV label column index or name")
    p.add_argument("--positive-value", default="1", help="CSV label token mapped to +1")
    p.add_argument("--header", action="store_true", help="CSV has a header row")


def _add_train_args(p):
    p.add_argument("--loss", choices=("logistic", "hinge"), default="logistic")
    p.add_argument("--l2", type=float, default=TrainConfig.l2_reg)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--step-size", type=float, default=TrainConfig.step_size)


def _train_config(args) -> TrainConfig:
    return TrainConfig(args.loss, args.l2, args.epochs, args.step_size, getattr(args, "seed", 0) or 0)


def cmd_ingest(args):
    data = _load(args)
    if args.target_n is not None:
        if args.seed is None:
            raise UsageError("--seed is required with --target-n")
        data = stratified_subsample(data, args.target_n, args.seed)
    with _output(args.out) as fh:
        fh.write(dumps(data, args.out_data_format))
    summary = {"n": data.n, "dim": data.dim, "n_pos": data.n_pos, "n_neg": data.n_neg}
    print(json.dumps(summary), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def cmd_synth(args):
    if args.kind == "separable":
        data = noisy_separable(args.n, args.dim, args.noise, args.pos_fraction, args.seed)
    else:
        data = two_gaussians(args.n, args.dim, args.pos_fraction, args.separation, args.seed)
    with _output(args.out) as fh:
        fh.write(dumps(data, args.out_data_format))
    return 0


def _plan_from_args(args, data):
    d = args.d if args.d is not None else data.dim + 1
    if args.plan == "F1":
        return f1_sample_size(args.gamma, args.epsilon, args.delta, d, data.n_pos, data.n_neg, args.const_factor)
    return mcc_sample_size(args.epsilon, args.delta, d, data.n_pos, data.n_neg, args.const_factor, gamma=args.gamma)


def cmd_sample(args):
    data = _load(args)
    if args.plan:
        if args.strategy != "stratified-uniform":
            raise UsageError("--plan applies to the stratified-uniform strategy only")
        plan = _plan_from_args(args, data)
        t0 = time.perf_counter()
        cs = stratified_uniform(data, plan, args.seed, exhaustive=args.exhaustive)
        secs = time.perf_counter() - t0
    else:
        if args.fraction is None:
            raise UsageError("one of --fraction or --plan is required")
        m = bench.fraction_to_size(data.n, args.fraction)
        cs, secs = bench.timed_sample(data, args.strategy, m, args.seed, args.exhaustive)
    with _output(args.out) as fh:
        fh.write(cs.to_json() + "\n")
    timing = {"strategy": cs.strategy, "size": len(cs), "seconds": secs}
    print(json.dumps(timing), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def cmd_train(args):
    data = _load(args)
    if args.coreset:
        data = Coreset.from_dict(_read_json(args.coreset)).materialize(data)
    model = train(data, _train_config(args))
    with _output(args.out) as fh:
        fh.write(_dump_json(model.to_dict()))
    return 0


def cmd_eval(args):
    data = _load(args)
    if args.coreset:
        data = Coreset.from_dict(_read_json(args.coreset)).materialize(data)
    model = LinearModel.from_dict(_read_json(args.model))
    t = table_from_predictions(data.y, model.as_query().predict(data.X), data.weight)
    s_f1, s_mcc = f1(t), mcc(t)
    result = {
        **t.as_dict(),
        "f1": float(s_f1),
        "mcc": float(s_mcc),
        "f1_degenerate": s_f1.degenerate,
        "mcc_degenerate": s_mcc.degenerate,
    }
    with _output(args.out) as fh:
        fh.write(_dump_json(result))
    return 0


def cmd_bench(args):
    data = _load(args)
    if args.seed is None:
        raise UsageError("--seed is required")
    strategies = args.strategy or list(STRATEGIES)
    report = bench.run_bench(
        data, strategies, args.fraction, args.reps, args.seed, _train_config(args), args.exhaustive
    )
    with _output(args.out) as fh:
        if args.out_format == "csv":
            fh.write(bench.rows_to_csv(report["rows"]))
        else:
            fh.write(_dump_json(report))
    return 0


def cmd_verify(args):
    data = _load(args)
    if args.mode == "MCC" and args.epsilon >= args.gamma:
        raise UsageError(f"MCC mode needs epsilon < gamma (got {args.epsilon} >= {args.gamma})")
    args.plan = args.mode
    plan = _plan_from_args(args, data)
    try:
        queries = generate_query_set(
            data, args.mode, args.gamma, args.queries, args.seed, c=args.c, epsilon=args.epsilon,
            max_attempts=args.max_attempts,
        )
    except QueryGenerationError as exc:
        raise UsageError(str(exc)) from exc
    verify = verify_f1 if args.mode == "F1" else verify_mcc
    report = verify(data, queries, plan, args.draws, args.seed, exhaustive=args.exhaustive)
    with _output(args.out) as fh:
        fh.write(_dump_json(report.to_dict()))
    print(report.summary_line(), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0 if report.within_budget else EXIT_BUDGET


def cmd_lowerbound(args):
    try:
        if args.mode == "F1":
            inst = lower_bounds.gen_f1_instance(args.d, args.label_rule)
        else:
            inst = lower_bounds.gen_mcc_instance(args.d, args.x_rule)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    records = lower_bounds.all_collapses(inst)
    m = args.m if args.m is not None else inst.n // 2
    sweep = lower_bounds.coreset_failure_sweep(inst, args.strategy, m, args.trials, args.seed)
    report = {
        "mode": inst.mode,
        "d": inst.d,
        "n": inst.n,
        "records": [r.to_dict() for r in records],
        "sweep": sweep,
    }
    if args.export:
        with open(args.export + ".txt", "w") as dfh, open(args.export + ".json", "w") as sfh:
            inst.export(dfh, sfh)
    with _output(args.out) as fh:
        fh.write(_dump_json(report))
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    for r in records:
        print(
            f"point={r.index} label={r.label:+d} full_score={r.full_score!r} "
            f"omitted_score={r.omitted_score!r} omitted_numerator={r.omitted_numerator!r}",
            file=stream,
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ndcoreset", description="Coresets for F1 and MCC.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="load, optionally subsample, and rewrite a dataset")
    _add_data_args(p)
    p.add_argument("--target-n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--out-data-format", choices=("csv", "sparse"), default="csv")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="write a synthetic binary dataset")
    p.add_argument("--kind", choices=("separable", "gaussians"), default="separable")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--pos-fraction", type=float, default=0.5)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--out-data-format", choices=("csv", "sparse"), default="csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="build a coreset")
    _add_data_args(p)
    p.add_argument("--strategy", choices=STRATEGIES, required=True)
    p.add_argument("--fraction", type=float)
    p.add_argument("--plan", choices=("F1", "MCC"), help="size the sample from the F1 or MCC bound")
    _add_plan_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="train a linear model on a dataset or coreset")
    _add_data_args(p)
    p.add_argument("--coreset", help="coreset JSON; trains on its weighted rows")
    _add_train_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="contingency table, F1 and MCC of a model")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--coreset")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="train on coresets, evaluate on full data")
    _add_data_args(p)
    p.add_argument("--strategy", action="append", choices=STRATEGIES)
    p.add_argument("--fraction", type=float, action="append", required=True)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int)
    p.add_argument("--exhaustive", action="store_true")
    _add_train_args(p)
    p.add_argument("--out")
    p.add_argument("--out-format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="Monte-Carlo check of the weak-coreset guarantee")
    _add_data_args(p)
    p.add_argument("--mode", choices=("F1", "MCC"), required=True)
    _add_plan_args(p)
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--max-attempts", type=int, default=20000)
    p.add_argument("--draws", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lowerbound", help="strong-coreset lower-bound instances")
    p.add_argument("--mode", choices=("F1", "MCC"), required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--label-rule", choices=("all_positive", "alternating"), default="all_positive")
    p.add_argument("--x-rule", choices=("half", "all_negative"), default="half")
    p.add_argument("--strategy", default="uniform-noreplace")
    p.add_argument("--m", type=int)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--export", help="path prefix for <prefix>.txt data and <prefix>.json sidecar")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lowerbound)
    return parser


def _add_plan_args(p):
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.6)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--d", type=int, help="VC dimension input; defaults to dim + 1")
    p.add_argument("--const-factor", type=float, default=1.0)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DataError, SamplingError, ValueError, FileNotFoundError) as exc:
        print(f"ndcoreset {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
