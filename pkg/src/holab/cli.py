"""Command-line interface.

Subcommands: `scenario rem`, `campaign run`, `dataset build`,
`train lstm|ae|mlp`, `search`, `eval`, `eval-cross`. Exit status 0 on
success, 1 on usage errors, 2 on data/model errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from holab.config import ScenarioConfig, TrainConfig, load_config
from holab.dataset import (
    Dataset,
    build_dataset,
    concat_datasets,
    fit_normalizer,
    load_dataset,
    normalize,
    save_dataset,
    subset,
)
from holab.errors import DataError, UsageError
from holab.evaluate import TrainedPredictor, cross_scenario_eval, evaluate
from holab.handover import BenchmarkPolicy, ForcedPolicy
from holab.models import (
    AeMlpRegressor,
    encode_dataset,
    load_model,
    save_model,
    train_autoencoder,
    train_lstm_regressor,
    train_mlp,
)
from holab.radio import render_rem, write_rem
from holab.scenario import build_scenario
from holab.search import hyperparameter_search, search_codeword, search_lstm, search_mlp, write_search_csv
from holab.sim import run_forced_campaign, run_simulation


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # map argparse failures to exit status 1
        raise UsageError(message)


def _load_configs(path: str | None) -> tuple[ScenarioConfig, TrainConfig]:
    if path is None:
        return ScenarioConfig(), TrainConfig()
    try:
        return load_config(path)
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc


def _train_config(args, base: TrainConfig) -> TrainConfig:
    if getattr(args, "epochs", None) is not None:
        base.epochs = args.epochs
    if getattr(args, "batch_size", None) is not None:
        base.batch_size = args.batch_size
    if getattr(args, "lr", None) is not None:
        base.lr = args.lr
    if getattr(args, "val_fraction", None) is not None:
        base.validation_fraction = args.val_fraction
    if getattr(args, "train_seed", None) is not None:
        base.seed = args.train_seed
    base.validate()
    return base


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"cannot parse {what} list {text!r}") from exc


def _require_file(path: str, role: str) -> str:
    if not os.path.exists(path):
        raise DataError(f"missing {role}: {path}")
    return path


def _cmd_scenario_rem(args) -> int:
    scenario_cfg, _ = _load_configs(args.config)
    seed = args.seed if args.seed is not None else scenario_cfg.obstacle_seed
    scenario = build_scenario(scenario_cfg, obstacle_seed=seed)
    if args.bounds is not None:
        x0, y0, w, h = args.bounds
    else:
        half = 2.0 * scenario_cfg.inter_site_distance
        x0, y0, w, h = -half, -half, 2.0 * half, 2.0 * half
    grid = render_rem(scenario, (x0, y0, w, h), args.resolution)
    write_rem(grid, args.out)
    print(f"wrote REM {grid.nx}x{grid.ny} to {args.out}")
    return 0


def _cmd_campaign_run(args) -> int:
    scenario_cfg, _ = _load_configs(args.config)
    if args.seed is None:
        raise UsageError("campaign run requires --seed")
    scenario = build_scenario(scenario_cfg)
    if args.policy == "benchmark":
        traces = run_simulation(
            scenario, BenchmarkPolicy(a2_threshold=scenario_cfg.a2_threshold), args.seed)
    elif args.k is not None:
        if not 1 <= args.k <= scenario_cfg.max_neighbors:
            raise UsageError("--k must lie in 1..max_neighbors")
        traces = run_simulation(
            scenario, ForcedPolicy(args.k, a2_threshold=scenario_cfg.a2_threshold), args.seed)
    else:
        traces = run_forced_campaign(scenario, args.seed)
    ds = build_dataset(traces, expected_windows=scenario_cfg.num_windows)
    save_dataset(ds, args.out, format="binary")
    print(f"wrote {ds.n} traces ({args.policy}, seed {args.seed}) to {args.out}")
    return 0


def _cmd_dataset_build(args) -> int:
    parts = []
    for path in args.traces:
        _require_file(path, "trace file")
        parts.append(load_dataset(path, format="binary"))
    ds = concat_datasets(parts)
    if args.config is not None:
        scenario_cfg, _ = _load_configs(args.config)
        if ds.n and ds.num_windows != scenario_cfg.num_windows:
            raise DataError(
                f"traces carry {ds.num_windows} windows but the config expects "
                f"{scenario_cfg.num_windows}")
    save_dataset(ds, args.out, format=args.format)
    print(f"wrote dataset with {ds.n} rows of {ds.num_windows}x84 to {args.out}")
    return 0


def _load_training_data(args) -> Dataset:
    _require_file(args.data, "dataset")
    ds = load_dataset(args.data, format="binary")
    if ds.n == 0:
        raise DataError(f"dataset {args.data} is empty")
    if args.train_runs is not None:
        runs = _parse_int_list(args.train_runs, "train runs")
        mask = np.isin(ds.run_ids, runs)
        if not np.any(mask):
            raise DataError("no dataset rows match --train-runs")
        ds = subset(ds, mask)
    return ds


def _curve_path(out: str) -> str:
    root, _ = os.path.splitext(out)
    return root + "_loss.csv"


def _cmd_train_lstm(args) -> int:
    _, train_cfg = _load_configs(args.config)
    cfg = _train_config(args, train_cfg)
    ds = _load_training_data(args)
    norm = fit_normalizer(ds, sorted(set(int(r) for r in ds.run_ids)))
    ds_n = normalize(ds, norm)
    hidden = tuple(_parse_int_list(args.hidden, "hidden sizes"))
    model, curve = train_lstm_regressor(ds_n, cfg, hidden=hidden)
    save_model(args.out, model, norm)
    curve.write_csv(_curve_path(args.out))
    print(f"trained lstm {args.hidden} for {curve.train.size} epochs; "
          f"best val mse {np.nanmin(curve.val) if np.isfinite(curve.val).any() else curve.train.min():.6g}; "
          f"saved to {args.out}")
    return 0


def _cmd_train_ae(args) -> int:
    _, train_cfg = _load_configs(args.config)
    cfg = _train_config(args, train_cfg)
    ds = _load_training_data(args)
    norm = fit_normalizer(ds, sorted(set(int(r) for r in ds.run_ids)))
    ds_n = normalize(ds, norm)
    ae, curve = train_autoencoder(ds_n, args.cw, cfg)
    save_model(args.out, ae, norm)
    curve.write_csv(_curve_path(args.out))
    print(f"trained autoencoder cw={args.cw} for {curve.train.size} epochs; saved to {args.out}")
    return 0


def _cmd_train_mlp(args) -> int:
    _, train_cfg = _load_configs(args.config)
    cfg = _train_config(args, train_cfg)
    ds = _load_training_data(args)
    _require_file(args.ae, "autoencoder checkpoint")
    ae, norm = load_model(args.ae)
    if norm is None:
        raise DataError(f"autoencoder checkpoint {args.ae} carries no normalization spec")
    ds_n = normalize(ds, norm)
    codes = encode_dataset(ae, ds_n)
    hidden = tuple(_parse_int_list(args.hidden, "hidden sizes"))
    mlp, curve = train_mlp(codes, ds_n.labels, cfg, hidden=hidden)
    save_model(args.out, mlp, norm)
    curve.write_csv(_curve_path(args.out))
    print(f"trained mlp {args.hidden} on cw={ae.cw} codewords; saved to {args.out}")
    return 0


def _cmd_search(args) -> int:
    _, train_cfg = _load_configs(args.config)
    cfg = _train_config(args, train_cfg)
    ds = _load_training_data(args)
    norm = fit_normalizer(ds, sorted(set(int(r) for r in ds.run_ids)))
    ds_n = normalize(ds, norm)
    if args.family == "all":
        report = hyperparameter_search(ds_n, cfg, criterion=args.criterion)
    elif args.family == "lstm":
        report = {"lstm": search_lstm(ds_n, cfg, criterion=args.criterion)}
    elif args.family == "cw":
        report = {"ae_cw": search_codeword(ds_n, cfg, criterion=args.criterion)}
    else:
        _require_file(args.ae, "autoencoder checkpoint")
        ae, ae_norm = load_model(args.ae)
        if ae_norm is None:
            raise DataError(f"autoencoder checkpoint {args.ae} carries no normalization spec")
        codes = encode_dataset(ae, normalize(ds, ae_norm))
        report = {"mlp": search_mlp(codes, ds.labels, cfg, criterion=args.criterion)}
    write_search_csv(report, args.out)
    for family, results in report.items():
        best = results[0]
        print(f"{family}: best candidate {best.name} "
              f"(avg val mse {best.avg_val_mse:.6g}, {best.param_count} params)")
    print(f"wrote search report to {args.out}")
    return 0


def _load_predictors(args) -> dict[str, object]:
    predictors: dict[str, object] = {}
    _require_file(args.lstm, "LSTM checkpoint")
    lstm, lstm_norm = load_model(args.lstm)
    if lstm_norm is None:
        raise DataError(f"LSTM checkpoint {args.lstm} carries no normalization spec")
    predictors["lstm"] = TrainedPredictor("lstm", lstm, lstm_norm)
    _require_file(args.ae, "autoencoder checkpoint")
    _require_file(args.mlp, "MLP checkpoint")
    ae, _ = load_model(args.ae)
    mlp, mlp_norm = load_model(args.mlp)
    if mlp_norm is None:
        raise DataError(f"MLP checkpoint {args.mlp} carries no normalization spec")
    predictors["ae_mlp"] = TrainedPredictor("ae_mlp", AeMlpRegressor(ae, mlp), mlp_norm)
    return predictors


def _write_report(report, outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    text = report.to_text()
    with open(os.path.join(outdir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    report.write_csv(os.path.join(outdir, "report.csv"))
    report.write_per_ue_csv(os.path.join(outdir, "per_ue.csv"))
    for name in report.policies:
        if report.differences[name]:
            report.difference_ecdf(name).write_csv(
                os.path.join(outdir, f"ecdf_{name}.csv"))
    print(text)


def _cmd_eval(args) -> int:
    scenario_cfg, _ = _load_configs(args.config)
    if args.seed is None:
        raise UsageError("eval requires --seed (held-out run seed)")
    predictors = _load_predictors(args)
    scenario = build_scenario(scenario_cfg)
    report = evaluate(scenario, predictors, args.seed)
    _write_report(report, args.out)
    return 0


def _cmd_eval_cross(args) -> int:
    scenario_cfg, _ = _load_configs(args.config)
    if args.seed is None:
        raise UsageError("eval-cross requires --seed (held-out run seed)")
    predictors = _load_predictors(args)
    report = cross_scenario_eval(scenario_cfg, predictors, args.seed, args.obstacle_seed)
    _write_report(report, args.out)
    return 0


def _add_train_flags(p) -> None:
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--val-fraction", type=float, default=None)
    p.add_argument("--seed", "--train-seed", dest="train_seed", type=int,
                   default=None, help="weight-init and shuffling seed")
    p.add_argument("--train-runs", default=None,
                   help="comma-separated run ids to fit/train on (default: all)")


def build_parser() -> _Parser:
    parser = _Parser(prog="holab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    scen = sub.add_parser("scenario")
    scen_sub = scen.add_subparsers(dest="subcommand", required=True)
    rem = scen_sub.add_parser("rem",
                              help="export the radio environment map")
    rem.add_argument("--config", default=None)
    rem.add_argument("--seed", type=int, default=None, help="obstacle seed override")
    rem.add_argument("--out", default="rem.txt")
    rem.add_argument("--bounds", type=float, nargs=4, metavar=("X0", "Y0", "W", "H"))
    rem.add_argument("--resolution", type=float, default=25.0)
    rem.set_defaults(func=_cmd_scenario_rem)

    camp = sub.add_parser("campaign")
    camp_sub = camp.add_subparsers(dest="subcommand", required=True)
    run = camp_sub.add_parser("run",
                              help="run one campaign and write its traces")
    run.add_argument("--config", default=None)
    run.add_argument("--seed", type=int, default=None, help="run seed")
    run.add_argument("--policy", choices=("benchmark", "forced"), default="forced")
    run.add_argument("--k", type=int, default=None,
                     help="single neighbor rank (default: all ranks)")
    run.add_argument("--out", default="traces.bin")
    run.set_defaults(func=_cmd_campaign_run)

    dset = sub.add_parser("dataset")
    dset_sub = dset.add_subparsers(dest="subcommand", required=True)
    build = dset_sub.add_parser("build",
                                help="merge trace files into one dataset")
    build.add_argument("--traces", nargs="+", required=True)
    build.add_argument("--config", default=None,
                       help="optional; validates the trace window count")
    build.add_argument("--seed", type=int, default=None,
                       help="accepted for flag uniformity; unused")
    build.add_argument("--out", default="dataset.bin")
    build.add_argument("--format", choices=("binary", "csv"), default="binary")
    build.set_defaults(func=_cmd_dataset_build)

    train = sub.add_parser("train")
    train_sub = train.add_subparsers(dest="subcommand", required=True)
    tl = train_sub.add_parser("lstm")
    tl.add_argument("--config", default=None)
    tl.add_argument("--data", required=True)
    tl.add_argument("--out", default="lstm.ckpt")
    tl.add_argument("--hidden", default="84,62,42")
    _add_train_flags(tl)
    tl.set_defaults(func=_cmd_train_lstm)
    ta = train_sub.add_parser("ae")
    ta.add_argument("--config", default=None)
    ta.add_argument("--data", required=True)
    ta.add_argument("--out", default="ae.ckpt")
    ta.add_argument("--cw", type=int, default=100)
    _add_train_flags(ta)
    ta.set_defaults(func=_cmd_train_ae)
    tm = train_sub.add_parser("mlp")
    tm.add_argument("--config", default=None)
    tm.add_argument("--data", required=True)
    tm.add_argument("--ae", default="ae.ckpt")
    tm.add_argument("--out", default="mlp.ckpt")
    tm.add_argument("--hidden", default="80,40")
    _add_train_flags(tm)
    tm.set_defaults(func=_cmd_train_mlp)

    srch = sub.add_parser("search")
    srch.add_argument("--config", default=None)
    srch.add_argument("--data", required=True)
    srch.add_argument("--family", choices=("all", "lstm", "cw", "mlp"), default="all")
    srch.add_argument("--ae", default="ae.ckpt", help="encoder for --family mlp")
    srch.add_argument("--criterion", choices=("mean", "final"), default="mean")
    srch.add_argument("--out", default="search.csv")
    _add_train_flags(srch)
    srch.set_defaults(func=_cmd_search)

    ev = sub.add_parser("eval")
    ev.add_argument("--config", default=None)
    ev.add_argument("--seed", type=int, default=None, help="held-out run seed")
    ev.add_argument("--lstm", default="lstm.ckpt")
    ev.add_argument("--ae", default="ae.ckpt")
    ev.add_argument("--mlp", default="mlp.ckpt")
    ev.add_argument("--out", default="eval_out")
    ev.set_defaults(func=_cmd_eval)

    evc = sub.add_parser("eval-cross")
    evc.add_argument("--config", default=None)
    evc.add_argument("--seed", type=int, default=None, help="held-out run seed")
    evc.add_argument("--obstacle-seed", type=int, required=True)
    evc.add_argument("--lstm", default="lstm.ckpt")
    evc.add_argument("--ae", default="ae.ckpt")
    evc.add_argument("--mlp", default="mlp.ckpt")
    evc.add_argument("--out", default="eval_cross_out")
    evc.set_defaults(func=_cmd_eval_cross)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help
        code = exc.code if isinstance(exc.code, int) else 0
        return code


if __name__ == "__main__":
    sys.exit(main())
