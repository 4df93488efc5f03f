#!/usr/bin/env python3
"""End-to-end desk-scale experiment.

Runs the forced campaigns for the training seeds, builds and normalizes the
dataset, trains the LSTM regressor and the autoencoder+MLP pipeline, then
evaluates learned target selection against the A2-RSRP benchmark on the
held-out run and on a second obstacle deployment.

Usage:
    python scripts/run_desk_pipeline.py [--out OUTDIR] [--quick]
"""

import argparse
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from holab.config import load_config
from holab.dataset import build_dataset, fit_normalizer, normalize, save_dataset
from holab.evaluate import TrainedPredictor, cross_scenario_eval, evaluate
from holab.models import (
    AeMlpRegressor,
    encode_dataset,
    save_model,
    train_autoencoder,
    train_lstm_regressor,
    train_mlp,
)
from holab.scenario import build_scenario
from holab.sim import run_forced_campaign

TRAIN_SEEDS = [1, 2, 3, 4, 5]
EVAL_SEED = 21
CROSS_OBSTACLE_SEED = 2


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="desk_out")
    ap.add_argument("--config", default=os.path.join(os.path.dirname(__file__),
                                                     "..", "configs", "desk.cfg"))
    ap.add_argument("--quick", action="store_true",
                    help="fewer epochs; for smoke runs")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    scenario_cfg, train_cfg = load_config(args.config)
    scenario = build_scenario(scenario_cfg)

    t0 = time.time()
    print(f"== campaigns: {len(TRAIN_SEEDS)} training runs x {scenario_cfg.max_neighbors} ranks")
    traces = []
    for seed in TRAIN_SEEDS:
        traces.extend(run_forced_campaign(scenario, seed))
    ds = build_dataset(traces, expected_windows=scenario_cfg.num_windows)
    save_dataset(ds, os.path.join(args.out, "train_dataset.bin"))
    print(f"   {ds.n} rows, {np.sum(ds.labels < scenario_cfg.sim_duration)} finished "
          f"({time.time() - t0:.0f}s)")

    norm = fit_normalizer(ds, TRAIN_SEEDS)
    dsn = normalize(ds, norm)

    lstm_epochs, ae_epochs, mlp_epochs = (4, 4, 40) if args.quick else (16, 48, 200)

    print(f"== training LSTM regressor [84x62x42], {lstm_epochs} epochs")
    cfg = train_cfg
    cfg.epochs = lstm_epochs
    lstm, lstm_curve = train_lstm_regressor(dsn, cfg)
    lstm_curve.write_csv(os.path.join(args.out, "lstm_loss.csv"))
    save_model(os.path.join(args.out, "lstm.ckpt"), lstm, norm)
    print(f"   final val mse {lstm_curve.val[-1]:.6f}")

    print(f"== training autoencoder cw=100, {ae_epochs} epochs")
    cfg.epochs = ae_epochs
    cfg.lr = 2.5e-3
    ae, ae_curve = train_autoencoder(dsn, 100, cfg)
    ae_curve.write_csv(os.path.join(args.out, "ae_loss.csv"))
    save_model(os.path.join(args.out, "ae.ckpt"), ae, norm)
    print(f"   final recon mse {ae_curve.train[-1]:.6f}")

    print(f"== training MLP [80x40] on frozen codewords, {mlp_epochs} epochs")
    codes = encode_dataset(ae, dsn)
    cfg.epochs = mlp_epochs
    cfg.lr = 1e-3
    mlp, mlp_curve = train_mlp(codes, dsn.labels, cfg)
    mlp_curve.write_csv(os.path.join(args.out, "mlp_loss.csv"))
    save_model(os.path.join(args.out, "mlp.ckpt"), mlp, norm)
    print(f"   final val mse {mlp_curve.val[-1]:.6f}")

    predictors = {
        "lstm": TrainedPredictor("lstm", lstm, norm),
        "ae_mlp": TrainedPredictor("ae_mlp", AeMlpRegressor(ae, mlp), norm),
    }
    print(f"== evaluation on held-out run {EVAL_SEED}")
    report = evaluate(scenario, predictors, EVAL_SEED)
    print(report.to_text())
    report.write_csv(os.path.join(args.out, "eval_report.csv"))
    report.write_per_ue_csv(os.path.join(args.out, "eval_per_ue.csv"))
    for name in report.policies:
        if report.differences[name]:
            report.difference_ecdf(name).write_csv(
                os.path.join(args.out, f"eval_ecdf_{name}.csv"))

    print(f"== cross-scenario evaluation (obstacle seed {CROSS_OBSTACLE_SEED})")
    xreport = cross_scenario_eval(scenario_cfg, predictors, EVAL_SEED, CROSS_OBSTACLE_SEED)
    print(xreport.to_text())
    xreport.write_csv(os.path.join(args.out, "cross_report.csv"))
    xreport.write_per_ue_csv(os.path.join(args.out, "cross_per_ue.csv"))
    for name in xreport.policies:
        if xreport.differences[name]:
            xreport.difference_ecdf(name).write_csv(
                os.path.join(args.out, f"cross_ecdf_{name}.csv"))

    print(f"done in {time.time() - t0:.0f}s; artifacts in {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
