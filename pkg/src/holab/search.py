"""Hyperparameter search over the LSTM stack, codeword length, and MLP layout.

Candidates are trained with a shared seed and ranked by the average
validation MSE over all epochs (the mean-over-epochs criterion); a config
switch ranks by final-epoch MSE instead. Ties break toward fewer parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from holab.config import TrainConfig
from holab.dataset import Dataset
from holab.errors import UsageError
from holab.models import (
    LossCurve,
    encode_dataset,
    train_autoencoder,
    train_lstm_regressor,
    train_mlp,
)

# 3 depth options x 3 width profiles; a profile is truncated or extended
# (repeating its last width) to the requested depth, so some candidates repeat.
LSTM_DEPTHS = (1, 2, 3)
LSTM_PROFILES = ((84,), (84, 62), (84, 62, 42))
CW_GRID = (25, 50, 100, 200, 400)
MLP_GRID = ((80, 40), (80,), (40,), (100, 50), (80, 40, 20), (120, 60), (60, 30))


def lstm_candidates() -> list[tuple[int, ...]]:
    out = []
    for depth in LSTM_DEPTHS:
        for profile in LSTM_PROFILES:
            widths = list(profile[:depth])
            while len(widths) < depth:
                widths.append(profile[-1])
            out.append(tuple(widths))
    return out


@dataclass
class SearchResult:
    family: str
    name: str
    avg_val_mse: float
    final_val_mse: float
    param_count: int
    curve: LossCurve

    def metric(self, criterion: str) -> float:
        return self.avg_val_mse if criterion == "mean" else self.final_val_mse


def _rank(results: list[SearchResult], criterion: str) -> list[SearchResult]:
    return sorted(results, key=lambda r: (r.metric(criterion), r.param_count))


def search_lstm(dataset: Dataset, cfg: TrainConfig,
                grid: list[tuple[int, ...]] | None = None,
                criterion: str = "mean") -> list[SearchResult]:
    grid = lstm_candidates() if grid is None else grid
    if not grid:
        raise UsageError("empty LSTM candidate grid")
    results = []
    for hidden in grid:
        model, curve = train_lstm_regressor(dataset, cfg, hidden=tuple(hidden))
        results.append(SearchResult("lstm", "x".join(map(str, hidden)),
                                    curve.mean_val, curve.final_val,
                                    model.param_count(), curve))
    return _rank(results, criterion)


def search_codeword(dataset: Dataset, cfg: TrainConfig,
                    grid: tuple[int, ...] | None = None,
                    criterion: str = "mean") -> list[SearchResult]:
    grid = CW_GRID if grid is None else grid
    if not grid:
        raise UsageError("empty codeword candidate grid")
    results = []
    for cw in grid:
        ae, curve = train_autoencoder(dataset, cw, cfg)
        results.append(SearchResult("ae_cw", str(cw), curve.mean_val,
                                    curve.final_val, ae.param_count(), curve))
    return _rank(results, criterion)


def search_mlp(codewords: np.ndarray, labels_s: np.ndarray, cfg: TrainConfig,
               grid: tuple[tuple[int, ...], ...] | None = None,
               criterion: str = "mean") -> list[SearchResult]:
    grid = MLP_GRID if grid is None else grid
    if not grid:
        raise UsageError("empty MLP candidate grid")
    results = []
    for hidden in grid:
        mlp, curve = train_mlp(codewords, labels_s, cfg, hidden=tuple(hidden))
        results.append(SearchResult("mlp", "x".join(map(str, hidden)),
                                    curve.mean_val, curve.final_val,
                                    mlp.param_count(), curve))
    return _rank(results, criterion)


def hyperparameter_search(dataset: Dataset, cfg: TrainConfig,
                          lstm_grid=None, cw_grid=None, mlp_grid=None,
                          criterion: str = "mean") -> dict[str, list[SearchResult]]:
    """Full three-stage search: LSTM layouts, then codeword length, then MLP layout.

    The MLP stage consumes codewords from the best autoencoder of the second
    stage, mirroring the two-stage pipeline.
    """
    if criterion not in ("mean", "final"):
        raise UsageError("criterion must be 'mean' or 'final'")
    report: dict[str, list[SearchResult]] = {}
    report["lstm"] = search_lstm(dataset, cfg, lstm_grid, criterion)
    cw_results = search_codeword(dataset, cfg, cw_grid, criterion)
    report["ae_cw"] = cw_results
    best_cw = int(cw_results[0].name)
    ae, _ = train_autoencoder(dataset, best_cw, cfg)
    codes = encode_dataset(ae, dataset)
    mlp_cfg = replace(cfg)
    report["mlp"] = search_mlp(codes, dataset.labels, mlp_cfg, mlp_grid, criterion)
    return report


def write_search_csv(report: dict[str, list[SearchResult]], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("family,rank,candidate,avg_val_mse,final_val_mse,param_count\n")
        for family, results in report.items():
            for rank, r in enumerate(results, start=1):
                fh.write(f"{family},{rank},{r.name},{r.avg_val_mse:.10g},"
                         f"{r.final_val_mse:.10g},{r.param_count}\n")
