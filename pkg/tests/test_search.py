import numpy as np

from holab.config import TrainConfig
from holab.search import (
    CW_GRID,
    MLP_GRID,
    SearchResult,
    _rank,
    hyperparameter_search,
    lstm_candidates,
    search_lstm,
    search_mlp,
)
from holab.models import LossCurve
from tests.test_models import toy_dataset


def tiny_cfg():
    return TrainConfig(batch_size=16, epochs=2, lr=1e-3,
                       validation_fraction=0.25, seed=3)


def test_default_grid_sizes():
    assert len(lstm_candidates()) == 9
    assert len(CW_GRID) == 5
    assert len(MLP_GRID) == 7
    assert (80, 40) in MLP_GRID
    assert 100 in CW_GRID
    assert (84, 62, 42) in lstm_candidates()


def test_duplicate_candidates_score_identically():
    ds = toy_dataset(n=16, m=4)
    results = search_lstm(ds, tiny_cfg(), grid=[(6,), (6,)])
    assert results[0].avg_val_mse == results[1].avg_val_mse
    assert results[0].final_val_mse == results[1].final_val_mse


def test_ranking_tie_broken_by_param_count():
    curve = LossCurve(np.array([1.0]), np.array([1.0]))
    a = SearchResult("lstm", "big", 0.5, 0.5, 1000, curve)
    b = SearchResult("lstm", "small", 0.5, 0.5, 10, curve)
    ranked = _rank([a, b], "mean")
    assert ranked[0].name == "small"


def test_search_ranks_by_mean_val_mse():
    ds = toy_dataset(n=24, m=4)
    results = search_lstm(ds, tiny_cfg(), grid=[(4,), (8, 4)])
    metrics = [r.avg_val_mse for r in results]
    assert metrics == sorted(metrics)


def test_full_search_on_tiny_grids():
    ds = toy_dataset(n=16, m=4)
    report = hyperparameter_search(
        ds, tiny_cfg(), lstm_grid=[(4,)], cw_grid=(3, 5), mlp_grid=((4,),))
    assert set(report) == {"lstm", "ae_cw", "mlp"}
    assert len(report["ae_cw"]) == 2
    assert report["mlp"][0].name == "4"


def test_search_mlp_family():
    rng = np.random.default_rng(0)
    codes = rng.normal(size=(32, 6))
    labels = np.clip(20 + codes @ rng.normal(size=6), 1, 40)
    results = search_mlp(codes, labels, tiny_cfg(), grid=((8,), (4,)))
    assert len(results) == 2
    assert all(r.family == "mlp" for r in results)
