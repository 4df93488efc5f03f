import numpy as np
import pytest

from holab.config import TrainConfig
from holab.dataset import Dataset
from holab.errors import UsageError
from holab.models import (
    AeMlpRegressor,
    LstmRegressor,
    MlpRegressor,
    SeqAutoencoder,
    encode_dataset,
    load_model,
    predict_download_time,
    save_model,
    train_autoencoder,
    train_lstm_regressor,
    train_mlp,
)


def toy_dataset(n=96, m=12, d=84, seed=0):
    """Sequences whose label is the temporal mean of feature 1 (in seconds x40).

    The remaining features carry mild noise so the regressor must single out
    feature 1 without drowning in 83 full-scale noise channels.
    """
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.1, 0.9, size=n)
    feats = np.clip(rng.normal(0.5, 0.15, size=(n, m, d)), 0.0, 1.0)
    f1 = np.clip(base[:, None] + rng.normal(0, 0.05, size=(n, m)), 0.0, 1.0)
    feats[:, :, 0] = f1
    labels = f1.mean(axis=1) * 40.0
    return Dataset(feats, labels,
                   np.ones(n, dtype=np.int32), np.arange(n, dtype=np.int32),
                   np.ones(n, dtype=np.int32), np.zeros(n, dtype=np.int32))


def small_cfg(**kw):
    base = dict(batch_size=16, epochs=40, lr=3e-3, validation_fraction=0.25, seed=1)
    base.update(kw)
    return TrainConfig(**base)


def test_lstm_regressor_learns_linear_toy():
    ds = toy_dataset()
    model, curve = train_lstm_regressor(ds, small_cfg(epochs=200), hidden=(16, 8),
                                        stop_below_val=5e-4)
    assert np.nanmin(curve.val) < 1e-3


def test_batch_larger_than_n_still_trains():
    ds = toy_dataset(n=12, m=6)
    model, curve = train_lstm_regressor(ds, small_cfg(batch_size=64, epochs=3),
                                        hidden=(8,))
    assert curve.train.size == 3


def test_training_deterministic():
    ds = toy_dataset(n=24, m=6)
    _, c1 = train_lstm_regressor(ds, small_cfg(epochs=3), hidden=(8,))
    _, c2 = train_lstm_regressor(ds, small_cfg(epochs=3), hidden=(8,))
    np.testing.assert_array_equal(c1.train, c2.train)
    np.testing.assert_array_equal(c1.val, c2.val)


def test_empty_dataset_rejected():
    ds = toy_dataset(n=4, m=4)
    empty = Dataset(ds.features[:0], ds.labels[:0], ds.run_ids[:0],
                    ds.ue_ids[:0], ds.neighbor_ranks[:0], ds.target_cells[:0])
    with pytest.raises(UsageError):
        train_lstm_regressor(empty, small_cfg())
    with pytest.raises(UsageError):
        train_autoencoder(empty, 4, small_cfg())


def test_unnormalized_dataset_rejected():
    ds = toy_dataset(n=8, m=4)
    ds.features[0, 0, 0] = 1e6
    with pytest.raises(UsageError):
        train_lstm_regressor(ds, small_cfg(epochs=1), hidden=(4,))


# --- autoencoder ----------------------------------------------------------------

def test_autoencoder_reconstructs_constant_sequences():
    rng = np.random.default_rng(3)
    n, m, d = 48, 8, 84
    vals = rng.uniform(0.2, 0.8, size=(n, 1, 1))
    feats = np.broadcast_to(vals, (n, m, d)).copy()
    ds = Dataset(feats, np.ones(n), np.ones(n, dtype=np.int32),
                 np.arange(n, dtype=np.int32), np.ones(n, dtype=np.int32),
                 np.zeros(n, dtype=np.int32))
    # tiny batches: enough optimizer steps within the 50-epoch budget
    ae, curve = train_autoencoder(ds, cw=4,
                                  cfg=small_cfg(epochs=50, lr=5e-3, batch_size=2),
                                  stop_below_val=8e-5)
    assert min(curve.train.min(), np.nanmin(curve.val)) < 1e-4


def test_autoencoder_rejects_uncompressive_codeword():
    ds = toy_dataset(n=8, m=4, d=84)
    with pytest.raises(UsageError):
        train_autoencoder(ds, cw=4 * 84, cfg=small_cfg(epochs=1))


def test_encode_deterministic_and_sized():
    ds = toy_dataset(n=10, m=6)
    ae, _ = train_autoencoder(ds, cw=5, cfg=small_cfg(epochs=2))
    c1 = ae.encode(ds.features[:4])
    c2 = ae.encode(ds.features[:4])
    assert c1.shape == (4, 5)
    np.testing.assert_array_equal(c1, c2)


def test_encode_differs_on_last_timestep_change():
    ds = toy_dataset(n=10, m=6)
    ae, _ = train_autoencoder(ds, cw=5, cfg=small_cfg(epochs=2))
    seq = ds.features[:1].copy()
    other = seq.copy()
    other[0, -1, :] = np.clip(other[0, -1, :] + 0.3, 0.0, 1.0)
    assert not np.allclose(ae.encode(seq), ae.encode(other))


def test_ae_train_mse_trend_decreasing_on_toy():
    ds = toy_dataset(n=48, m=8)
    _, curve = train_autoencoder(ds, cw=8, cfg=small_cfg(epochs=24))
    first = np.median(curve.train[:12])
    last = np.median(curve.train[12:])
    assert last < first


# --- mlp on codewords ----------------------------------------------------------------

def test_mlp_learns_linear_codeword_target():
    rng = np.random.default_rng(4)
    codes = rng.normal(size=(200, 10))
    w = rng.normal(size=10)
    w = w / np.linalg.norm(w)
    labels = (codes @ w) * 4.0 + 20.0  # stays inside (0, 40) for these draws
    assert labels.min() > 0.0 and labels.max() < 40.0
    mlp, curve = train_mlp(codes, labels,
                           small_cfg(epochs=400, lr=1e-2, batch_size=8),
                           hidden=(16, 8), stop_below_val=2e-7)
    best = np.nanmin(curve.val)
    assert best < 1e-4  # scaled units
    assert best * 1600 < 2e-3  # seconds^2


def test_mlp_default_hidden_sizes():
    mlp = MlpRegressor(input_dim=100)
    assert mlp.hidden == (80, 40)
    dims = [(l.input_dim, l.output_dim) for l in mlp.layers]
    assert dims == [(100, 80), (80, 40), (40, 1)]


def test_shuffled_labels_plateau_near_variance():
    rng = np.random.default_rng(5)
    codes = rng.normal(size=(160, 8))
    w = rng.normal(size=8)
    labels = np.clip(20.0 + 4.0 * (codes @ w), 0.5, 40.0)
    perm = rng.permutation(160)
    _, ctrue = train_mlp(codes, labels, small_cfg(epochs=120, lr=3e-3), hidden=(16, 8))
    _, cperm = train_mlp(codes, labels[perm], small_cfg(epochs=120, lr=3e-3), hidden=(16, 8))
    assert np.nanmin(cperm.val) > 2.0 * np.nanmin(ctrue.val)


def test_mlp_dimension_mismatch():
    with pytest.raises(Exception):
        train_mlp(np.zeros((4, 7, 2)), np.zeros(4), small_cfg(epochs=1))


def test_two_stage_training_never_touches_encoder():
    ds = toy_dataset(n=24, m=6)
    ae, _ = train_autoencoder(ds, cw=5, cfg=small_cfg(epochs=2))
    before = [p.copy() for p in ae.params()]
    codes = encode_dataset(ae, ds)
    train_mlp(codes, ds.labels, small_cfg(epochs=10), hidden=(8,))
    for p, b in zip(ae.params(), before):
        np.testing.assert_array_equal(p, b)


# --- prediction ------------------------------------------------------------------------

class _FixedModel:
    horizon = 40.0

    def __init__(self, value):
        self.value = value

    def predict(self, X):
        return np.full(X.shape[0], self.value)


def test_predict_rescales_by_horizon():
    seq = np.random.default_rng(6).uniform(size=(10, 84))
    assert predict_download_time(_FixedModel(0.5), seq) == pytest.approx(20.0)


def test_predict_clamps_to_horizon():
    seq = np.random.default_rng(7).uniform(size=(10, 84))
    assert predict_download_time(_FixedModel(1.3), seq) == 40.0


def test_predict_clamps_to_smallest_positive():
    seq = np.random.default_rng(8).uniform(size=(10, 84))
    out = predict_download_time(_FixedModel(-0.1), seq)
    assert out > 0.0
    assert out == np.nextafter(0.0, 1.0)


def test_predict_rejects_unnormalized_input():
    seq = np.full((10, 84), -120.0)
    with pytest.raises(UsageError):
        predict_download_time(_FixedModel(0.5), seq)


# --- capacity sanity -----------------------------------------------------------------------

def test_models_memorize_small_set():
    ds = toy_dataset(n=32, m=10)
    cfg = TrainConfig(batch_size=8, epochs=500, lr=3e-3,
                      validation_fraction=0.0, seed=2)
    _, curve = train_lstm_regressor(ds, cfg, hidden=(24,), stop_below_val=1e-3)
    assert curve.train.min() < 1e-3
    # the encoder needs enough steps for codewords to separate the samples
    ae_cfg = TrainConfig(batch_size=8, epochs=300, lr=5e-3,
                         validation_fraction=0.0, seed=1)
    ae, _ = train_autoencoder(ds, cw=16, cfg=ae_cfg)
    codes = encode_dataset(ae, ds)
    _, mcurve = train_mlp(codes, ds.labels, cfg, hidden=(80, 40), stop_below_val=1e-3)
    assert mcurve.train.min() < 1e-3


# --- checkpoint round trips -------------------------------------------------------------------

def test_lstm_checkpoint_roundtrip(tmp_path):
    ds = toy_dataset(n=12, m=5)
    model, _ = train_lstm_regressor(ds, small_cfg(epochs=2), hidden=(6, 4))
    path = str(tmp_path / "m.ckpt")
    save_model(path, model)
    back, norm = load_model(path)
    assert norm is None
    assert back.hidden == (6, 4)
    x = ds.features[:3]
    np.testing.assert_array_equal(model.predict(x), back.predict(x))


def test_ae_and_mlp_checkpoint_roundtrip(tmp_path):
    ds = toy_dataset(n=12, m=5)
    ae, _ = train_autoencoder(ds, cw=5, cfg=small_cfg(epochs=2))
    mlp, _ = train_mlp(encode_dataset(ae, ds), ds.labels, small_cfg(epochs=2), hidden=(8,))
    from holab.dataset import NormalizationSpec
    norm = NormalizationSpec(np.zeros(84), np.ones(84))
    pa, pm = str(tmp_path / "ae.ckpt"), str(tmp_path / "mlp.ckpt")
    save_model(pa, ae, norm)
    save_model(pm, mlp, norm)
    ae2, norm_a = load_model(pa)
    mlp2, norm_m = load_model(pm)
    np.testing.assert_array_equal(norm_a.feat_max, np.ones(84))
    np.testing.assert_array_equal(norm_m.feat_min, np.zeros(84))
    x = ds.features[:3]
    np.testing.assert_array_equal(AeMlpRegressor(ae, mlp).predict(x),
                                  AeMlpRegressor(ae2, mlp2).predict(x))
