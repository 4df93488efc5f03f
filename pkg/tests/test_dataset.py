import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holab.dataset import (
    Dataset,
    NormalizationSpec,
    build_dataset,
    empty_dataset,
    feature_column_names,
    fit_normalizer,
    flatten_for_inference,
    load_dataset,
    normalize,
    normalize_features,
    save_dataset,
    unflatten,
)
from holab.errors import DataError, UsageError
from holab.sim import TraceLog


def make_traces(n_runs=2, n_ues=3, ranks=8, m=10, seed=0):
    rng = np.random.default_rng(seed)
    traces = []
    for run in range(1, n_runs + 1):
        for ue in range(1, n_ues + 1):
            for k in range(1, ranks + 1):
                feats = rng.uniform(0, 100, size=(m, 84))
                traces.append(TraceLog(run_id=run, ue_id=ue, policy=f"forced{k}",
                                       neighbor_rank=k, target_cell=k + 1,
                                       download_time=float(rng.uniform(1, 40)),
                                       features=feats))
    return traces


def make_dataset(**kw):
    return build_dataset(make_traces(**kw))


def test_build_dataset_row_count():
    ds = make_dataset(n_runs=2, n_ues=3)
    assert ds.n == 2 * 3 * 8
    assert ds.features.shape == (48, 10, 84)


def test_build_dataset_desk_scale_arithmetic():
    ds = make_dataset(n_runs=5, n_ues=21, ranks=8, m=4)
    assert ds.n == 840


def test_build_dataset_rejects_wrong_window_count():
    traces = make_traces(m=10)
    traces[3].features = traces[3].features[:7]
    with pytest.raises(DataError):
        build_dataset(traces)


def test_empty_dataset_valid():
    ds = build_dataset([])
    assert ds.n == 0
    ds.validate()


# --- normalization ------------------------------------------------------------

def test_minmax_scaling_simple_column():
    feats = np.zeros((3, 1, 84))
    feats[:, 0, 0] = [0.0, 5.0, 10.0]
    ds = Dataset(feats, np.ones(3), np.array([1, 1, 1], dtype=np.int32),
                 np.arange(3, dtype=np.int32), np.ones(3, dtype=np.int32),
                 np.zeros(3, dtype=np.int32))
    spec = fit_normalizer(ds, [1])
    out = normalize(ds, spec)
    np.testing.assert_allclose(out.features[:, 0, 0], [0.0, 0.5, 1.0])


def test_constant_column_maps_to_zero():
    feats = np.full((3, 2, 84), 7.0)
    ds = Dataset(feats, np.ones(3), np.ones(3, dtype=np.int32),
                 np.arange(3, dtype=np.int32), np.ones(3, dtype=np.int32),
                 np.zeros(3, dtype=np.int32))
    spec = fit_normalizer(ds, [1])
    out = normalize(ds, spec)
    assert np.all(out.features == 0.0)


def test_eval_values_clipped():
    spec = NormalizationSpec(np.zeros(84), np.ones(84))
    feats = np.full((1, 1, 84), 3.0)
    out = normalize_features(feats, spec)
    assert np.all(out == 1.5)
    out_lo = normalize_features(np.full((1, 1, 84), -2.0), spec)
    assert np.all(out_lo == -0.5)


def test_empty_training_split_rejected():
    ds = make_dataset()
    with pytest.raises(UsageError):
        fit_normalizer(ds, [])
    with pytest.raises(UsageError):
        fit_normalizer(ds, [99])


def test_normalizer_uses_training_runs_only():
    ds = make_dataset(n_runs=2)
    spec1 = fit_normalizer(ds, [1])
    both = fit_normalizer(ds, [1, 2])
    mask = ds.run_ids == 1
    flat = ds.features[mask].reshape(-1, 84)
    np.testing.assert_array_equal(spec1.feat_min, flat.min(axis=0))
    assert np.any(both.feat_max != spec1.feat_max)


def test_normalization_idempotent_on_unit_spec():
    ds = make_dataset()
    spec = fit_normalizer(ds, [1, 2])
    once = normalize(ds, spec)
    unit = NormalizationSpec(np.zeros(84), np.ones(84))
    twice = normalize(once, unit)
    np.testing.assert_allclose(twice.features, once.features)


# --- flattening -----------------------------------------------------------------

def test_flatten_length_and_roundtrip():
    seq = np.random.default_rng(0).uniform(size=(200, 84))
    row = flatten_for_inference(seq)
    assert row.shape == (16800,)
    np.testing.assert_array_equal(unflatten(row, 200), seq)


def test_flatten_window_major_ordering():
    seq = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    # toy matrix flattens row by row (window-major)
    np.testing.assert_array_equal(np.ascontiguousarray(seq).reshape(-1),
                                  [1, 2, 3, 4, 5, 6])


# --- file round trips --------------------------------------------------------------

def test_binary_roundtrip(tmp_path):
    ds = make_dataset()
    path = str(tmp_path / "d.bin")
    save_dataset(ds, path, format="binary")
    back = load_dataset(path, format="binary")
    np.testing.assert_array_equal(back.features, ds.features.astype(np.float32).astype(float))
    np.testing.assert_array_equal(back.labels, ds.labels.astype(np.float32).astype(float))
    np.testing.assert_array_equal(back.run_ids, ds.run_ids)
    np.testing.assert_array_equal(back.neighbor_ranks, ds.neighbor_ranks)


def test_binary_truncation_fails_closed(tmp_path):
    ds = make_dataset()
    path = tmp_path / "d.bin"
    save_dataset(ds, str(path), format="binary")
    data = path.read_bytes()
    path.write_bytes(data[:len(data) // 2])
    with pytest.raises(DataError):
        load_dataset(str(path), format="binary")


def test_binary_bad_magic_rejected(tmp_path):
    path = tmp_path / "d.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(DataError):
        load_dataset(str(path), format="binary")


def test_binary_trailing_bytes_rejected(tmp_path):
    ds = make_dataset()
    path = tmp_path / "d.bin"
    save_dataset(ds, str(path), format="binary")
    path.write_bytes(path.read_bytes() + b"x")
    with pytest.raises(DataError):
        load_dataset(str(path), format="binary")


def test_csv_roundtrip_and_header(tmp_path):
    ds = make_dataset(n_runs=1, n_ues=2, ranks=2, m=3)
    path = str(tmp_path / "d.csv")
    save_dataset(ds, path, format="csv")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    assert "rsrp_serving" in header[7]
    assert header[:2] == ["f01_app_ul_throughput", "f02_app_ul_rx_packets"]
    back = load_dataset(path, format="csv")
    np.testing.assert_allclose(back.features,
                               ds.features.astype(np.float32).astype(float))
    np.testing.assert_array_equal(back.run_ids, ds.run_ids)


def test_csv_header_mismatch_rejected(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(DataError):
        load_dataset(str(path), format="csv")


def test_feature_column_names_count():
    names = feature_column_names()
    assert len(names) == 84
    assert names[7] == "f08_rsrp_serving"


@given(st.integers(0, 3), st.integers(1, 4), st.integers(0, 2 ** 31 - 1))
@settings(max_examples=12, deadline=None)
def test_binary_roundtrip_property(n_seqs, m, seed):
    rng = np.random.default_rng(seed)
    if n_seqs == 0:
        ds = empty_dataset(m)
    else:
        feats = rng.uniform(-1e5, 1e5, size=(n_seqs, m, 84)).astype(np.float32).astype(float)
        ds = Dataset(feats, rng.uniform(0, 40, n_seqs).astype(np.float32).astype(float),
                     rng.integers(0, 100, n_seqs).astype(np.int32),
                     rng.integers(0, 100, n_seqs).astype(np.int32),
                     rng.integers(0, 9, n_seqs).astype(np.int32),
                     rng.integers(0, 22, n_seqs).astype(np.int32))
    import tempfile, os
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "x.bin")
        save_dataset(ds, path, format="binary")
        back = load_dataset(path, format="binary")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_array_equal(back.target_cells, ds.target_cells)
