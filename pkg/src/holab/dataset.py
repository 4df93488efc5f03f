"""Labeled-sequence dataset assembly, normalization, flattening, and file I/O."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from holab.errors import DataError, UsageError
from holab.features import FEATURE_NAMES, NUM_FEATURES
from holab.sim import TraceLog

BINARY_MAGIC = b"HODS"
BINARY_VERSION = 1
CLIP_LO = -0.5
CLIP_HI = 1.5

META_COLUMNS = ["label", "run_id", "ue_id", "neighbor_rank", "target_cell", "window"]


def feature_column_names() -> list[str]:
    return [f"f{i + 1:02d}_{name}" for i, name in enumerate(FEATURE_NAMES)]


@dataclass
class Dataset:
    """n labeled sequences of shape (num_windows, 84) plus per-row campaign metadata."""

    features: np.ndarray  # (n, m, 84) float64
    labels: np.ndarray  # (n,) seconds
    run_ids: np.ndarray  # (n,) int
    ue_ids: np.ndarray  # (n,) int
    neighbor_ranks: np.ndarray  # (n,) int
    target_cells: np.ndarray  # (n,) int

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def num_windows(self) -> int:
        return self.features.shape[1]

    def validate(self) -> None:
        n = self.n
        for name in ("labels", "run_ids", "ue_ids", "neighbor_ranks", "target_cells"):
            if getattr(self, name).shape[0] != n:
                raise DataError(f"{name} length does not match feature rows")
        if self.features.ndim != 3 or (n > 0 and self.features.shape[2] != NUM_FEATURES):
            raise DataError("features must have shape (n, m, 84)")
        if n > 0 and not np.all(np.isfinite(self.features)):
            raise DataError("non-finite feature values")
        if n > 0 and not np.all(np.isfinite(self.labels)):
            raise DataError("non-finite labels")


def empty_dataset(num_windows: int = 0) -> Dataset:
    return Dataset(
        features=np.zeros((0, num_windows, NUM_FEATURES)),
        labels=np.zeros(0),
        run_ids=np.zeros(0, dtype=np.int32),
        ue_ids=np.zeros(0, dtype=np.int32),
        neighbor_ranks=np.zeros(0, dtype=np.int32),
        target_cells=np.zeros(0, dtype=np.int32),
    )


def build_dataset(traces: list[TraceLog], expected_windows: int | None = None) -> Dataset:
    """One labeled row per trace; every trace must carry the same window count."""
    if not traces:
        return empty_dataset(expected_windows or 0)
    m = expected_windows if expected_windows is not None else traces[0].features.shape[0]
    for t in traces:
        if t.features.shape != (m, NUM_FEATURES):
            raise DataError(
                f"trace run={t.run_id} ue={t.ue_id} rank={t.neighbor_rank} has shape "
                f"{t.features.shape}, expected {(m, NUM_FEATURES)}"
            )
    ds = Dataset(
        features=np.stack([t.features for t in traces]).astype(float),
        labels=np.array([t.download_time for t in traces], dtype=float),
        run_ids=np.array([t.run_id for t in traces], dtype=np.int32),
        ue_ids=np.array([t.ue_id for t in traces], dtype=np.int32),
        neighbor_ranks=np.array([t.neighbor_rank for t in traces], dtype=np.int32),
        target_cells=np.array([t.target_cell for t in traces], dtype=np.int32),
    )
    ds.validate()
    return ds


def concat_datasets(parts: list[Dataset]) -> Dataset:
    parts = [p for p in parts if p.n > 0]
    if not parts:
        return empty_dataset()
    m = parts[0].num_windows
    for p in parts:
        if p.num_windows != m:
            raise DataError("cannot concatenate datasets with different window counts")
    return Dataset(
        features=np.concatenate([p.features for p in parts]),
        labels=np.concatenate([p.labels for p in parts]),
        run_ids=np.concatenate([p.run_ids for p in parts]),
        ue_ids=np.concatenate([p.ue_ids for p in parts]),
        neighbor_ranks=np.concatenate([p.neighbor_ranks for p in parts]),
        target_cells=np.concatenate([p.target_cells for p in parts]),
    )


def subset(ds: Dataset, mask: np.ndarray) -> Dataset:
    return Dataset(ds.features[mask], ds.labels[mask], ds.run_ids[mask],
                   ds.ue_ids[mask], ds.neighbor_ranks[mask], ds.target_cells[mask])


@dataclass
class NormalizationSpec:
    """Per-feature min/max fitted on the training split only."""

    feat_min: np.ndarray  # (84,)
    feat_max: np.ndarray  # (84,)

    def validate(self) -> None:
        if self.feat_min.shape != (NUM_FEATURES,) or self.feat_max.shape != (NUM_FEATURES,):
            raise DataError("normalization spec must cover all 84 features")
        if np.any(self.feat_max < self.feat_min):
            raise DataError("normalization spec has max < min")


def fit_normalizer(ds: Dataset, train_run_ids) -> NormalizationSpec:
    """Min-max bounds over all windows of the rows belonging to training runs."""
    train_ids = set(int(r) for r in train_run_ids)
    if not train_ids:
        raise UsageError("training split is empty")
    mask = np.isin(ds.run_ids, list(train_ids))
    if not np.any(mask):
        raise UsageError("no dataset rows belong to the requested training runs")
    flat = ds.features[mask].reshape(-1, NUM_FEATURES)
    spec = NormalizationSpec(feat_min=flat.min(axis=0), feat_max=flat.max(axis=0))
    spec.validate()
    return spec


def normalize_features(features: np.ndarray, spec: NormalizationSpec) -> np.ndarray:
    """Scale into [0,1] per feature and clip to [-0.5, 1.5]; constant features map to 0."""
    spec.validate()
    span = spec.feat_max - spec.feat_min
    safe = np.where(span > 0, span, 1.0)
    scaled = (features - spec.feat_min) / safe
    scaled = np.where(span > 0, scaled, 0.0)
    return np.clip(scaled, CLIP_LO, CLIP_HI)


def normalize(ds: Dataset, spec: NormalizationSpec) -> Dataset:
    return Dataset(normalize_features(ds.features, spec), ds.labels.copy(),
                   ds.run_ids.copy(), ds.ue_ids.copy(),
                   ds.neighbor_ranks.copy(), ds.target_cells.copy())


def flatten_for_inference(sequence: np.ndarray) -> np.ndarray:
    """Window-major flattening of an (m, 84) sequence into one row vector."""
    if sequence.ndim != 2:
        raise DataError("expected an (m, features) sequence")
    return np.ascontiguousarray(sequence).reshape(-1)


def unflatten(row: np.ndarray, num_windows: int) -> np.ndarray:
    if row.size != num_windows * NUM_FEATURES:
        raise DataError("flattened length does not match window count")
    return row.reshape(num_windows, NUM_FEATURES)


def save_dataset(ds: Dataset, path: str, format: str = "binary") -> None:
    ds.validate()
    if format == "binary":
        _save_binary(ds, path)
    elif format == "csv":
        _save_csv(ds, path)
    else:
        raise UsageError(f"unknown dataset format {format!r}")


def load_dataset(path: str, format: str = "binary") -> Dataset:
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise UsageError(f"unknown dataset format {format!r}")


def _save_binary(ds: Dataset, path: str) -> None:
    n, m = ds.n, ds.num_windows
    header = BINARY_MAGIC + struct.pack("<IIII", BINARY_VERSION, n, m, NUM_FEATURES)
    meta = np.stack([ds.run_ids, ds.ue_ids, ds.neighbor_ranks, ds.target_cells],
                    axis=1).astype("<i4") if n else np.zeros((0, 4), dtype="<i4")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(ds.features.astype("<f4").tobytes())
        fh.write(ds.labels.astype("<f4").tobytes())
        fh.write(meta.tobytes())


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise DataError(f"truncated dataset file while reading {what}")
    return data


def _load_binary(path: str) -> Dataset:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != BINARY_MAGIC:
            raise DataError("bad dataset magic; not a dataset file")
        version, n, m, f = struct.unpack("<IIII", _read_exact(fh, 16, "header"))
        if version != BINARY_VERSION:
            raise DataError(f"unsupported dataset version {version}")
        if f != NUM_FEATURES:
            raise DataError(f"dataset carries {f} features, expected {NUM_FEATURES}")
        feats = np.frombuffer(_read_exact(fh, 4 * n * m * f, "features"),
                              dtype="<f4").reshape(n, m, f).astype(float)
        labels = np.frombuffer(_read_exact(fh, 4 * n, "labels"), dtype="<f4").astype(float)
        meta = np.frombuffer(_read_exact(fh, 16 * n, "meta"),
                             dtype="<i4").reshape(n, 4).astype(np.int32)
        if fh.read(1):
            raise DataError("trailing bytes after dataset payload")
    ds = Dataset(feats, labels, meta[:, 0], meta[:, 1], meta[:, 2], meta[:, 3])
    ds.validate()
    return ds


def _save_csv(ds: Dataset, path: str) -> None:
    header = feature_column_names() + META_COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n):
            # float32 precision on disk to mirror the binary format
            feats = ds.features[i].astype(np.float32)
            label = np.float32(ds.labels[i])
            for w in range(ds.num_windows):
                row = [f"{v:.9g}" for v in feats[w]]
                row += [f"{label:.9g}", int(ds.run_ids[i]), int(ds.ue_ids[i]),
                        int(ds.neighbor_ranks[i]), int(ds.target_cells[i]), w]
                writer.writerow(row)


def _load_csv(path: str) -> Dataset:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise DataError("empty CSV dataset file") from exc
        expected = feature_column_names() + META_COLUMNS
        if header != expected:
            raise DataError("CSV header does not match the dataset schema")
        sequences: list[np.ndarray] = []
        labels: list[float] = []
        metas: list[tuple[int, int, int, int]] = []
        current: list[np.ndarray] = []
        current_key = None
        for line in reader:
            if len(line) != NUM_FEATURES + len(META_COLUMNS):
                raise DataError("CSV row has wrong column count")
            # parse at float32 first: the on-disk decimals identify f32 values
            feats = np.array(line[:NUM_FEATURES], dtype=np.float32).astype(float)
            label = float(np.float32(line[NUM_FEATURES]))
            run_id, ue_id, rank, target, window = (int(v) for v in line[NUM_FEATURES + 1:])
            key = (run_id, ue_id, rank, target, label)
            if window == 0:
                if current:
                    sequences.append(np.stack(current))
                    labels.append(current_key[4])
                    metas.append(current_key[:4])
                current = []
                current_key = key
            elif key != current_key or window != len(current):
                raise DataError("CSV windows out of order or metadata inconsistent")
            current.append(feats)
        if current:
            sequences.append(np.stack(current))
            labels.append(current_key[4])
            metas.append(current_key[:4])
    if not sequences:
        return empty_dataset()
    m = sequences[0].shape[0]
    if any(s.shape[0] != m for s in sequences):
        raise DataError("CSV sequences have inconsistent window counts")
    meta_arr = np.array(metas, dtype=np.int32)
    ds = Dataset(np.stack(sequences), np.array(labels), meta_arr[:, 0],
                 meta_arr[:, 1], meta_arr[:, 2], meta_arr[:, 3])
    ds.validate()
    return ds
