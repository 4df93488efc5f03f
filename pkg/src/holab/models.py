"""The two download-time predictors and their training loops.

Model 1: many-to-one LSTM stack with a linear head on the last hidden state.
Model 2: sequence autoencoder (encoder final state = codeword, decoder fed the
codeword at every timestep) trained unsupervised, followed by an MLP regressor
on frozen codewords.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from holab.config import TrainConfig
from holab.dataset import CLIP_HI, CLIP_LO, Dataset, NormalizationSpec
from holab.errors import DataError, UsageError
from holab.nn.checkpoint import load_checkpoint, save_checkpoint
from holab.nn.layers import DenseLayer, LstmLayer
from holab.nn.losses import mse, mse_grad
from holab.nn.optim import Adam

DEFAULT_HORIZON_S = 40.0
NORM_TOLERANCE = 1e-6

_LSTM_FIELDS = ("W_i", "W_f", "W_g", "W_o", "U_i", "U_f", "U_g", "U_o",
                "b_i", "b_f", "b_g", "b_o")
_GATE_OF_FIELD = {f: f[-1] for f in _LSTM_FIELDS}
_GATES = ("i", "f", "o", "g")


class LstmRegressor:
    """Many-to-one LSTM stack plus a linear head predicting one scalar."""

    def __init__(self, input_dim: int = 84, hidden: tuple[int, ...] = (84, 62, 42),
                 seed: int = 0, horizon: float = DEFAULT_HORIZON_S):
        if not hidden:
            raise UsageError("hidden sizes must be non-empty")
        self.input_dim = input_dim
        self.hidden = tuple(int(h) for h in hidden)
        self.horizon = float(horizon)
        rng = np.random.default_rng(seed)
        dims = [input_dim, *self.hidden]
        self.layers = [LstmLayer(dims[i], dims[i + 1], rng) for i in range(len(self.hidden))]
        self.head = DenseLayer(self.hidden[-1], 1, "identity", rng)

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        out.extend(self.head.params())
        return out

    def grads(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.grads())
        out.extend(self.head.grads())
        return out

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.zero_grads()
        self.head.zero_grads()

    def forward(self, X: np.ndarray, keep_cache: bool = True) -> np.ndarray:
        H = X
        for layer in self.layers:
            H = layer.forward(H, keep_cache=keep_cache)
        self._last_shape = H.shape
        return self.head.forward(H[:, -1, :], keep_cache=keep_cache)[:, 0]

    def backward(self, dy: np.ndarray) -> None:
        dlast = self.head.backward(dy[:, None])
        B, T, hd = self._last_shape
        dH = np.zeros((B, T, hd))
        dH[:, -1, :] = dlast
        for layer in reversed(self.layers):
            dH = layer.backward(dH)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X, keep_cache=False)

    def param_count(self) -> int:
        return sum(p.size for p in self.params())


class SeqAutoencoder:
    """LSTM encoder to a fixed-length codeword; LSTM decoder reconstructs the sequence."""

    def __init__(self, input_dim: int = 84, enc_hidden: tuple[int, ...] = (100,),
                 dec_hidden: tuple[int, ...] = (100,), seed: int = 0):
        if not enc_hidden or not dec_hidden:
            raise UsageError("encoder/decoder stacks must be non-empty")
        self.input_dim = input_dim
        self.enc_hidden = tuple(int(h) for h in enc_hidden)
        self.dec_hidden = tuple(int(h) for h in dec_hidden)
        self.cw = self.enc_hidden[-1]
        rng = np.random.default_rng(seed)
        enc_dims = [input_dim, *self.enc_hidden]
        self.encoder = [LstmLayer(enc_dims[i], enc_dims[i + 1], rng)
                        for i in range(len(self.enc_hidden))]
        dec_dims = [self.cw, *self.dec_hidden]
        self.decoder = [LstmLayer(dec_dims[i], dec_dims[i + 1], rng)
                        for i in range(len(self.dec_hidden))]
        self.out = DenseLayer(self.dec_hidden[-1], input_dim, "identity", rng)

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in [*self.encoder, *self.decoder]:
            out.extend(layer.params())
        out.extend(self.out.params())
        return out

    def grads(self) -> list[np.ndarray]:
        out = []
        for layer in [*self.encoder, *self.decoder]:
            out.extend(layer.grads())
        out.extend(self.out.grads())
        return out

    def zero_grads(self) -> None:
        for layer in [*self.encoder, *self.decoder]:
            layer.zero_grads()
        self.out.zero_grads()

    def encode(self, X: np.ndarray) -> np.ndarray:
        """Codewords (B, cw) = encoder final hidden states; no caches kept."""
        H = X
        for layer in self.encoder:
            H = layer.forward(H, keep_cache=False)
        return H[:, -1, :]

    def forward(self, X: np.ndarray, keep_cache: bool = True) -> np.ndarray:
        B, T, d = X.shape
        H = X
        for layer in self.encoder:
            H = layer.forward(H, keep_cache=keep_cache)
        code = H[:, -1, :]
        rep = np.broadcast_to(code[:, None, :], (B, T, self.cw)).copy()
        D = rep
        for layer in self.decoder:
            D = layer.forward(D, keep_cache=keep_cache)
        recon = self.out.forward(D.reshape(B * T, -1), keep_cache=keep_cache)
        self._shape = (B, T)
        return recon.reshape(B, T, d)

    def backward(self, drecon: np.ndarray) -> None:
        B, T = self._shape
        dD = self.out.backward(drecon.reshape(B * T, -1)).reshape(B, T, -1)
        for layer in reversed(self.decoder):
            dD = layer.backward(dD)
        dcode = dD.sum(axis=1)
        dH = np.zeros((B, T, self.cw))
        dH[:, -1, :] = dcode
        for layer in reversed(self.encoder):
            dH = layer.backward(dH)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X, keep_cache=False)

    def param_count(self) -> int:
        return sum(p.size for p in self.params())


class MlpRegressor:
    """ReLU MLP on codewords with a linear scalar output."""

    def __init__(self, input_dim: int = 100, hidden: tuple[int, ...] = (80, 40),
                 seed: int = 0, horizon: float = DEFAULT_HORIZON_S):
        self.input_dim = input_dim
        self.hidden = tuple(int(h) for h in hidden)
        self.horizon = float(horizon)
        rng = np.random.default_rng(seed)
        dims = [input_dim, *self.hidden, 1]
        self.layers = []
        for i in range(len(dims) - 1):
            act = "relu" if i < len(dims) - 2 else "identity"
            self.layers.append(DenseLayer(dims[i], dims[i + 1], act, rng))

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def grads(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.grads())
        return out

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.zero_grads()

    def forward(self, X: np.ndarray, keep_cache: bool = True) -> np.ndarray:
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DataError(f"mlp expects (N, {self.input_dim}) codewords")
        H = X
        for layer in self.layers:
            H = layer.forward(H, keep_cache=keep_cache)
        return H[:, 0]

    def backward(self, dy: np.ndarray) -> None:
        dH = dy[:, None]
        for layer in reversed(self.layers):
            dH = layer.backward(dH)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X, keep_cache=False)

    def param_count(self) -> int:
        return sum(p.size for p in self.params())


class AeMlpRegressor:
    """Frozen encoder plus MLP head, exposed with the regressor predict interface."""

    def __init__(self, ae: SeqAutoencoder, mlp: MlpRegressor):
        if mlp.input_dim != ae.cw:
            raise DataError("MLP input dimension does not match the codeword length")
        self.ae = ae
        self.mlp = mlp
        self.horizon = mlp.horizon

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.mlp.predict(self.ae.encode(X))


@dataclass
class LossCurve:
    """Per-epoch train/validation MSE."""

    train: np.ndarray
    val: np.ndarray

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,train_mse,val_mse\n")
            for e, (tr, va) in enumerate(zip(self.train, self.val), start=1):
                fh.write(f"{e},{tr:.10g},{va:.10g}\n")

    @property
    def mean_val(self) -> float:
        vals = self.val[np.isfinite(self.val)]
        return float(np.mean(vals)) if vals.size else float(np.mean(self.train))

    @property
    def final_val(self) -> float:
        finite = self.val[np.isfinite(self.val)]
        return float(finite[-1]) if finite.size else float(self.train[-1])


def check_normalized(features: np.ndarray) -> None:
    """Reject inputs that cannot have passed min-max normalization."""
    if features.size == 0:
        return
    lo = float(np.min(features))
    hi = float(np.max(features))
    if lo < CLIP_LO - NORM_TOLERANCE or hi > CLIP_HI + NORM_TOLERANCE:
        raise UsageError(
            f"input features span [{lo:.3g}, {hi:.3g}]; expected normalized values "
            f"within [{CLIP_LO}, {CLIP_HI}]"
        )


def _train(model, X: np.ndarray, targets: np.ndarray, cfg: TrainConfig,
           stop_below_val: float | None = None) -> LossCurve:
    """Mini-batch Adam loop; retains the best-validation parameters."""
    cfg.validate()
    n = X.shape[0]
    if n == 0:
        raise UsageError("cannot train on an empty dataset")
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(n)
    n_val = int(round(cfg.validation_fraction * n))
    val_idx = perm[:n_val]
    train_idx = perm[n_val:]
    if train_idx.size == 0:
        raise UsageError("validation split leaves no training samples")
    adam = Adam(model.params(), lr=cfg.lr)
    train_curve = []
    val_curve = []
    best_metric = math.inf
    best_params = [p.copy() for p in model.params()]
    for _ in range(cfg.epochs):
        order = train_idx[rng.permutation(train_idx.size)]
        total = 0.0
        for start in range(0, order.size, cfg.batch_size):
            bidx = order[start:start + cfg.batch_size]
            pred = model.forward(X[bidx])
            total += mse(pred, targets[bidx]) * bidx.size
            model.zero_grads()
            model.backward(mse_grad(pred, targets[bidx]))
            adam.step(model.grads())
        train_mse = total / order.size
        if n_val:
            val_mse = mse(model.predict(X[val_idx]), targets[val_idx])
        else:
            val_mse = math.nan
        train_curve.append(train_mse)
        val_curve.append(val_mse)
        metric = val_mse if n_val else train_mse
        if metric < best_metric:
            best_metric = metric
            best_params = [p.copy() for p in model.params()]
        if stop_below_val is not None and metric < stop_below_val:
            break
    for p, saved in zip(model.params(), best_params):
        p[...] = saved
    return LossCurve(np.array(train_curve), np.array(val_curve))


def train_lstm_regressor(dataset: Dataset, cfg: TrainConfig,
                         hidden: tuple[int, ...] = (84, 62, 42),
                         horizon: float = DEFAULT_HORIZON_S, seed: int | None = None,
                         stop_below_val: float | None = None) -> tuple[LstmRegressor, LossCurve]:
    """Supervised training on normalized sequences; labels are scaled by the horizon."""
    if dataset.n == 0:
        raise UsageError("cannot train on an empty dataset")
    check_normalized(dataset.features)
    model = LstmRegressor(input_dim=dataset.features.shape[2], hidden=hidden,
                          seed=cfg.seed if seed is None else seed, horizon=horizon)
    y = dataset.labels / horizon
    curve = _train(model, dataset.features, y, cfg, stop_below_val)
    return model, curve


def train_autoencoder(dataset: Dataset, cw: int, cfg: TrainConfig,
                      enc_hidden: tuple[int, ...] | None = None,
                      dec_hidden: tuple[int, ...] | None = None,
                      seed: int | None = None,
                      stop_below_val: float | None = None) -> tuple[SeqAutoencoder, LossCurve]:
    """Unsupervised reconstruction training; labels are ignored."""
    if dataset.n == 0:
        raise UsageError("cannot train on an empty dataset")
    check_normalized(dataset.features)
    m = dataset.num_windows
    d = dataset.features.shape[2]
    if cw >= m * d:
        raise UsageError(f"codeword length {cw} must be smaller than the "
                         f"flattened sequence length {m * d}")
    if cw < 1:
        raise UsageError("codeword length must be >= 1")
    enc = tuple(enc_hidden) if enc_hidden else (cw,)
    if enc[-1] != cw:
        raise UsageError("encoder stack must end at the codeword length")
    dec = tuple(dec_hidden) if dec_hidden else (cw,)
    ae = SeqAutoencoder(input_dim=d, enc_hidden=enc, dec_hidden=dec,
                        seed=cfg.seed if seed is None else seed)
    curve = _train(ae, dataset.features, dataset.features, cfg, stop_below_val)
    return ae, curve


def encode_dataset(ae: SeqAutoencoder, dataset: Dataset, batch: int = 256) -> np.ndarray:
    """Codewords for every row, computed in read-only batches."""
    check_normalized(dataset.features)
    chunks = [ae.encode(dataset.features[s:s + batch])
              for s in range(0, dataset.n, batch)]
    return np.concatenate(chunks) if chunks else np.zeros((0, ae.cw))


def train_mlp(codewords: np.ndarray, labels_s: np.ndarray, cfg: TrainConfig,
              hidden: tuple[int, ...] = (80, 40), horizon: float = DEFAULT_HORIZON_S,
              seed: int | None = None,
              stop_below_val: float | None = None) -> tuple[MlpRegressor, LossCurve]:
    """Supervised regression on frozen codewords; the encoder is never touched."""
    if codewords.ndim != 2:
        raise DataError("codewords must be a (n, cw) matrix")
    if codewords.shape[0] != labels_s.shape[0]:
        raise DataError("codeword and label counts differ")
    model = MlpRegressor(input_dim=codewords.shape[1], hidden=hidden,
                         seed=cfg.seed if seed is None else seed, horizon=horizon)
    y = labels_s / horizon
    curve = _train(model, codewords, y, cfg, stop_below_val)
    return model, curve


def predict_download_time(model, sequence: np.ndarray):
    """Predicted seconds for one (m, 84) sequence or a batch (n, m, 84).

    The model output is rescaled by the horizon and clamped into (0, horizon];
    raises UsageError when the input does not look normalized.
    """
    seq = np.asarray(sequence, dtype=float)
    single = seq.ndim == 2
    if single:
        seq = seq[None]
    check_normalized(seq)
    scaled = model.predict(seq)
    seconds = np.clip(scaled * model.horizon, np.nextafter(0.0, 1.0), model.horizon)
    return float(seconds[0]) if single else seconds


# --- checkpoint serialization -------------------------------------------------

def _lstm_tensor_list(prefix: str, layer: LstmLayer) -> list[tuple[str, np.ndarray]]:
    return [(f"{prefix}.{f}", np.ascontiguousarray(getattr(layer, f))) for f in _LSTM_FIELDS]


def _assign_lstm(layer: LstmLayer, prefix: str, tensors: dict[str, np.ndarray]) -> None:
    h = layer.hidden_dim
    for f in _LSTM_FIELDS:
        name = f"{prefix}.{f}"
        if name not in tensors:
            raise DataError(f"checkpoint missing tensor {name}")
        arr = tensors[name]
        j = _GATES.index(_GATE_OF_FIELD[f])
        if f.startswith("W"):
            layer.Wx[:, j * h:(j + 1) * h] = arr.T
        elif f.startswith("U"):
            layer.Uh[:, j * h:(j + 1) * h] = arr.T
        else:
            layer.b[j * h:(j + 1) * h] = arr


def _norm_tensors(norm: NormalizationSpec | None) -> list[tuple[str, np.ndarray]]:
    if norm is None:
        return []
    return [("norm.min", norm.feat_min), ("norm.max", norm.feat_max)]


def _extract_norm(tensors: dict[str, np.ndarray]) -> NormalizationSpec | None:
    if "norm.min" not in tensors:
        return None
    spec = NormalizationSpec(tensors["norm.min"], tensors["norm.max"])
    spec.validate()
    return spec


def _ints(csv_str: str) -> tuple[int, ...]:
    return tuple(int(v) for v in csv_str.split(",") if v)


def save_model(path: str, model, norm: NormalizationSpec | None = None) -> None:
    if isinstance(model, LstmRegressor):
        desc = (f"lstm_regressor input={model.input_dim} "
                f"hidden={','.join(map(str, model.hidden))} horizon={model.horizon:g}")
        tensors = []
        for i, layer in enumerate(model.layers):
            tensors.extend(_lstm_tensor_list(f"lstm{i}", layer))
        tensors.append(("head.W", model.head.W))
        tensors.append(("head.b", model.head.b))
    elif isinstance(model, SeqAutoencoder):
        desc = (f"seq_autoencoder input={model.input_dim} "
                f"enc={','.join(map(str, model.enc_hidden))} "
                f"dec={','.join(map(str, model.dec_hidden))}")
        tensors = []
        for i, layer in enumerate(model.encoder):
            tensors.extend(_lstm_tensor_list(f"enc{i}", layer))
        for i, layer in enumerate(model.decoder):
            tensors.extend(_lstm_tensor_list(f"dec{i}", layer))
        tensors.append(("out.W", model.out.W))
        tensors.append(("out.b", model.out.b))
    elif isinstance(model, MlpRegressor):
        desc = (f"mlp_regressor input={model.input_dim} "
                f"hidden={','.join(map(str, model.hidden))} horizon={model.horizon:g}")
        tensors = []
        for i, layer in enumerate(model.layers):
            tensors.append((f"dense{i}.W", layer.W))
            tensors.append((f"dense{i}.b", layer.b))
    else:
        raise UsageError(f"cannot checkpoint {type(model).__name__}")
    tensors.extend(_norm_tensors(norm))
    save_checkpoint(path, desc, tensors)


def load_model(path: str):
    """Rebuild (model, norm_spec_or_None) from a checkpoint file."""
    desc, tensor_list = load_checkpoint(path)
    tensors = dict(tensor_list)
    try:
        fields = dict(tok.split("=", 1) for tok in desc.split()[1:])
    except ValueError as exc:
        raise DataError(f"malformed checkpoint descriptor {desc!r}") from exc
    kind = desc.split()[0] if desc else ""
    try:
        return _rebuild(kind, fields, tensors)
    except (KeyError, ValueError) as exc:
        raise DataError(f"checkpoint {path} is inconsistent: {exc}") from exc


def _rebuild(kind: str, fields: dict[str, str], tensors: dict[str, np.ndarray]):
    if kind == "lstm_regressor":
        model = LstmRegressor(input_dim=int(fields["input"]), hidden=_ints(fields["hidden"]),
                              horizon=float(fields["horizon"]))
        for i, layer in enumerate(model.layers):
            _assign_lstm(layer, f"lstm{i}", tensors)
        model.head.W[...] = tensors["head.W"]
        model.head.b[...] = tensors["head.b"]
    elif kind == "seq_autoencoder":
        model = SeqAutoencoder(input_dim=int(fields["input"]), enc_hidden=_ints(fields["enc"]),
                               dec_hidden=_ints(fields["dec"]))
        for i, layer in enumerate(model.encoder):
            _assign_lstm(layer, f"enc{i}", tensors)
        for i, layer in enumerate(model.decoder):
            _assign_lstm(layer, f"dec{i}", tensors)
        model.out.W[...] = tensors["out.W"]
        model.out.b[...] = tensors["out.b"]
    elif kind == "mlp_regressor":
        model = MlpRegressor(input_dim=int(fields["input"]), hidden=_ints(fields["hidden"]),
                             horizon=float(fields["horizon"]))
        for i, layer in enumerate(model.layers):
            layer.W[...] = tensors[f"dense{i}.W"]
            layer.b[...] = tensors[f"dense{i}.b"]
    else:
        raise DataError(f"unknown model kind {kind!r} in checkpoint")
    return model, _extract_norm(tensors)
