"""Dense and LSTM layers with analytic forward/backward passes (64-bit numpy).

Gate math follows the standard formulation: i = sigmoid(W_i x + U_i h + b_i),
f and o likewise, g = tanh(W_g x + U_g h + b_g), c = f*c_prev + i*g,
h = o*tanh(c). Internally the four gates are fused into one matrix in
(i, f, o, g) column order so each timestep costs two GEMMs; the named
per-gate matrices are exposed as views for inspection and checkpointing.
"""

from __future__ import annotations

import numpy as np

from holab.errors import DataError

# fused column order of the gate blocks
_GATES = ("i", "f", "o", "g")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LstmLayer:
    """One LSTM layer operating batch-first on (B, T, input_dim) sequences."""

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator | None = None):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        rng = rng if rng is not None else np.random.default_rng(0)
        h, d = hidden_dim, input_dim
        self.Wx = rng.uniform(-1.0, 1.0, size=(d, 4 * h)) / np.sqrt(d)
        self.Uh = rng.uniform(-1.0, 1.0, size=(h, 4 * h)) / np.sqrt(h)
        self.b = np.zeros(4 * h)
        self.b[h:2 * h] = 1.0  # forget-gate bias
        self.dWx = np.zeros_like(self.Wx)
        self.dUh = np.zeros_like(self.Uh)
        self.db = np.zeros_like(self.b)
        self._cache = None

    def _block(self, fused: np.ndarray, gate: str) -> np.ndarray:
        h = self.hidden_dim
        j = _GATES.index(gate)
        return fused[..., j * h:(j + 1) * h]

    # named per-gate parameter views, shape (hidden, input) / (hidden, hidden)
    @property
    def W_i(self):
        return self._block(self.Wx, "i").T

    @property
    def W_f(self):
        return self._block(self.Wx, "f").T

    @property
    def W_g(self):
        return self._block(self.Wx, "g").T

    @property
    def W_o(self):
        return self._block(self.Wx, "o").T

    @property
    def U_i(self):
        return self._block(self.Uh, "i").T

    @property
    def U_f(self):
        return self._block(self.Uh, "f").T

    @property
    def U_g(self):
        return self._block(self.Uh, "g").T

    @property
    def U_o(self):
        return self._block(self.Uh, "o").T

    @property
    def b_i(self):
        return self._block(self.b, "i")

    @property
    def b_f(self):
        return self._block(self.b, "f")

    @property
    def b_g(self):
        return self._block(self.b, "g")

    @property
    def b_o(self):
        return self._block(self.b, "o")

    def params(self) -> list[np.ndarray]:
        return [self.Wx, self.Uh, self.b]

    def grads(self) -> list[np.ndarray]:
        return [self.dWx, self.dUh, self.db]

    def zero_grads(self) -> None:
        self.dWx[...] = 0.0
        self.dUh[...] = 0.0
        self.db[...] = 0.0

    def step(self, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
        """Single cell step; returns (h, c). Accepts (d,) vectors or (B, d) batches."""
        single = x.ndim == 1
        xb = x[None, :] if single else x
        hb = h_prev[None, :] if single else h_prev
        cb = c_prev[None, :] if single else c_prev
        if xb.shape[1] != self.input_dim or hb.shape[1] != self.hidden_dim:
            raise DataError("lstm step shape mismatch")
        z = xb @ self.Wx + hb @ self.Uh + self.b
        hd = self.hidden_dim
        act = np.empty_like(z)
        act[:, :3 * hd] = _sigmoid(z[:, :3 * hd])
        act[:, 3 * hd:] = np.tanh(z[:, 3 * hd:])
        i = self._block(act, "i")
        f = self._block(act, "f")
        o = self._block(act, "o")
        g = self._block(act, "g")
        c = f * cb + i * g
        h = o * np.tanh(c)
        if single:
            return h[0], c[0]
        return h, c

    def forward(self, X: np.ndarray, keep_cache: bool = True) -> np.ndarray:
        """Full-sequence forward; returns hidden states (B, T, hidden)."""
        if X.ndim != 3 or X.shape[2] != self.input_dim:
            raise DataError(f"lstm forward expects (B, T, {self.input_dim}) input")
        B, T, d = X.shape
        hd = self.hidden_dim
        Zx = (X.reshape(B * T, d) @ self.Wx).reshape(B, T, 4 * hd)
        A = np.empty((B, T, 4 * hd))
        C = np.empty((B, T, hd))
        TC = np.empty((B, T, hd))
        H = np.empty((B, T, hd))
        h = np.zeros((B, hd))
        c = np.zeros((B, hd))
        for t in range(T):
            z = Zx[:, t] + h @ self.Uh + self.b
            a = A[:, t]
            a[:, :3 * hd] = _sigmoid(z[:, :3 * hd])
            a[:, 3 * hd:] = np.tanh(z[:, 3 * hd:])
            i = a[:, :hd]
            f = a[:, hd:2 * hd]
            o = a[:, 2 * hd:3 * hd]
            g = a[:, 3 * hd:]
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            C[:, t] = c
            TC[:, t] = tc
            H[:, t] = h
        if keep_cache:
            self._cache = (X, A, C, TC, H)
        return H

    def backward(self, dH: np.ndarray) -> np.ndarray:
        """Full BPTT given upstream gradients on every hidden state; returns dX.

        Accumulates parameter gradients into dWx/dUh/db.
        """
        if self._cache is None:
            raise DataError("lstm backward called without a cached forward pass")
        X, A, C, TC, H = self._cache
        B, T, d = X.shape
        hd = self.hidden_dim
        dZ = np.empty((B, T, 4 * hd))
        dh_next = np.zeros((B, hd))
        dc_next = np.zeros((B, hd))
        for t in range(T - 1, -1, -1):
            a = A[:, t]
            i = a[:, :hd]
            f = a[:, hd:2 * hd]
            o = a[:, 2 * hd:3 * hd]
            g = a[:, 3 * hd:]
            tc = TC[:, t]
            c_prev = C[:, t - 1] if t > 0 else np.zeros((B, hd))
            dh = dH[:, t] + dh_next
            do = dh * tc
            dc = dc_next + dh * o * (1.0 - tc * tc)
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            dz = dZ[:, t]
            dz[:, :hd] = di * i * (1.0 - i)
            dz[:, hd:2 * hd] = df * f * (1.0 - f)
            dz[:, 2 * hd:3 * hd] = do * o * (1.0 - o)
            dz[:, 3 * hd:] = dg * (1.0 - g * g)
            dh_next = dz @ self.Uh.T
        H_prev = np.concatenate([np.zeros((B, 1, hd)), H[:, :-1]], axis=1)
        dZ_flat = dZ.reshape(B * T, 4 * hd)
        self.dWx += X.reshape(B * T, d).T @ dZ_flat
        self.dUh += H_prev.reshape(B * T, hd).T @ dZ_flat
        self.db += dZ_flat.sum(axis=0)
        self._cache = None
        return (dZ_flat @ self.Wx.T).reshape(B, T, d)


class DenseLayer:
    """Fully connected layer with identity or relu activation."""

    def __init__(self, input_dim: int, output_dim: int, activation: str = "identity",
                 rng: np.random.Generator | None = None):
        if activation not in ("identity", "relu"):
            raise DataError(f"unsupported activation {activation!r}")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.activation = activation
        rng = rng if rng is not None else np.random.default_rng(0)
        self.W = rng.uniform(-1.0, 1.0, size=(output_dim, input_dim)) / np.sqrt(input_dim)
        self.b = np.zeros(output_dim)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._cache = None

    def params(self) -> list[np.ndarray]:
        return [self.W, self.b]

    def grads(self) -> list[np.ndarray]:
        return [self.dW, self.db]

    def zero_grads(self) -> None:
        self.dW[...] = 0.0
        self.db[...] = 0.0

    def forward(self, X: np.ndarray, keep_cache: bool = True) -> np.ndarray:
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DataError(f"dense forward expects (N, {self.input_dim}) input")
        pre = X @ self.W.T + self.b
        out = np.maximum(pre, 0.0) if self.activation == "relu" else pre
        if keep_cache:
            self._cache = (X, pre)
        return out

    def backward(self, dY: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise DataError("dense backward called without a cached forward pass")
        X, pre = self._cache
        dpre = dY * (pre > 0.0) if self.activation == "relu" else dY
        self.dW += dpre.T @ X
        self.db += dpre.sum(axis=0)
        self._cache = None
        return dpre @ self.W


def lstm_cell_step(x, h_prev, c_prev, layer: LstmLayer):
    """Functional single-step wrapper around LstmLayer.step."""
    return layer.step(np.asarray(x, dtype=float), np.asarray(h_prev, dtype=float),
                      np.asarray(c_prev, dtype=float))


def lstm_forward(seq: np.ndarray, layers: list[LstmLayer]) -> np.ndarray:
    """Many-to-one forward of a single (m, d) sequence through a layer stack.

    Each layer consumes the full hidden sequence of the one below; only the
    last timestep's top hidden state is returned.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.ndim != 2 or seq.shape[0] < 1:
        raise DataError("sequence must be (m, d) with m >= 1")
    out = seq[None, :, :]
    for layer in layers:
        out = layer.forward(out, keep_cache=False)
    return out[0, -1, :]
