"""Neural layers with exact analytic gradients, on plain numpy.

Every layer exposes ``forward(x, ...) -> (y, cache)`` and
``backward(dy, cache) -> (dx, grads)`` where ``grads`` maps local parameter
names to arrays shaped like the parameters.  Batch layouts: sequences are
(B, T, D), images are (B, H, W, C).
"""

from __future__ import annotations

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {kind!r}")


def _dact_from_out(out: np.ndarray, kind: str) -> np.ndarray:
    # Derivative expressed through the activation output (valid for both).
    if kind == "relu":
        return (out > 0.0).astype(out.dtype)
    return 1.0 - out * out


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Dense:
    def __init__(self, rng: np.random.Generator, d_in: int, d_out: int):
        self.params = {
            "W": glorot_uniform(rng, (d_in, d_out), d_in, d_out),
            "b": np.zeros(d_out),
        }

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        return x @ self.params["W"] + self.params["b"], {"x": x}

    def backward(self, dy: np.ndarray, cache: dict) -> tuple[np.ndarray, dict]:
        x = cache["x"]
        return dy @ self.params["W"].T, {"W": x.T @ dy, "b": dy.sum(axis=0)}


class Dropout:
    """Inverted dropout: scales kept units by 1/(1-q) so inference needs no
    rescaling; inference mode is the identity."""

    def __init__(self, q: float):
        self.q = q
        self.params: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None) -> tuple[np.ndarray, dict]:
        if not train or self.q == 0.0:
            return x, {"mask": None}
        mask = (rng.random(x.shape) >= self.q) / (1.0 - self.q)
        return x * mask, {"mask": mask}

    def backward(self, dy: np.ndarray, cache: dict) -> tuple[np.ndarray, dict]:
        mask = cache["mask"]
        return (dy if mask is None else dy * mask), {}


class SimpleRNN:
    """Fully-connected recurrent cell; returns the last hidden state."""

    def __init__(self, rng: np.random.Generator, d: int, n: int, activation: str = "relu"):
        self.d, self.n, self.activation = d, n, activation
        self.params = {
            "W": glorot_uniform(rng, (d + n, n), d + n, n),
            "b": np.zeros(n),
        }

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        B, T, _ = x.shape
        hs = np.zeros((B, T + 1, self.n))
        for t in range(T):
            za = np.concatenate([x[:, t, :], hs[:, t, :]], axis=1) @ self.params["W"] + self.params["b"]
            hs[:, t + 1, :] = _act(za, self.activation)
        return hs[:, -1, :], {"x": x, "hs": hs}

    def backward(self, dy: np.ndarray, cache: dict) -> tuple[np.ndarray, dict]:
        x, hs = cache["x"], cache["hs"]
        B, T, _ = x.shape
        W = self.params["W"]
        dW = np.zeros_like(W)
        db = np.zeros_like(self.params["b"])
        dx = np.zeros_like(x)
        dh = dy
        for t in range(T - 1, -1, -1):
            dz = dh * _dact_from_out(hs[:, t + 1, :], self.activation)
            inp = np.concatenate([x[:, t, :], hs[:, t, :]], axis=1)
            dW += inp.T @ dz
            db += dz.sum(axis=0)
            dx[:, t, :] = dz @ W[: self.d].T
            dh = dz @ W[self.d :].T
        return dx, {"W": dW, "b": db}


class LSTM:
    """LSTM cell, gates packed [input, forget, candidate, output]."""

    def __init__(self, rng: np.random.Generator, d: int, n: int, activation: str = "relu"):
        self.d, self.n, self.activation = d, n, activation
        self.params = {
            "W": glorot_uniform(rng, (d + n, 4 * n), d + n, 4 * n),
            "b": np.zeros(4 * n),
        }

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        B, T, _ = x.shape
        n = self.n
        hs = np.zeros((B, T + 1, n))
        cs = np.zeros((B, T + 1, n))
        gates = np.zeros((B, T, 4 * n))
        hcs = np.zeros((B, T, n))
        for t in range(T):
            a = np.concatenate([x[:, t, :], hs[:, t, :]], axis=1) @ self.params["W"] + self.params["b"]
            i = sigmoid(a[:, :n])
            f = sigmoid(a[:, n : 2 * n])
            g = _act(a[:, 2 * n : 3 * n], self.activation)
            o = sigmoid(a[:, 3 * n :])
            cs[:, t + 1, :] = f * cs[:, t, :] + i * g
            hcs[:, t, :] = _act(cs[:, t + 1, :], self.activation)
            hs[:, t + 1, :] = o * hcs[:, t, :]
            gates[:, t, :] = np.concatenate([i, f, g, o], axis=1)
        return hs[:, -1, :], {"x": x, "hs": hs, "cs": cs, "gates": gates, "hcs": hcs}

    def backward(self, dy: np.ndarray, cache: dict) -> tuple[np.ndarray, dict]:
        x, hs, cs, gates, hcs = cache["x"], cache["hs"], cache["cs"], cache["gates"], cache["hcs"]
        B, T, _ = x.shape
        n = self.n
        W = self.params["W"]
        dW = np.zeros_like(W)
        db = np.zeros_like(self.params["b"])
        dx = np.zeros_like(x)
        dh = dy
        dc = np.zeros((B, n))
        for t in range(T - 1, -1, -1):
            i = gates[:, t, :n]
            f = gates[:, t, n : 2 * n]
            g = gates[:, t, 2 * n : 3 * n]
            o = gates[:, t, 3 * n :]
            hc = hcs[:, t, :]
            do = dh * hc
            dc = dc + dh * o * _dact_from_out(hc, self.activation)
            di = dc * g
            df = dc * cs[:, t, :]
            dg = dc * i
            da = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * _dact_from_out(g, self.activation),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            inp = np.concatenate([x[:, t, :], hs[:, t, :]], axis=1)
            dW += inp.T @ da
            db += da.sum(axis=0)
            dx[:, t, :] = da @ W[: self.d].T
            dh = da @ W[self.d :].T
            dc = dc * f
        return dx, {"W": dW, "b": db}


class GRU:
    """GRU cell, gates packed [update, reset, candidate].

    h_t = z * h_{t-1} + (1 - z) * h~, with the reset gate applied to the
    recurrent term of the candidate.
    """

    def __init__(self, rng: np.random.Generator, d: int, n: int, activation: str = "relu"):
        self.d, self.n, self.activation = d, n, activation
        self.params = {
            "W": glorot_uniform(rng, (d + n, 3 * n), d + n, 3 * n),
            "b": np.zeros(3 * n),
        }

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        B, T, _ = x.shape
        n, d = self.n, self.d
        W, b = self.params["W"], self.params["b"]
        hs = np.zeros((B, T + 1, n))
        zs = np.zeros((B, T, n))
        rs = np.zeros((B, T, n))
        cands = np.zeros((B, T, n))
        for t in range(T):
            xt, hp = x[:, t, :], hs[:, t, :]
            a_zr = np.concatenate([xt, hp], axis=1) @ W[:, : 2 * n] + b[: 2 * n]
            z = sigmoid(a_zr[:, :n])
            r = sigmoid(a_zr[:, n:])
            a_c = xt @ W[:d, 2 * n :] + (r * hp) @ W[d:, 2 * n :] + b[2 * n :]
            cand = _act(a_c, self.activation)
            hs[:, t + 1, :] = z * hp + (1.0 - z) * cand
            zs[:, t, :], rs[:, t, :], cands[:, t, :] = z, r, cand
        return hs[:, -1, :], {"x": x, "hs": hs, "zs": zs, "rs": rs, "cands": cands}

    def backward(self, dy: np.ndarray, cache: dict) -> tuple[np.ndarray, dict]:
        x, hs, zs, rs, cands = cache["x"], cache["hs"], cache["zs"], cache["rs"], cache["cands"]
        B, T, _ = x.shape
        n, d = self.n, self.d
        W = self.params["W"]
        dW = np.zeros_like(W)
        db = np.zeros_like(self.params["b"])
        dx = np.zeros_like(x)
        dh = dy
        for t in range(T - 1, -1, -1):
            xt, hp = x[:, t, :], hs[:, t, :]
            z, r, cand = zs[:, t, :], rs[:, t, :], cands[:, t, :]
            dz = dh * (hp - cand)
            dcand = dh * (1.0 - z)
            dhp = dh * z
            da_c = dcand * _dact_from_out(cand, self.activation)
            dW[:d, 2 * n :] += xt.T @ da_c
            dW[d:, 2 * n :] += (r * hp).T @ da_c
            db[2 * n :] += da_c.sum(axis=0)
            drh = da_c @ W[d:, 2 * n :].T
            dr = drh * hp
            dhp = dhp + drh * r
            da_zr = np.concatenate([dz * z * (1.0 - z), dr * r * (1.0 - r)], axis=1)
            inp = np.concatenate([xt, hp], axis=1)
            dW[:, : 2 * n] += inp.T @ da_zr
            db[: 2 * n] += da_zr.sum(axis=0)
            dx[:, t, :] = da_zr @ W[:d, : 2 * n].T + da_c @ W[:d, 2 * n :].T
            dh = dhp + da_zr @ W[d:, : 2 * n].T
        return dx, {"W": dW, "b": db}


class BiLSTM:
    """Bidirectional LSTM: concatenates the last hidden states of a
    forward-time and a backward-time pass (output width 2n)."""

    def __init__(self, rng: np.random.Generator, d: int, n: int, activation: str = "relu"):
        self.n = n
        self.fwd = LSTM(rng, d, n, activation)
        self.bwd = LSTM(rng, d, n, activation)
        self.params = {
            "fwd.W": self.fwd.params["W"],
            "fwd.b": self.fwd.params["b"],
            "bwd.W": self.bwd.params["W"],
            "bwd.b": self.bwd.params["b"],
        }

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        hf, cf = self.fwd.forward(x)
        hb, cb = self.bwd.forward(x[:, ::-1, :])
        return np.concatenate([hf, hb], axis=1), {"cf": cf, "cb": cb}

    def backward(self, dy: np.ndarray, cache: dict) -> tuple[np.ndarray, dict]:
        n = self.n
        dxf, gf = self.fwd.backward(dy[:, :n], cache["cf"])
        dxb, gb = self.bwd.backward(dy[:, n:], cache["cb"])
        dx = dxf + dxb[:, ::-1, :]
        return dx, {"fwd.W": gf["W"], "fwd.b": gf["b"], "bwd.W": gb["W"], "bwd.b": gb["b"]}


class ReLU:
    params: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        y = np.maximum(x, 0.0)
        return y, {"y": y}

    def backward(self, dy: np.ndarray, cache: dict) -> tuple[np.ndarray, dict]:
        return dy * (cache["y"] > 0.0), {}


class Conv2D:
    """Valid 2D cross-correlation, kernel (kh, kw, c_in, c_out).

    Patches are gathered once per pass (im2col) so both directions run as
    a single large matrix product.
    """

    def __init__(self, rng: np.random.Generator, kh: int, kw: int, c_in: int, c_out: int):
        self.kh, self.kw = kh, kw
        self.c_in, self.c_out = c_in, c_out
        fan_in = kh * kw * c_in
        fan_out = kh * kw * c_out
        self.params = {
            "K": glorot_uniform(rng, (kh, kw, c_in, c_out), fan_in, fan_out),
            "b": np.zeros(c_out),
        }

    def _patches(self, x: np.ndarray) -> np.ndarray:
        B, H, W, C = x.shape
        Ho, Wo = H - self.kh + 1, W - self.kw + 1
        windows = np.lib.stride_tricks.sliding_window_view(x, (self.kh, self.kw), axis=(1, 2))
        # windows: (B, Ho, Wo, C, kh, kw) -> rows ordered (kh, kw, C)
        return windows.transpose(0, 1, 2, 4, 5, 3).reshape(B * Ho * Wo, self.kh * self.kw * C)

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        K, b = self.params["K"], self.params["b"]
        B, H, W, _ = x.shape
        Ho, Wo = H - self.kh + 1, W - self.kw + 1
        patches = self._patches(x)
        out = patches @ K.reshape(-1, self.c_out) + b
        return out.reshape(B, Ho, Wo, self.c_out), {"patches": patches, "shape": x.shape}

    def backward(self, dy: np.ndarray, cache: dict, needs_dx: bool = True) -> tuple[np.ndarray | None, dict]:
        K = self.params["K"]
        B, H, W, C = cache["shape"]
        _, Ho, Wo, _ = dy.shape
        dy_flat = dy.reshape(-1, self.c_out)
        dK = (cache["patches"].T @ dy_flat).reshape(K.shape)
        grads = {"K": dK, "b": dy_flat.sum(axis=0)}
        if not needs_dx:
            return None, grads
        dpatches = (dy_flat @ K.reshape(-1, self.c_out).T).reshape(B, Ho, Wo, self.kh, self.kw, C)
        dx = np.zeros((B, H, W, C))
        for i in range(self.kh):
            for j in range(self.kw):
                dx[:, i : i + Ho, j : j + Wo, :] += dpatches[:, :, :, i, j, :]
        return dx, grads


class MaxPool2:
    """2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
    Gradient routes to the first maximum in each window."""

    params: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        B, H, W, C = x.shape
        Ho, Wo = H // 2, W // 2
        cropped = x[:, : Ho * 2, : Wo * 2, :]
        windows = cropped.reshape(B, Ho, 2, Wo, 2, C).transpose(0, 1, 3, 5, 2, 4).reshape(B, Ho, Wo, C, 4)
        idx = windows.argmax(axis=-1)
        y = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
        return y, {"idx": idx, "shape": x.shape}

    def backward(self, dy: np.ndarray, cache: dict) -> tuple[np.ndarray, dict]:
        B, H, W, C = cache["shape"]
        idx = cache["idx"]
        Ho, Wo = H // 2, W // 2
        scatter = np.zeros((B, Ho, Wo, C, 4))
        np.put_along_axis(scatter, idx[..., None], dy[..., None], axis=-1)
        dx = np.zeros((B, H, W, C))
        dx[:, : Ho * 2, : Wo * 2, :] = (
            scatter.reshape(B, Ho, Wo, C, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(B, Ho * 2, Wo * 2, C)
        )
        return dx, {}


class GlobalAvgPool:
    params: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        return x.mean(axis=(1, 2)), {"shape": x.shape}

    def backward(self, dy: np.ndarray, cache: dict) -> tuple[np.ndarray, dict]:
        B, H, W, C = cache["shape"]
        dx = np.broadcast_to(dy[:, None, None, :] / (H * W), (B, H, W, C)).copy()
        return dx, {}
