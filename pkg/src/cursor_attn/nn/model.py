"""Model assembly: specs, forward/loss/predict, serialization.

Architectures:

* ``simplernn`` / ``lstm`` / ``gru`` — recurrent layer over (50, 2) input,
  last hidden state -> dropout -> dense(1) -> sigmoid.
* ``blstm`` — same with a bidirectional LSTM (readout width 2n).
* ``smallconv`` — 3x3x8 conv + ReLU -> maxpool -> 3x3x16 conv + ReLU ->
  maxpool -> global average pool -> dense(1) -> sigmoid, over (90, 128, 3)
  downscaled renders.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InvalidValueError, ShapeMismatchError
from ..seeding import derive
from .layers import (
    BiLSTM,
    Conv2D,
    Dense,
    Dropout,
    GlobalAvgPool,
    GRU,
    LSTM,
    MaxPool2,
    ReLU,
    SimpleRNN,
    sigmoid,
)

SIMPLERNN = "simplernn"
LSTM_ARCH = "lstm"
BLSTM = "blstm"
GRU_ARCH = "gru"
SMALLCONV = "smallconv"

RECURRENT_ARCHS = (SIMPLERNN, LSTM_ARCH, BLSTM, GRU_ARCH)
ARCHS = RECURRENT_ARCHS + (SMALLCONV,)

HIDDEN_GRID = tuple(range(16, 129, 8))
DROP_GRID = (0.5, 0.4, 0.3, 0.2, 0.1)

BCE_EPS = 1e-7

_MODEL_FORMAT = "cursor-attn-model"
_MODEL_VERSION = 1


@dataclass(frozen=True, slots=True)
class ModelSpec:
    arch: str
    input_shape: tuple[int, ...]
    hidden_n: int | None = None
    drop_rate: float = 0.0
    seed: int = 0
    activation: str = "relu"


def _validate_spec(spec: ModelSpec) -> None:
    if spec.arch not in ARCHS:
        raise InvalidValueError(f"unknown architecture {spec.arch!r}; expected one of {ARCHS}")
    if spec.arch in RECURRENT_ARCHS:
        if len(spec.input_shape) != 2:
            raise InvalidValueError(f"recurrent input shape must be (timesteps, features), got {spec.input_shape}")
        if spec.hidden_n not in HIDDEN_GRID:
            raise InvalidValueError(f"hidden_n must be one of {HIDDEN_GRID}, got {spec.hidden_n}")
        if not any(abs(spec.drop_rate - q) < 1e-9 for q in DROP_GRID):
            raise InvalidValueError(f"drop_rate must be one of {DROP_GRID}, got {spec.drop_rate}")
    else:
        if len(spec.input_shape) != 3:
            raise InvalidValueError(f"conv input shape must be (height, width, channels), got {spec.input_shape}")
        if spec.input_shape[0] < 8 or spec.input_shape[1] < 8:
            raise InvalidValueError(f"conv input {spec.input_shape} too small for two pooled 3x3 stages")


class Model:
    def __init__(self, spec: ModelSpec, layers: list[tuple[str, object]]):
        self.spec = spec
        self.layers = layers
        self.mode = "infer"
        self.rng = np.random.default_rng(derive(spec.seed, "dropout"))

    # -- parameters ---------------------------------------------------------

    def params(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for name, layer in self.layers:
            for pname, arr in layer.params.items():
                out[f"{name}.{pname}"] = arr
        return out

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params().items()}

    def set_params(self, values: dict[str, np.ndarray]) -> None:
        params = self.params()
        if set(values) != set(params):
            raise ShapeMismatchError("parameter names do not match the model")
        for k, arr in params.items():
            if values[k].shape != arr.shape:
                raise ShapeMismatchError(f"parameter {k}: expected shape {arr.shape}, got {values[k].shape}")
            arr[...] = values[k]

    # -- passes -------------------------------------------------------------

    def _check_batch(self, x: np.ndarray) -> None:
        if x.ndim != len(self.spec.input_shape) + 1 or x.shape[1:] != self.spec.input_shape:
            raise ShapeMismatchError(
                f"batch shape {x.shape} does not match input shape {self.spec.input_shape}"
            )

    def _run(self, x: np.ndarray, train: bool, rng: np.random.Generator) -> tuple[np.ndarray, list]:
        self._check_batch(x)
        caches = []
        out = x
        for name, layer in self.layers:
            if isinstance(layer, Dropout):
                out, cache = layer.forward(out, train, rng)
            else:
                out, cache = layer.forward(out)
            caches.append(cache)
        return out[:, 0], caches  # logits

    def forward(self, x: np.ndarray, train: bool | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
        """Per-sample probabilities in (0, 1)."""
        if train is None:
            train = self.mode == "train"
        x = np.asarray(x, dtype=np.float64)
        if not train and len(x) > 64:
            # Inference is per-sample independent; chunk to bound im2col memory.
            return np.concatenate([self.forward(x[i : i + 64], train=False) for i in range(0, len(x), 64)])
        logits, _ = self._run(x, train, rng or self.rng)
        return sigmoid(logits)

    def loss_and_grads(
        self,
        x: np.ndarray,
        y: np.ndarray,
        train: bool | None = None,
        rng: np.random.Generator | None = None,
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean binary cross-entropy and its exact parameter gradients.

        Probabilities are clamped to [1e-7, 1 - 1e-7] inside the loss; the
        gradient is zero where the clamp is active, matching the clamped
        loss exactly.
        """
        if train is None:
            train = self.mode == "train"
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (x.shape[0],):
            raise ShapeMismatchError(f"labels shape {y.shape} does not match batch size {x.shape[0]}")
        logits, caches = self._run(x, train, rng or self.rng)
        p = sigmoid(logits)
        pc = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
        loss = float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))

        inside = (p > BCE_EPS) & (p < 1.0 - BCE_EPS)
        dlogits = np.where(inside, p - y, 0.0) / x.shape[0]

        grads: dict[str, np.ndarray] = {}
        dout = dlogits[:, None]
        for pos, ((name, layer), cache) in enumerate(zip(reversed(self.layers), reversed(caches))):
            if isinstance(layer, Conv2D):
                # The input gradient of the first layer has no consumer.
                dout, layer_grads = layer.backward(dout, cache, needs_dx=pos < len(self.layers) - 1)
            else:
                dout, layer_grads = layer.backward(dout, cache)
            for pname, g in layer_grads.items():
                grads[f"{name}.{pname}"] = g
        return loss, grads

    def predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Hard labels (1 iff p > 0.5) and the underlying probabilities."""
        p = self.forward(x, train=False)
        return (p > 0.5).astype(np.int64), p


def init_model(spec: ModelSpec) -> Model:
    """Build a model with Glorot-uniform weights and zero biases.

    Parameter draws come from a generator seeded by spec.seed in a fixed
    layer order, so equal seeds give bit-identical parameters.
    """
    _validate_spec(spec)
    rng = np.random.default_rng(derive(spec.seed, "init"))
    layers: list[tuple[str, object]] = []
    if spec.arch in RECURRENT_ARCHS:
        _, d = spec.input_shape
        n = spec.hidden_n
        cell_cls = {SIMPLERNN: SimpleRNN, LSTM_ARCH: LSTM, GRU_ARCH: GRU, BLSTM: BiLSTM}[spec.arch]
        cell = cell_cls(rng, d, n, spec.activation)
        readout = 2 * n if spec.arch == BLSTM else n
        layers.append(("cell", cell))
        layers.append(("drop", Dropout(spec.drop_rate)))
        layers.append(("head", Dense(rng, readout, 1)))
    else:
        c_in = spec.input_shape[2]
        layers.append(("conv1", Conv2D(rng, 3, 3, c_in, 8)))
        layers.append(("relu1", ReLU()))
        layers.append(("pool1", MaxPool2()))
        layers.append(("conv2", Conv2D(rng, 3, 3, 8, 16)))
        layers.append(("relu2", ReLU()))
        layers.append(("pool2", MaxPool2()))
        layers.append(("gap", GlobalAvgPool()))
        layers.append(("head", Dense(rng, 16, 1)))
    return Model(spec, layers)


# -- serialization -----------------------------------------------------------

def save_model(model: Model, path) -> None:
    params = model.params()
    names = sorted(params)
    header = {
        "format": _MODEL_FORMAT,
        "version": _MODEL_VERSION,
        "spec": asdict(model.spec),
        "params": [{"name": k, "shape": list(params[k].shape)} for k in names],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        for k in names:
            blob = params[k].astype("<f8").tobytes()
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != _MODEL_FORMAT or header.get("version") != _MODEL_VERSION:
            raise InvalidValueError(f"unsupported model file {path}")
        sd = header["spec"]
        sd["input_shape"] = tuple(sd["input_shape"])
        spec = ModelSpec(**sd)
        model = init_model(spec)
        values = {}
        for meta in header["params"]:
            (size,) = struct.unpack("<Q", fh.read(8))
            arr = np.frombuffer(fh.read(size), dtype="<f8").reshape(meta["shape"]).astype(np.float64)
            values[meta["name"]] = arr
        model.set_params(values)
    return model
