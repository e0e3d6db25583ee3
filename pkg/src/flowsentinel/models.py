"""The two classifier architectures, built declaratively over 20 flow features.

CNN:  conv(32, k=3) -> relu -> pool(2) -> conv(64, k=3) -> relu -> pool(2)
      -> flatten -> dense(output_units)
      consuming the feature vector as a 1-channel, length-20 signal
      (lengths 20 -> 18 -> 9 -> 7 -> 3, flatten 192).

LSTM: lstm(64, sequences) -> dropout -> lstm(64, last) -> dropout
      -> dense(output_units)
      consuming the feature vector as a 20-step univariate sequence.

Binary mode uses a single sigmoid unit; grouped/multi use a softmax head.
``forward`` returns probabilities and caches the pre-activation logits so
the training loop can feed the fused loss gradient straight to the head.

Model files (FSNN) are self-contained for deployment: besides the layer
parameters they carry the feature list, class names, and the train-fitted
normalizer, guarded by a CRC-32 of everything after the magic.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data.labels import ClassificationMode
from .data.normalize import FeatureStats
from .errors import CorruptModelError, InvalidSpecError, ShapeMismatchError
from .nn import LSTM, Conv1D, Dense, Dropout, Flatten, MaxPool1D, ReLU, sigmoid, softmax
from .nn.tensor import active_dtype
from .rng import Rng

MAGIC = b"FSNN"
FORMAT_VERSION = 1

ARCHITECTURES = ("cnn", "lstm")

CNN_INPUT_LENGTH = 20
CNN_CONV_FILTERS = (32, 64)
CNN_KERNEL_SIZE = 3
CNN_POOL_SIZE = 2
LSTM_UNITS = 64
DEFAULT_DROPOUT = 0.2


@dataclass(frozen=True)
class ModelSpec:
    architecture: str  # "cnn" | "lstm"
    mode: ClassificationMode
    input_features: int = CNN_INPUT_LENGTH
    dropout_rate: float = DEFAULT_DROPOUT

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise InvalidSpecError(f"unknown architecture {self.architecture!r}")
        if self.input_features < 1:
            raise InvalidSpecError("input_features must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidSpecError("dropout_rate must be in [0, 1)")

    @property
    def output_units(self) -> int:
        return 1 if self.mode is ClassificationMode.BINARY else self.mode.class_count

    @property
    def output_activation(self) -> str:
        return "sigmoid" if self.mode is ClassificationMode.BINARY else "softmax"

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "mode": self.mode.value,
            "input_features": self.input_features,
            "dropout_rate": self.dropout_rate,
            "output_units": self.output_units,
            "output_activation": self.output_activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(
            architecture=d["architecture"],
            mode=ClassificationMode(d["mode"]),
            input_features=d["input_features"],
            dropout_rate=d["dropout_rate"],
        )


@dataclass
class Model:
    spec: ModelSpec
    layers: list
    rng_seed: int
    feature_names: list = field(default_factory=list)
    class_names: list = field(default_factory=list)
    normalizer: FeatureStats | None = None
    normalizer_scheme: str = "minmax"

    def parameters(self) -> list:
        params = []
        for layer in self.layers:
            params.extend(layer.parameters())
        return params

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def bind_dropout_rng(self, rng: Rng) -> None:
        for layer in self.layers:
            if isinstance(layer, Dropout):
                layer.bind_rng(rng)

    def _frame(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch)
        if batch.ndim == 1:
            batch = batch[None, :]
        if batch.ndim != 2 or batch.shape[1] != self.spec.input_features:
            raise ShapeMismatchError(
                f"expected [batch, {self.spec.input_features}] input, got {batch.shape}"
            )
        if self.spec.architecture == "cnn":
            return batch[:, None, :]  # one channel, length-20 signal
        return batch[:, :, None]  # 20 steps, one input dimension

    def forward(self, batch, training: bool = False) -> np.ndarray:
        """Probabilities: [B, 1] in (0,1) for binary, softmax rows otherwise."""
        h = self._frame(batch).astype(active_dtype(), copy=False)
        for layer in self.layers:
            h = layer.forward(h, training=training)
        self.logits = h
        if self.spec.output_activation == "sigmoid":
            return sigmoid(h)
        return softmax(h, axis=-1)

    def backward_from_logits(self, grad_logits: np.ndarray) -> None:
        grad = grad_logits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def predict(self, batch) -> np.ndarray:
        """Class indices: binary thresholds at p >= 0.5, otherwise argmax
        (ties resolve to the lowest index)."""
        probs = self.forward(batch, training=False)
        if self.spec.mode is ClassificationMode.BINARY:
            return (probs[:, 0] >= 0.5).astype(np.int64)
        return np.argmax(probs, axis=1)

    def confidences(self, batch) -> np.ndarray:
        probs = self.forward(batch, training=False)
        if self.spec.mode is ClassificationMode.BINARY:
            p = probs[:, 0]
            return np.where(p >= 0.5, p, 1.0 - p)
        return probs.max(axis=1)


def build(spec: ModelSpec, seed: int = 0) -> Model:
    """Instantiate a model with Glorot-uniform weights, deterministic in seed."""
    rng = Rng(seed).spawn("init")
    if spec.architecture == "cnn":
        length = spec.input_features
        layers = []
        in_channels = 1
        for i, filters in enumerate(CNN_CONV_FILTERS):
            conv = Conv1D(in_channels, filters, CNN_KERNEL_SIZE, rng.spawn(f"conv{i}"), name=f"conv{i}")
            layers.extend([conv, ReLU(), MaxPool1D(CNN_POOL_SIZE)])
            length = conv.output_length(length)
            if length < 1:
                raise InvalidSpecError(f"conv{i} output collapsed to {length}")
            length //= CNN_POOL_SIZE
            if length < 1:
                raise InvalidSpecError(f"pool{i} output collapsed to {length}")
            in_channels = filters
        flatten_len = in_channels * length
        if spec.input_features == CNN_INPUT_LENGTH:
            assert flatten_len == 192, f"shape chain broken: flatten {flatten_len}"
        layers.append(Flatten())
        layers.append(Dense(flatten_len, spec.output_units, rng.spawn("head"), name="head"))
    else:
        layers = [
            LSTM(1, LSTM_UNITS, rng.spawn("lstm0"), return_sequences=True, name="lstm0"),
            Dropout(spec.dropout_rate),
            LSTM(LSTM_UNITS, LSTM_UNITS, rng.spawn("lstm1"), return_sequences=False, name="lstm1"),
            Dropout(spec.dropout_rate),
            Dense(LSTM_UNITS, spec.output_units, rng.spawn("head"), name="head"),
        ]
    return Model(spec=spec, layers=layers, rng_seed=seed)


def save(model: Model, path) -> None:
    """Write an FSNN model file (see module docstring for the layout)."""
    header = {
        "spec": model.spec.to_dict(),
        "seed": model.rng_seed,
        "features": list(model.feature_names),
        "classes": list(model.class_names),
        "normalizer": model.normalizer.to_dict() if model.normalizer else None,
        "normalizer_scheme": model.normalizer_scheme,
    }
    header_raw = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = bytearray()
    payload += struct.pack("<B", FORMAT_VERSION)
    payload += struct.pack("<I", len(header_raw))
    payload += header_raw
    params = model.parameters()
    payload += struct.pack("<I", len(params))
    for p in params:
        name_raw = p.name.encode("utf-8")
        payload += struct.pack("<H", len(name_raw))
        payload += name_raw
        payload += struct.pack("<B", p.value.ndim)
        payload += struct.pack(f"<{p.value.ndim}I", *p.value.shape)
        payload += np.ascontiguousarray(p.value, dtype="<f4").tobytes()
    crc = zlib.crc32(bytes(payload))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes(payload))
        fh.write(struct.pack("<I", crc))


def load(path) -> Model:
    blob = Path(path).read_bytes()
    if len(blob) < 13 or blob[:4] != MAGIC:
        raise CorruptModelError(f"{path}: bad magic")
    payload, (stored_crc,) = blob[4:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) != stored_crc:
        raise CorruptModelError(f"{path}: checksum mismatch")
    try:
        offset = 0
        (version,) = struct.unpack_from("<B", payload, offset)
        offset += 1
        if version != FORMAT_VERSION:
            raise CorruptModelError(f"{path}: unsupported version {version}")
        (header_len,) = struct.unpack_from("<I", payload, offset)
        offset += 4
        header = json.loads(payload[offset:offset + header_len].decode("utf-8"))
        offset += header_len
        spec = ModelSpec.from_dict(header["spec"])
        model = build(spec, seed=header.get("seed", 0))
        model.feature_names = list(header.get("features") or [])
        model.class_names = list(header.get("classes") or [])
        if header.get("normalizer"):
            model.normalizer = FeatureStats.from_dict(header["normalizer"])
        model.normalizer_scheme = header.get("normalizer_scheme", "minmax")
        (n_params,) = struct.unpack_from("<I", payload, offset)
        offset += 4
        params = model.parameters()
        if n_params != len(params):
            raise CorruptModelError(f"{path}: expected {len(params)} parameters, found {n_params}")
        for p in params:
            (name_len,) = struct.unpack_from("<H", payload, offset)
            offset += 2
            name = payload[offset:offset + name_len].decode("utf-8")
            offset += name_len
            if name != p.name:
                raise CorruptModelError(f"{path}: parameter order mismatch at {name!r}")
            (ndim,) = struct.unpack_from("<B", payload, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}I", payload, offset)
            offset += 4 * ndim
            if shape != p.value.shape:
                raise CorruptModelError(f"{path}: shape mismatch for {name!r}")
            count = int(np.prod(shape))
            values = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
            offset += 4 * count
            p.value[...] = values.reshape(shape).astype(p.value.dtype)
        if offset != len(payload):
            raise CorruptModelError(f"{path}: {len(payload) - offset} trailing bytes")
    except (struct.error, UnicodeDecodeError, KeyError, json.JSONDecodeError) as exc:
        raise CorruptModelError(f"{path}: malformed payload ({exc})") from exc
    return model
