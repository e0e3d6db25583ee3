"""Neural-network layers with explicit forward/backward passes.

Conventions shared by every layer:

* Batched layouts: dense input is ``[B, N]``, convolutional input is
  ``[B, C, L]``, recurrent input is ``[B, T, D]``. A single sample may be
  passed without the batch axis and the output is unbatched to match.
* ``forward`` caches whatever ``backward`` needs; ``backward`` consumes the
  cache, accumulates parameter gradients in place (``param.grad += ...``),
  returns the gradient w.r.t. the layer input, and clears the cache.
  Calling ``backward`` twice, or before ``forward``, raises
  :class:`MissingCacheError`.
* Weight init is Glorot-uniform, limit sqrt(6 / (fan_in + fan_out)); biases
  start at zero except the LSTM forget gate, which starts at 1.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import (
    EmptySequenceError,
    InvalidRateError,
    MissingCacheError,
    ShapeMismatchError,
)
from ..rng import Rng
from . import activations as act
from .tensor import active_dtype


class Parameter:
    """A trainable tensor with its gradient and Adam moment accumulators."""

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.ascontiguousarray(value)
        self.grad = np.zeros_like(self.value)
        self.adam_m = np.zeros_like(self.value)
        self.adam_v = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self) -> int:
        return self.value.size

    def zero_grad(self) -> None:
        self.grad.fill(0)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def glorot_uniform(rng: Rng, shape, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(size=shape, low=-limit, high=limit).astype(dtype)


class Layer:
    """Base class: parameter bookkeeping plus the cache discipline."""

    def __init__(self):
        self._cache = None

    def parameters(self) -> list:
        return []

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _take_cache(self):
        if self._cache is None:
            raise MissingCacheError(f"{type(self).__name__}.backward called without a cached forward")
        cache, self._cache = self._cache, None
        return cache


def _ensure_batched(x: np.ndarray, sample_rank: int):
    """Add a batch axis if ``x`` is a single sample; report whether we did."""
    x = np.asarray(x)
    if x.ndim == sample_rank:
        return x[None, ...], True
    if x.ndim == sample_rank + 1:
        return x, False
    raise ShapeMismatchError(f"expected rank {sample_rank} or {sample_rank + 1} input, got rank {x.ndim}")


class Dense(Layer):
    """Affine map: out = x . W^T + b with W of shape [out, in]."""

    def __init__(self, in_features: int, out_features: int, rng: Rng, name: str = "dense", dtype=None):
        super().__init__()
        dtype = dtype or active_dtype()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(
            f"{name}/W", glorot_uniform(rng, (out_features, in_features), in_features, out_features, dtype)
        )
        self.bias = Parameter(f"{name}/b", np.zeros(out_features, dtype=dtype))

    def parameters(self):
        return [self.weight, self.bias]

    def forward(self, x, training=False):
        x, squeeze = _ensure_batched(x, 1)
        if x.shape[1] != self.in_features:
            raise ShapeMismatchError(f"dense expects {self.in_features} inputs, got {x.shape[1]}")
        out = x @ self.weight.value.T + self.bias.value
        self._cache = (x, squeeze)
        return out[0] if squeeze else out

    def backward(self, grad_out):
        x, squeeze = self._take_cache()
        grad_out = np.asarray(grad_out)
        if squeeze:
            grad_out = grad_out[None, ...]
        if grad_out.shape != (x.shape[0], self.out_features):
            raise ShapeMismatchError(
                f"dense grad shape {grad_out.shape} != {(x.shape[0], self.out_features)}"
            )
        self.weight.grad += grad_out.T @ x
        self.bias.grad += grad_out.sum(axis=0)
        grad_in = grad_out @ self.weight.value
        return grad_in[0] if squeeze else grad_in


class Conv1D(Layer):
    """Valid cross-correlation, stride 1: out[b,o,t] = b[o] + sum_{c,k} W[o,c,k] x[b,c,t+k]."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, rng: Rng,
                 name: str = "conv", dtype=None):
        super().__init__()
        if kernel_size < 1:
            raise ShapeMismatchError("kernel size must be >= 1")
        dtype = dtype or active_dtype()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        fan_in = in_channels * kernel_size
        fan_out = out_channels * kernel_size
        self.weight = Parameter(
            f"{name}/W",
            glorot_uniform(rng, (out_channels, in_channels, kernel_size), fan_in, fan_out, dtype),
        )
        self.bias = Parameter(f"{name}/b", np.zeros(out_channels, dtype=dtype))

    def parameters(self):
        return [self.weight, self.bias]

    def output_length(self, in_length: int) -> int:
        return in_length - self.kernel_size + 1

    def forward(self, x, training=False):
        x, squeeze = _ensure_batched(x, 2)
        _, c_in, length = x.shape
        if c_in != self.in_channels:
            raise ShapeMismatchError(f"conv expects {self.in_channels} channels, got {c_in}")
        if length < self.kernel_size:
            raise ShapeMismatchError(f"input length {length} < kernel size {self.kernel_size}")
        windows = sliding_window_view(x, self.kernel_size, axis=2)  # [B, C, T, K]
        out = np.einsum("bctk,ock->bot", windows, self.weight.value, optimize=True)
        out += self.bias.value[None, :, None]
        self._cache = (x, squeeze)
        return out[0] if squeeze else out

    def backward(self, grad_out):
        x, squeeze = self._take_cache()
        grad_out = np.asarray(grad_out)
        if squeeze:
            grad_out = grad_out[None, ...]
        t_out = self.output_length(x.shape[2])
        if grad_out.shape != (x.shape[0], self.out_channels, t_out):
            raise ShapeMismatchError(
                f"conv grad shape {grad_out.shape} != {(x.shape[0], self.out_channels, t_out)}"
            )
        windows = sliding_window_view(x, self.kernel_size, axis=2)
        self.weight.grad += np.einsum("bctk,bot->ock", windows, grad_out, optimize=True)
        self.bias.grad += grad_out.sum(axis=(0, 2))
        grad_in = np.zeros_like(x)
        for k in range(self.kernel_size):
            grad_in[:, :, k:k + t_out] += np.einsum(
                "bot,oc->bct", grad_out, self.weight.value[:, :, k], optimize=True
            )
        return grad_in[0] if squeeze else grad_in


class MaxPool1D(Layer):
    """Non-overlapping max pooling; a trailing remainder window is dropped.

    Ties resolve to the lower index (numpy argmax takes the first maximum),
    and the argmax positions are cached so backward can route gradients.
    """

    def __init__(self, pool_size: int = 2):
        super().__init__()
        if pool_size < 1:
            raise ShapeMismatchError("pool size must be >= 1")
        self.pool_size = pool_size

    def output_length(self, in_length: int) -> int:
        return in_length // self.pool_size

    def forward(self, x, training=False):
        x, squeeze = _ensure_batched(x, 2)
        b, c, length = x.shape
        t_out = length // self.pool_size
        if t_out < 1:
            raise ShapeMismatchError(f"input length {length} < pool size {self.pool_size}")
        xr = x[:, :, : t_out * self.pool_size].reshape(b, c, t_out, self.pool_size)
        argmax = xr.argmax(axis=3)
        out = np.take_along_axis(xr, argmax[..., None], axis=3)[..., 0]
        self._cache = (x.shape, argmax, squeeze)
        return out[0] if squeeze else out

    def backward(self, grad_out):
        in_shape, argmax, squeeze = self._take_cache()
        grad_out = np.asarray(grad_out)
        if squeeze:
            grad_out = grad_out[None, ...]
        b, c, length = in_shape
        t_out = length // self.pool_size
        if grad_out.shape != (b, c, t_out):
            raise ShapeMismatchError(f"pool grad shape {grad_out.shape} != {(b, c, t_out)}")
        grad_windows = np.zeros((b, c, t_out, self.pool_size), dtype=grad_out.dtype)
        np.put_along_axis(grad_windows, argmax[..., None], grad_out[..., None], axis=3)
        grad_in = np.zeros(in_shape, dtype=grad_out.dtype)
        grad_in[:, :, : t_out * self.pool_size] = grad_windows.reshape(b, c, t_out * self.pool_size)
        return grad_in[0] if squeeze else grad_in


class ReLU(Layer):
    def forward(self, x, training=False):
        x = np.asarray(x)
        self._cache = x > 0
        return np.maximum(x, 0)

    def backward(self, grad_out):
        mask = self._take_cache()
        return np.asarray(grad_out) * mask


class Flatten(Layer):
    """[B, C, L] -> [B, C*L] (row-major)."""

    def forward(self, x, training=False):
        x, squeeze = _ensure_batched(x, 2)
        self._cache = (x.shape, squeeze)
        out = x.reshape(x.shape[0], -1)
        return out[0] if squeeze else out

    def backward(self, grad_out):
        shape, squeeze = self._take_cache()
        grad_out = np.asarray(grad_out)
        if squeeze:
            grad_out = grad_out[None, ...]
        return grad_out.reshape(shape)[0] if squeeze else grad_out.reshape(shape)


class Dropout(Layer):
    """Inverted dropout: training zeroes with probability ``rate`` and scales
    survivors by 1/(1-rate); inference is the identity."""

    def __init__(self, rate: float, rng: Rng | None = None):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise InvalidRateError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng

    def bind_rng(self, rng: Rng) -> None:
        self.rng = rng

    def forward(self, x, training=False):
        x = np.asarray(x)
        if not training or self.rate == 0.0:
            self._cache = None  # identity pass needs no backward routing
            self._identity = True
            return x
        if self.rng is None:
            raise InvalidRateError("dropout in training mode requires an Rng")
        keep = self.rng.uniform(size=x.shape) >= self.rate
        scale = 1.0 / (1.0 - self.rate)
        mask = keep.astype(x.dtype) * x.dtype.type(scale)
        self._cache = mask
        self._identity = False
        return x * mask

    def backward(self, grad_out):
        if getattr(self, "_identity", False):
            self._identity = False
            return np.asarray(grad_out)
        mask = self._take_cache()
        return np.asarray(grad_out) * mask


def dropout(x: np.ndarray, rate: float, rng: Rng, training: bool) -> np.ndarray:
    """Functional inverted dropout (see :class:`Dropout` for the contract)."""
    layer = Dropout(rate, rng)
    return layer.forward(np.asarray(x), training=training)


class LSTM(Layer):
    """Single LSTM layer over a [B, T, D] sequence, hidden width H.

    Gate order in the stacked weight matrix is (i, f, g, o):

        z_t = [x_t ; h_{t-1}] . W + b              W: [(D+H), 4H]
        i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o)
        g = tanh(z_g)
        c_t = f * c_{t-1} + i * g
        h_t = o * tanh(c_t)

    with h_0 = c_0 = 0. ``return_sequences`` selects the full [B, T, H]
    output or just the final hidden state [B, H]. Backward runs full BPTT
    across every step and gate.
    """

    def __init__(self, input_dim: int, hidden: int, rng: Rng, return_sequences: bool,
                 name: str = "lstm", dtype=None):
        super().__init__()
        dtype = dtype or active_dtype()
        self.input_dim = input_dim
        self.hidden = hidden
        self.return_sequences = return_sequences
        fan_in = input_dim + hidden
        fan_out = 4 * hidden
        self.weight = Parameter(
            f"{name}/W", glorot_uniform(rng, (fan_in, fan_out), fan_in, fan_out, dtype)
        )
        bias = np.zeros(4 * hidden, dtype=dtype)
        bias[hidden: 2 * hidden] = 1.0  # forget gate starts open
        self.bias = Parameter(f"{name}/b", bias)

    def parameters(self):
        return [self.weight, self.bias]

    def step(self, x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
        """One recurrence step on a [B, D] slice; returns (h_t, c_t, gates)."""
        h = self.hidden
        if x_t.shape[1] != self.input_dim or h_prev.shape[1] != h or c_prev.shape[1] != h:
            raise ShapeMismatchError("lstm step received inconsistent shapes")
        z_in = np.concatenate([x_t, h_prev], axis=1)
        z = z_in @ self.weight.value + self.bias.value
        i = act.sigmoid(z[:, :h])
        f = act.sigmoid(z[:, h: 2 * h])
        g = act.tanh(z[:, 2 * h: 3 * h])
        o = act.sigmoid(z[:, 3 * h:])
        c_t = f * c_prev + i * g
        tc = act.tanh(c_t)
        h_t = o * tc
        return h_t, c_t, (z_in, i, f, g, o, c_prev, tc)

    def forward(self, x, training=False):
        x, squeeze = _ensure_batched(x, 2)
        b, t_steps, d = x.shape
        if t_steps < 1:
            raise EmptySequenceError("lstm requires at least one time step")
        if d != self.input_dim:
            raise ShapeMismatchError(f"lstm expects input dim {self.input_dim}, got {d}")
        dtype = x.dtype
        h_t = np.zeros((b, self.hidden), dtype=dtype)
        c_t = np.zeros((b, self.hidden), dtype=dtype)
        steps = []
        hs = np.empty((b, t_steps, self.hidden), dtype=dtype)
        for t in range(t_steps):
            h_t, c_t, gates = self.step(x[:, t, :], h_t, c_t)
            steps.append(gates)
            hs[:, t, :] = h_t
        self._cache = (steps, (b, t_steps, d), squeeze)
        out = hs if self.return_sequences else hs[:, -1, :]
        return out[0] if squeeze else out

    def backward(self, grad_out):
        steps, (b, t_steps, d), squeeze = self._take_cache()
        grad_out = np.asarray(grad_out)
        if squeeze:
            grad_out = grad_out[None, ...]
        h = self.hidden
        if self.return_sequences:
            if grad_out.shape != (b, t_steps, h):
                raise ShapeMismatchError(f"lstm grad shape {grad_out.shape} != {(b, t_steps, h)}")
        else:
            if grad_out.shape != (b, h):
                raise ShapeMismatchError(f"lstm grad shape {grad_out.shape} != {(b, h)}")

        grad_x = np.zeros((b, t_steps, d), dtype=grad_out.dtype)
        dh_next = np.zeros((b, h), dtype=grad_out.dtype)
        dc_next = np.zeros((b, h), dtype=grad_out.dtype)
        dW = np.zeros_like(self.weight.value)
        db = np.zeros_like(self.bias.value)
        for t in range(t_steps - 1, -1, -1):
            z_in, i, f, g, o, c_prev, tc = steps[t]
            if self.return_sequences:
                dh = grad_out[:, t, :] + dh_next
            else:
                dh = (grad_out + dh_next) if t == t_steps - 1 else dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dz = np.empty((b, 4 * h), dtype=grad_out.dtype)
            dz[:, :h] = (dc * g) * i * (1.0 - i)
            dz[:, h: 2 * h] = (dc * c_prev) * f * (1.0 - f)
            dz[:, 2 * h: 3 * h] = (dc * i) * (1.0 - g * g)
            dz[:, 3 * h:] = (dh * tc) * o * (1.0 - o)
            dW += z_in.T @ dz
            db += dz.sum(axis=0)
            d_in = dz @ self.weight.value.T
            grad_x[:, t, :] = d_in[:, :d]
            dh_next = d_in[:, d:]
            dc_next = dc * f
        self.weight.grad += dW
        self.bias.grad += db
        return grad_x[0] if squeeze else grad_x
