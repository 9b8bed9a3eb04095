"""Differentiable operator set for the reconstruction network.

Tensors are plain numpy arrays laid out channel-first (C, H, W); gradients
travel as separate arrays of the same shape rather than on a tape. Every
operator has an explicit backward companion whose analytic gradients are
validated against central finite differences (see :mod:`exmo.gradcheck`).

Storage precision is float32 for training and scoring; all operators also
accept float64 for high-fidelity gradient checks.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ShapeError, TrainingError

FLOAT_DTYPES = (np.float32, np.float64)


def _as_tensor(a, name):
    a = np.asarray(a)
    if a.dtype not in FLOAT_DTYPES:
        a = a.astype(np.float32)
    return np.ascontiguousarray(a)


def _common_dtype(*arrays):
    return np.float64 if any(a.dtype == np.float64 for a in arrays) else np.float32


@dataclass
class FilterBank:
    """Learnable 3x3 filters: weights (out_ch, in_ch, 3, 3) plus bias (out_ch,)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = _as_tensor(self.weights, "weights")
        self.bias = _as_tensor(self.bias, "bias")
        if self.weights.ndim != 4 or self.weights.shape[2:] != (3, 3):
            raise ShapeError(f"filter weights must be (out, in, 3, 3), got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(f"bias shape {self.bias.shape} does not match out channels "
                             f"{self.weights.shape[0]}")

    @property
    def out_channels(self):
        return self.weights.shape[0]

    @property
    def in_channels(self):
        return self.weights.shape[1]

    def astype(self, dtype):
        return FilterBank(self.weights.astype(dtype), self.bias.astype(dtype))


@dataclass
class PoolIndexMap:
    """Per-output-cell argmax positions of a 2x2/stride-2 max pool.

    ``codes`` holds row-major window positions 0..3; code ``c`` maps to the
    in-window coordinate (c >> 1, c & 1).
    """

    codes: np.ndarray

    @property
    def rows(self):
        return (self.codes >> 1).astype(np.intp)

    @property
    def cols(self):
        return (self.codes & 1).astype(np.intp)


def _check_3d(x, name):
    if x.ndim != 3:
        raise ShapeError(f"{name} must be 3-dimensional (C, H, W), got shape {x.shape}")


def conv2d(x, filters):
    """3x3 correlation with stride 1 and zero padding 1 ("same" geometry)."""
    x = _as_tensor(x, "input")
    _check_3d(x, "conv2d input")
    if x.shape[0] != filters.in_channels:
        raise ShapeError(f"conv2d input has {x.shape[0]} channels, filters expect "
                         f"{filters.in_channels}")
    dt = _common_dtype(x, filters.weights)
    fb = filters if filters.weights.dtype == dt else filters.astype(dt)
    return kernels.conv2d_forward(x.astype(dt, copy=False), fb.weights, fb.bias)


def conv2d_backward(grad_out, cached_input, filters):
    """Gradients of conv2d: returns (grad_input, grad_weights, grad_bias)."""
    grad_out = _as_tensor(grad_out, "grad_out")
    x = _as_tensor(cached_input, "cached_input")
    if grad_out.shape != (filters.out_channels,) + x.shape[1:]:
        raise ShapeError(f"grad_out shape {grad_out.shape} does not match conv2d output "
                         f"({filters.out_channels},{x.shape[1]},{x.shape[2]})")
    if x.shape[0] != filters.in_channels:
        raise ShapeError(f"cached input has {x.shape[0]} channels, filters expect "
                         f"{filters.in_channels}")
    dt = _common_dtype(grad_out, x, filters.weights)
    fb = filters if filters.weights.dtype == dt else filters.astype(dt)
    return kernels.conv2d_backward(grad_out.astype(dt, copy=False),
                                   x.astype(dt, copy=False), fb.weights)


def maxpool2(x):
    """2x2/stride-2 max pool; ties resolve to the first cell in row-major order."""
    x = _as_tensor(x, "input")
    _check_3d(x, "maxpool2 input")
    if x.shape[1] % 2 or x.shape[2] % 2:
        raise ShapeError(f"maxpool2 needs even spatial extents, got {x.shape[1:]}")
    y, codes = kernels.maxpool2_forward(x)
    return y, PoolIndexMap(codes)


def maxpool2_backward(grad_out, indices, input_shape):
    """Route pooled gradients back to the recorded argmax positions."""
    grad_out = _as_tensor(grad_out, "grad_out")
    codes = indices.codes
    if grad_out.shape != codes.shape:
        raise ShapeError(f"grad_out shape {grad_out.shape} does not match pooled shape "
                         f"{codes.shape}")
    expected = (codes.shape[0], codes.shape[1] * 2, codes.shape[2] * 2)
    if tuple(input_shape) != expected:
        raise ShapeError(f"index map implies input shape {expected}, got {tuple(input_shape)}")
    return kernels.maxpool2_backward(grad_out, codes)


def deconv2d(x, filters):
    """Transposed 3x3 convolution with stride 2; doubles both spatial extents."""
    x = _as_tensor(x, "input")
    _check_3d(x, "deconv2d input")
    if x.shape[0] != filters.in_channels:
        raise ShapeError(f"deconv2d input has {x.shape[0]} channels, filters expect "
                         f"{filters.in_channels}")
    dt = _common_dtype(x, filters.weights)
    fb = filters if filters.weights.dtype == dt else filters.astype(dt)
    return kernels.deconv2d_forward(x.astype(dt, copy=False), fb.weights, fb.bias)


def deconv2d_backward(grad_out, cached_input, filters):
    """Gradients of deconv2d: returns (grad_input, grad_weights, grad_bias)."""
    grad_out = _as_tensor(grad_out, "grad_out")
    x = _as_tensor(cached_input, "cached_input")
    expected = (filters.out_channels, 2 * x.shape[1], 2 * x.shape[2])
    if grad_out.shape != expected:
        raise ShapeError(f"grad_out shape {grad_out.shape} does not match deconv2d output "
                         f"{expected}")
    dt = _common_dtype(grad_out, x, filters.weights)
    fb = filters if filters.weights.dtype == dt else filters.astype(dt)
    return kernels.deconv2d_backward(grad_out.astype(dt, copy=False),
                                     x.astype(dt, copy=False), fb.weights)


def concat_channels(a, b):
    """Stack b's channels after a's; spatial extents must match."""
    a = _as_tensor(a, "a")
    b = _as_tensor(b, "b")
    if a.shape[1:] != b.shape[1:]:
        raise ShapeError(f"spatial extents differ: {a.shape[1:]} vs {b.shape[1:]}")
    return np.concatenate([a, b], axis=0)


def split_channels(x, first):
    """Inverse of concat_channels: returns (x[:first], x[first:])."""
    return x[:first], x[first:]


def activation(x, kind):
    """Elementwise relu or sigmoid."""
    x = _as_tensor(x, "input")
    if kind == "relu":
        return np.maximum(x, 0)
    if kind == "sigmoid":
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out
    raise ValueError(f"unknown activation kind: {kind!r}")


def activation_backward(grad_out, cached_output, kind):
    """Backward through an activation, from its cached output."""
    grad_out = _as_tensor(grad_out, "grad_out")
    out = _as_tensor(cached_output, "cached_output")
    if grad_out.shape != out.shape:
        raise ShapeError(f"grad_out shape {grad_out.shape} != output shape {out.shape}")
    if kind == "relu":
        return grad_out * (out > 0)
    if kind == "sigmoid":
        return grad_out * out * (1.0 - out)
    raise ValueError(f"unknown activation kind: {kind!r}")


def _batch_arrays(batch, name):
    if len(batch) == 0:
        raise ValueError(f"{name} must not be empty")
    return [np.asarray(getattr(item, "frames", item)) for item in batch]


def euclidean_loss(batch_in, batch_out):
    """Mean-over-batch squared reconstruction error with a 1/(2N) prefactor.

    Sums squared differences over every pixel of every frame of each sample,
    averages over the batch, and halves the result.
    """
    xs = _batch_arrays(batch_in, "batch_in")
    ys = _batch_arrays(batch_out, "batch_out")
    if len(xs) != len(ys):
        raise ValueError(f"batch lengths differ: {len(xs)} vs {len(ys)}")
    n = len(xs)
    total = 0.0
    for x, y in zip(xs, ys):
        if x.shape != y.shape:
            raise ShapeError(f"batch item shapes differ: {x.shape} vs {y.shape}")
        d = y.astype(np.float64, copy=False) - x.astype(np.float64, copy=False)
        total += float(np.sum(d * d))
    return total / (2.0 * n)


def euclidean_loss_grad(batch_in, batch_out):
    """Per-item gradient of euclidean_loss w.r.t. batch_out: (out - in) / N."""
    xs = _batch_arrays(batch_in, "batch_in")
    ys = _batch_arrays(batch_out, "batch_out")
    n = len(xs)
    return [(y - x) / n for x, y in zip(xs, ys)]


@dataclass
class AdamState:
    """First/second moment buffers and step counter for the adaptive update."""

    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params):
        return cls(step=0,
                   m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """In-place adaptive-moment update with bias correction.

    Deterministic given identical inputs. Raises TrainingError on non-finite
    gradients so training can stop at the last good checkpoint.
    """
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} params vs {len(grads)} grads")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in parameter {i} "
                                f"(shape {np.asarray(g).shape})")
    state.step += 1
    t = state.step
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        g = g.astype(p.dtype, copy=False)
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params, state
