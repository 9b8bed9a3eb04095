"""Finite-difference validation of every analytic backward pass.

For each operator we reduce its output to a scalar through a fixed random
projection, compute the analytic gradient via the operator's backward
companion, and compare against central finite differences of the scalar.
"""

import numpy as np

from . import ops

DOUBLE_TOL = 1e-4
SINGLE_TOL = 1e-2


def numerical_gradient(f, x, eps):
    """Central finite differences of scalar-valued f at x, elementwise."""
    x = np.asarray(x)
    grad = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        grad.reshape(-1)[i] = (fp - fm) / (2.0 * eps)
    return grad


def relative_error(analytic, numeric, floor=1e-8):
    """Max elementwise |a - n| / max(floor, |a|, |n|)."""
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    denom = np.maximum(floor, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom))


def _settings(dtype):
    if np.dtype(dtype) == np.float64:
        return 1e-5, 1e-8
    return 1e-2, 1e-4


def _separated_uniform(rng, shape, dtype, min_gap):
    """Random tensor whose 2x2 pool windows have no near-ties and no values
    within min_gap of zero, so finite differences stay one-sided."""
    while True:
        x = rng.uniform(-1.0, 1.0, size=shape).astype(dtype)
        if np.min(np.abs(x)) < min_gap:
            continue
        if x.shape[1] % 2 == 0 and x.shape[2] % 2 == 0:
            win = x.reshape(x.shape[0], -1, 2, x.shape[2] // 2, 2)
            win = np.sort(win.transpose(0, 1, 3, 2, 4).reshape(x.shape[0], -1, 4), axis=-1)
            if np.min(np.diff(win, axis=-1)) < min_gap:
                continue
        return x


def check_conv2d(rng, dtype=np.float64, shape=(2, 8, 8), out_channels=2):
    eps, _ = _settings(dtype)
    x = rng.uniform(-1, 1, size=shape).astype(dtype)
    fb = ops.FilterBank(rng.uniform(-1, 1, size=(out_channels, shape[0], 3, 3)).astype(dtype),
                        rng.uniform(-1, 1, size=out_channels).astype(dtype))
    proj = rng.uniform(-1, 1, size=(out_channels,) + shape[1:]).astype(dtype)

    gx, gw, gb = ops.conv2d_backward(proj, x, fb)
    errs = [
        relative_error(gx, numerical_gradient(
            lambda v: float(np.sum(ops.conv2d(v, fb) * proj)), x.copy(), eps)),
        relative_error(gw, numerical_gradient(
            lambda v: float(np.sum(ops.conv2d(x, ops.FilterBank(v, fb.bias)) * proj)),
            fb.weights.copy(), eps)),
        relative_error(gb, numerical_gradient(
            lambda v: float(np.sum(ops.conv2d(x, ops.FilterBank(fb.weights, v)) * proj)),
            fb.bias.copy(), eps)),
    ]
    return max(errs)


def check_deconv2d(rng, dtype=np.float64, shape=(2, 4, 4), out_channels=2):
    eps, _ = _settings(dtype)
    x = rng.uniform(-1, 1, size=shape).astype(dtype)
    fb = ops.FilterBank(rng.uniform(-1, 1, size=(out_channels, shape[0], 3, 3)).astype(dtype),
                        rng.uniform(-1, 1, size=out_channels).astype(dtype))
    proj = rng.uniform(-1, 1, size=(out_channels, 2 * shape[1], 2 * shape[2])).astype(dtype)

    gx, gw, gb = ops.deconv2d_backward(proj, x, fb)
    errs = [
        relative_error(gx, numerical_gradient(
            lambda v: float(np.sum(ops.deconv2d(v, fb) * proj)), x.copy(), eps)),
        relative_error(gw, numerical_gradient(
            lambda v: float(np.sum(ops.deconv2d(x, ops.FilterBank(v, fb.bias)) * proj)),
            fb.weights.copy(), eps)),
        relative_error(gb, numerical_gradient(
            lambda v: float(np.sum(ops.deconv2d(x, ops.FilterBank(fb.weights, v)) * proj)),
            fb.bias.copy(), eps)),
    ]
    return max(errs)


def check_maxpool2(rng, dtype=np.float64, shape=(2, 8, 8)):
    eps, _ = _settings(dtype)
    x = _separated_uniform(rng, shape, dtype, min_gap=100 * eps)
    proj = rng.uniform(-1, 1, size=(shape[0], shape[1] // 2, shape[2] // 2)).astype(dtype)

    _, idx = ops.maxpool2(x)
    analytic = ops.maxpool2_backward(proj, idx, x.shape)
    numeric = numerical_gradient(
        lambda v: float(np.sum(ops.maxpool2(v)[0] * proj)), x.copy(), eps)
    return relative_error(analytic, numeric)


def check_activations(rng, dtype=np.float64, shape=(2, 8, 8)):
    eps, _ = _settings(dtype)
    x = _separated_uniform(rng, shape, dtype, min_gap=100 * eps)
    proj = rng.uniform(-1, 1, size=shape).astype(dtype)
    worst = 0.0
    for kind in ("relu", "sigmoid"):
        out = ops.activation(x, kind)
        analytic = ops.activation_backward(proj, out, kind)
        numeric = numerical_gradient(
            lambda v: float(np.sum(ops.activation(v, kind) * proj)), x.copy(), eps)
        worst = max(worst, relative_error(analytic, numeric))
    return worst


def check_euclidean_loss(rng, dtype=np.float64, shape=(2, 8, 8), batch=3):
    eps, _ = _settings(dtype)
    xs = [rng.uniform(0, 1, size=shape).astype(dtype) for _ in range(batch)]
    ys = [rng.uniform(0, 1, size=shape).astype(dtype) for _ in range(batch)]
    analytic = ops.euclidean_loss_grad(xs, ys)
    worst = 0.0
    for k in range(batch):
        def scalar(v, k=k):
            trial = list(ys)
            trial[k] = v
            return ops.euclidean_loss(xs, trial)
        worst = max(worst, relative_error(analytic[k],
                                          numerical_gradient(scalar, ys[k].copy(), eps)))
    return worst


CHECKS = {
    "conv2d": check_conv2d,
    "deconv2d": check_deconv2d,
    "maxpool2": check_maxpool2,
    "activation": check_activations,
    "euclidean_loss": check_euclidean_loss,
}


def run_all(precision="double", seed=0):
    """Run every operator check; returns list of (name, max_rel_err, tol, ok)."""
    dtype = np.float64 if precision == "double" else np.float32
    tol = DOUBLE_TOL if precision == "double" else SINGLE_TOL
    results = []
    for name, fn in CHECKS.items():
        rng = np.random.default_rng(seed)
        err = fn(rng, dtype=dtype)
        results.append((name, err, tol, err < tol))
    return results
