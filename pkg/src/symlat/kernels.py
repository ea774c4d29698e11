"""Differentiable numerical kernels with explicit forward/backward pairs.

All kernels are pure functions over float64 numpy arrays and deterministic:
identical inputs produce bit-identical outputs. Layouts are time-major.
Where noted, a leading batch axis is accepted; parameter gradients of a
batched backward call are summed over the batch, matching their role as
shared weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_forward(x, filters, bias):
    """Valid 1D convolution over the time axis, stride 1, no padding.

    x: (L, v) or (B, L, v); filters: (q, m, v); bias: (q,).
    Returns (L - m + 1, q), with a leading batch axis if x had one.
    """
    x = np.asarray(x, dtype=np.float64)
    filters = np.asarray(filters, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if filters.ndim != 3:
        raise ValueError(f"filters must be (q, m, v), got {filters.shape}")
    q, m, v = filters.shape
    if x.ndim not in (2, 3) or x.shape[-1] != v:
        raise ValueError(f"input shape {x.shape} incompatible with filters {filters.shape}")
    if bias.shape != (q,):
        raise ValueError(f"bias must be ({q},), got {bias.shape}")
    L = x.shape[-2]
    if m < 1 or m > L:
        raise ValueError(f"kernel length m={m} must be in [1, L={L}]")
    windows = sliding_window_view(x, m, axis=-2)  # (..., kappa, v, m)
    flat = windows.reshape(*windows.shape[:-2], v * m)
    w = filters.transpose(0, 2, 1).reshape(q, v * m)
    return flat @ w.T + bias


def conv1d_backward(grad_out, x, filters, need_input_grad=True):
    """Gradients of conv1d_forward.

    grad_out: (kappa, q) or (B, kappa, q) matching the forward output.
    Returns (grad_x, grad_filters, grad_bias); grad_x is None when
    need_input_grad is False.
    """
    grad_out = np.asarray(grad_out, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    filters = np.asarray(filters, dtype=np.float64)
    q, m, v = filters.shape
    L = x.shape[-2]
    kappa = L - m + 1
    if grad_out.shape != x.shape[:-2] + (kappa, q):
        raise ValueError(
            f"grad_out shape {grad_out.shape} does not match forward output "
            f"{x.shape[:-2] + (kappa, q)}"
        )
    windows = sliding_window_view(x, m, axis=-2)  # (..., kappa, v, m)
    flat = windows.reshape(-1, v * m)
    go_flat = grad_out.reshape(-1, q)
    grad_w = go_flat.T @ flat  # (q, v*m)
    grad_filters = grad_w.reshape(q, v, m).transpose(0, 2, 1)
    grad_bias = go_flat.sum(axis=0)
    if not need_input_grad:
        return None, grad_filters, grad_bias
    w = filters.transpose(0, 2, 1).reshape(q, v * m)
    grad_flat = grad_out @ w  # (..., kappa, v*m)
    grad_win = grad_flat.reshape(*grad_out.shape[:-1], v, m)
    grad_x = np.zeros_like(x)
    for l in range(m):
        grad_x[..., l:l + kappa, :] += grad_win[..., :, l]
    return grad_x, grad_filters, grad_bias


def dense_forward(features, weights, bias):
    """Affine map logits = features @ weights.T + bias.

    features: (d,) or (B, d); weights: (C, d); bias: (C,).
    """
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if weights.ndim != 2 or features.shape[-1] != weights.shape[1]:
        raise ValueError(f"features {features.shape} incompatible with weights {weights.shape}")
    if bias.shape != (weights.shape[0],):
        raise ValueError(f"bias must be ({weights.shape[0]},), got {bias.shape}")
    return features @ weights.T + bias


def dense_backward(grad_out, features, weights):
    """Gradients of dense_forward: (grad_features, grad_weights, grad_bias)."""
    grad_out = np.asarray(grad_out, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if grad_out.shape != features.shape[:-1] + (weights.shape[0],):
        raise ValueError(f"grad_out shape {grad_out.shape} does not match logits")
    grad_features = grad_out @ weights
    go2 = grad_out.reshape(-1, weights.shape[0])
    f2 = features.reshape(-1, weights.shape[1])
    grad_weights = go2.T @ f2
    grad_bias = go2.sum(axis=0)
    return grad_features, grad_weights, grad_bias


def _pool_prepare(x, window):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 2:
        raise ValueError("pooling input must have at least 2 dimensions")
    R, C = x.shape[-2:]
    if window < 1:
        raise ValueError(f"pool window must be >= 1, got {window}")
    if window > R or window > C:
        raise ValueError(f"pool window {window} exceeds input dims ({R}, {C})")
    row_idx = np.arange(0, R, window)
    col_idx = np.arange(0, C, window)
    row_sizes = np.diff(np.append(row_idx, R))
    col_sizes = np.diff(np.append(col_idx, C))
    return x, row_idx, col_idx, row_sizes, col_sizes


def avgpool2d_forward(x, window):
    """2D average pooling, square window, stride = window.

    Trailing rows/columns that do not fill a window are pooled over the
    truncated window. x: (R, C) with optional leading batch axes.
    """
    x, row_idx, col_idx, row_sizes, col_sizes = _pool_prepare(x, window)
    sums = np.add.reduceat(np.add.reduceat(x, row_idx, axis=-2), col_idx, axis=-1)
    counts = row_sizes[:, None] * col_sizes[None, :]
    return sums / counts


def avgpool2d_backward(grad_out, input_shape, window):
    """Distribute each pooled-cell gradient uniformly over its window."""
    grad_out = np.asarray(grad_out, dtype=np.float64)
    R, C = input_shape[-2:]
    row_idx = np.arange(0, R, window)
    col_idx = np.arange(0, C, window)
    row_sizes = np.diff(np.append(row_idx, R))
    col_sizes = np.diff(np.append(col_idx, C))
    counts = row_sizes[:, None] * col_sizes[None, :]
    scaled = grad_out / counts
    g = np.repeat(scaled, row_sizes, axis=-2)
    return np.repeat(g, col_sizes, axis=-1)


def _pool_local_key(R, C, row_idx, col_idx, window):
    # row-major position of each cell inside its window, for first-index ties
    r = np.arange(R)
    c = np.arange(C)
    local_r = r - row_idx[np.searchsorted(row_idx, r, side="right") - 1]
    local_c = c - col_idx[np.searchsorted(col_idx, c, side="right") - 1]
    return local_r[:, None] * window + local_c[None, :]


def maxpool2d_forward(x, window, return_switches=False):
    """2D max pooling, square window, stride = window, truncated trailing windows.

    With return_switches=True also returns a boolean routing mask marking the
    first (row-major) argmax inside each window, as needed by the backward pass.
    """
    x, row_idx, col_idx, row_sizes, col_sizes = _pool_prepare(x, window)
    pooled = np.maximum.reduceat(np.maximum.reduceat(x, row_idx, axis=-2), col_idx, axis=-1)
    if not return_switches:
        return pooled
    R, C = x.shape[-2:]
    up = np.repeat(np.repeat(pooled, row_sizes, axis=-2), col_sizes, axis=-1)
    hits = x == up
    key = _pool_local_key(R, C, row_idx, col_idx, window)
    penalty = np.where(hits, key, np.iinfo(np.int64).max).astype(np.float64)
    min_key = np.minimum.reduceat(np.minimum.reduceat(penalty, row_idx, axis=-2), col_idx, axis=-1)
    min_up = np.repeat(np.repeat(min_key, row_sizes, axis=-2), col_sizes, axis=-1)
    switches = hits & (key == min_up)
    return pooled, switches


def maxpool2d_backward(grad_out, input_shape, window, switches):
    """Route each pooled-cell gradient to its recorded argmax position."""
    grad_out = np.asarray(grad_out, dtype=np.float64)
    R, C = input_shape[-2:]
    row_sizes = np.diff(np.append(np.arange(0, R, window), R))
    col_sizes = np.diff(np.append(np.arange(0, C, window), C))
    up = np.repeat(np.repeat(grad_out, row_sizes, axis=-2), col_sizes, axis=-1)
    return np.where(switches, up, 0.0)


def softmax_cross_entropy(logits, labels):
    """Softmax cross-entropy loss and its gradient w.r.t. the logits.

    logits: (C,) with an int label, or (B, C) with an int array of labels.
    Returns (loss, grad) where grad = softmax(logits) - onehot(label).
    Logits are max-subtracted before exponentiation, so the result is
    invariant to a constant shift and stays finite for extreme inputs.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("non-finite logits")
    C = logits.shape[-1]
    if C < 2:
        raise ValueError(f"need at least 2 classes, got {C}")
    labels_arr = np.asarray(labels)
    scalar = logits.ndim == 1
    if np.any(labels_arr < 0) or np.any(labels_arr >= C):
        raise ValueError(f"label out of range [0, {C})")
    z = logits - logits.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    denom = ez.sum(axis=-1, keepdims=True)
    p = ez / denom
    lse = np.log(denom[..., 0])
    if scalar:
        loss = lse - z[int(labels_arr)]
        grad = p.copy()
        grad[int(labels_arr)] -= 1.0
        return float(loss), grad
    zl = np.take_along_axis(z, labels_arr[..., None], axis=-1)[..., 0]
    loss = lse - zl
    grad = p.copy()
    np.subtract.at(grad, (np.arange(grad.shape[0]), labels_arr), 1.0)
    return loss, grad


@dataclass
class AdamState:
    """First/second moment accumulators. Single-writer: one optimizer loop."""

    lr: float
    beta1: float
    beta2: float
    eps: float
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_init(params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    for name, p in params.items():
        state.m[name] = np.zeros_like(p, dtype=np.float64)
        state.v[name] = np.zeros_like(p, dtype=np.float64)
    return state


def adam_step(params, grads, state):
    """One Adam update. Returns new parameter arrays; mutates state in place."""
    if set(params) != set(grads) or set(params) != set(state.m):
        raise ValueError("params, grads and state must have identical keys")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    out = {}
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {p.shape} for {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        mhat = m / bc1
        vhat = v / bc2
        out[name] = p - state.lr * mhat / (np.sqrt(vhat) + state.eps)
    return out


@dataclass
class GradCheckReport:
    max_rel_error: float
    n_probes: int
    tolerance: float
    passed: bool
    worst_coordinate: tuple = ()


def grad_check(fn, params, tolerance=1e-4, n_probes=32, step=1e-5, seed=0, floor=1e-5):
    """Central-difference check of an analytic gradient.

    fn(params) must return (scalar value, grads dict matching params).
    Probes n_probes randomly chosen coordinates; the relative error of a
    probe is |fd - analytic| / max(|fd|, |analytic|, floor). The floor
    makes the comparison absolute for coordinates whose gradient is too
    small for finite differences to resolve in double precision.
    """
    _, grads = fn(params)
    rng = np.random.default_rng(seed)
    names = sorted(params)
    sizes = np.array([params[n].size for n in names])
    total = int(sizes.sum())
    chosen = rng.choice(total, size=min(n_probes, total), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    max_err = 0.0
    worst = ()
    for flat_idx in chosen:
        which = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        name = names[which]
        local = int(flat_idx - offsets[which])
        base = params[name].reshape(-1)[local]
        probe = {n: params[n].copy() for n in names}
        probe[name].reshape(-1)[local] = base + step
        hi, _ = fn(probe)
        probe[name].reshape(-1)[local] = base - step
        lo, _ = fn(probe)
        fd = (hi - lo) / (2.0 * step)
        an = float(grads[name].reshape(-1)[local])
        err = abs(fd - an) / max(abs(fd), abs(an), floor)
        if err > max_err:
            max_err = err
            worst = (name, local, fd, an)
    return GradCheckReport(
        max_rel_error=max_err,
        n_probes=len(chosen),
        tolerance=tolerance,
        passed=max_err < tolerance,
        worst_coordinate=worst,
    )
