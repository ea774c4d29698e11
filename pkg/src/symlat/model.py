"""Classifier pairing a symbolic composition matrix with learned segment latents.

For each configured segment size m the input yields two aligned per-segment
views: Z (kappa, n*v) from the symbolic path, and Q (kappa, q), a ReLU
single-layer convolution of the (optionally position-encoded) input. Their
cross-representation P = Z^T Q is pooled, flattened, concatenated over
segment sizes and classified by one affine layer. Training is mini-batch
Adam on softmax cross-entropy with seeded shuffling and early stopping on
validation accuracy.

The Z path always sees the raw input: positional encodings are added to
the convolution input only.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import kernels, symbolic

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

ACTIVATIONS = ("relu", "identity")
POOLINGS = ("avg", "max", "none")
Z_MODES = ("symbolic", "raw_projection")


class TrainingDiverged(RuntimeError):
    """Raised when the training loss becomes non-finite."""


class ModelFormatError(Exception):
    """Raised when a stored model cannot be parsed or fails validation."""


@dataclass(frozen=True)
class ModelConfig:
    bins: int = 8
    latent_dim: int = 16
    segment_sizes: tuple = (7,)
    positional_encoding: bool = False
    conv_activation: str = "relu"
    pooling: str = "avg"
    pool_window: int = 2
    bin_strategy: str = "quantile"
    z_mode: str = "symbolic"
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 20
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "segment_sizes", tuple(int(m) for m in self.segment_sizes))
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if not self.segment_sizes or any(m < 1 for m in self.segment_sizes):
            raise ValueError(f"segment_sizes must be positive, got {self.segment_sizes}")
        if len(set(self.segment_sizes)) != len(self.segment_sizes):
            raise ValueError("segment_sizes must be distinct")
        if self.conv_activation not in ACTIVATIONS:
            raise ValueError(f"conv_activation must be one of {ACTIVATIONS}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}")
        if self.pooling != "none" and self.pool_window < 1:
            raise ValueError("pool_window must be >= 1")
        if self.z_mode not in Z_MODES:
            raise ValueError(f"z_mode must be one of {Z_MODES}")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs and patience must be >= 1")


@dataclass
class ModelParams:
    config: ModelConfig
    length: int
    n_variates: int
    n_classes: int
    edges: symbolic.BinEdges | None
    conv_kernels: dict  # segment size -> (q, m, v)
    conv_bias: dict  # segment size -> (q,)
    head_weight: np.ndarray  # (C, d)
    head_bias: np.ndarray  # (C,)
    z_proj: dict = field(default_factory=dict)  # segment size -> (n*v, m*v)

    @property
    def symbol_dim(self):
        return self.config.bins * self.n_variates

    @property
    def pooled_shape(self):
        """Shape of one pooled P slice."""
        nv, q = self.symbol_dim, self.config.latent_dim
        if self.config.pooling == "none":
            return (nv, q)
        k = self.config.pool_window
        return (-(-nv // k), -(-q // k))

    @property
    def feature_dim(self):
        pr, pc = self.pooled_shape
        return pr * pc * len(self.config.segment_sizes)

    @property
    def parameter_count(self):
        n = self.head_weight.size + self.head_bias.size
        for m in self.config.segment_sizes:
            n += self.conv_kernels[m].size + self.conv_bias[m].size
            if self.config.z_mode == "raw_projection":
                n += self.z_proj[m].size
        return int(n)

    def learnables(self):
        """Trainable arrays keyed by stable names, in declared order."""
        out = {}
        for m in self.config.segment_sizes:
            out[f"conv_kernels_{m}"] = self.conv_kernels[m]
            out[f"conv_bias_{m}"] = self.conv_bias[m]
        if self.config.z_mode == "raw_projection":
            for m in self.config.segment_sizes:
                out[f"z_proj_{m}"] = self.z_proj[m]
        out["head_weight"] = self.head_weight
        out["head_bias"] = self.head_bias
        return out

    def with_learnables(self, arrays):
        new = dataclasses.replace(self)
        new.conv_kernels = {m: arrays[f"conv_kernels_{m}"] for m in self.config.segment_sizes}
        new.conv_bias = {m: arrays[f"conv_bias_{m}"] for m in self.config.segment_sizes}
        if self.config.z_mode == "raw_projection":
            new.z_proj = {m: arrays[f"z_proj_{m}"] for m in self.config.segment_sizes}
        new.head_weight = arrays["head_weight"]
        new.head_bias = arrays["head_bias"]
        return new

    def copy(self):
        return self.with_learnables({k: v.copy() for k, v in self.learnables().items()})


@dataclass
class ForwardTrace:
    z: dict  # segment size -> (kappa, n*v)
    q: dict  # segment size -> (kappa, q)
    p: dict  # segment size -> (n*v, q)
    pooled: dict  # segment size -> pooled slice
    switches: dict  # segment size -> max-pool routing mask, when pooling == "max"
    features: np.ndarray
    logits: np.ndarray
    predicted_class: int


def positional_encoding(length, n_variates):
    """Sinusoidal table (length, n_variates), added to the conv input.

    Channel c uses sin(t / 10000^(c/v)) for even c and cos with exponent
    (c-1)/v for odd c. A single-channel table falls back to a linear rung
    spanning [-1, 1]: its lone sinusoid rung sin(t) repeats every 2*pi
    steps, which encodes position only modulo the period, and ordering
    events across the whole series needs a monotone rung.
    """
    t = np.arange(length, dtype=np.float64)[:, None]
    ch = np.arange(n_variates)
    if n_variates == 1:
        return 2.0 * t / length - 1.0
    expo = np.where(ch % 2 == 0, ch, ch - 1).astype(np.float64) / n_variates
    angles = t / np.power(10000.0, expo)[None, :]
    return np.where(ch % 2 == 0, np.sin(angles), np.cos(angles))


def init_params(config, length, n_variates, n_classes, rng=None):
    """Seeded parameter initialization. Head starts at zero; conv filters
    use scaled normal draws."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if any(m > length for m in config.segment_sizes):
        raise ValueError(
            f"segment sizes {config.segment_sizes} must not exceed series length {length}"
        )
    q = config.latent_dim
    nv = config.bins * n_variates
    conv_kernels = {}
    conv_bias = {}
    z_proj = {}
    for m in config.segment_sizes:
        scale = np.sqrt(2.0 / (m * n_variates))
        conv_kernels[m] = rng.normal(0.0, scale, size=(q, m, n_variates))
        conv_bias[m] = np.zeros(q)
        if config.z_mode == "raw_projection":
            z_proj[m] = rng.normal(0.0, np.sqrt(1.0 / (m * n_variates)), size=(nv, m * n_variates))
    params = ModelParams(
        config=config,
        length=length,
        n_variates=n_variates,
        n_classes=n_classes,
        edges=None,
        conv_kernels=conv_kernels,
        conv_bias=conv_bias,
        head_weight=np.zeros((n_classes, 1)),
        head_bias=np.zeros(n_classes),
        z_proj=z_proj,
    )
    params.head_weight = np.zeros((n_classes, params.feature_dim))
    return params


def _activation(pre, kind):
    if kind == "relu":
        return np.maximum(pre, 0.0)
    return pre


def conv_input(x, params):
    """float64 input with the positional-encoding table added when enabled."""
    x = np.asarray(x, dtype=np.float64)
    if not params.config.positional_encoding:
        return x
    return x + positional_encoding(x.shape[-2], params.n_variates)


def latent(x, params, segment_size):
    """Segment latents Q (kappa, q) for one segment size."""
    m = segment_size
    xin = conv_input(x, params)
    pre = kernels.conv1d_forward(xin, params.conv_kernels[m], params.conv_bias[m])
    return _activation(pre, params.config.conv_activation)


def composition_matrix(x, params, segment_size):
    """The Z slice (kappa, n*v) for one segment size.

    Symbolic mode discretizes against the fitted edges; raw-projection
    mode applies the learned projection to flattened raw segments.
    """
    x = np.asarray(x, dtype=np.float64)
    m = segment_size
    if params.config.z_mode == "symbolic":
        if params.edges is None:
            raise ValueError("model has no fitted bin edges")
        sym = symbolic.discretize(x, params.edges)
        oh = symbolic.one_hot(sym, params.config.bins)
        return symbolic.compose(oh, m)
    windows = sliding_window_view(x, m, axis=-2)  # (..., kappa, v, m)
    flat = windows.transpose(*range(windows.ndim - 3), -3, -1, -2).reshape(
        *windows.shape[:-3], windows.shape[-3], -1
    )  # (..., kappa, m*v) in time-major order
    return flat @ params.z_proj[m].T


def cross_representation(z, q):
    """P = Z^T Q with aligned segment axes: (n*v, q) from (kappa, n*v), (kappa, q)."""
    z = np.asarray(z, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if z.shape[-2] != q.shape[-2]:
        raise ValueError(f"segment axes differ: Z {z.shape} vs Q {q.shape}")
    return np.swapaxes(z, -1, -2) @ q


def _pool_slice(p, params, want_switches=False):
    cfg = params.config
    if cfg.pooling == "none":
        return (p, None) if want_switches else (p, None)
    if cfg.pooling == "avg":
        return kernels.avgpool2d_forward(p, cfg.pool_window), None
    if want_switches:
        pooled, sw = kernels.maxpool2d_forward(p, cfg.pool_window, return_switches=True)
        return pooled, sw
    return kernels.maxpool2d_forward(p, cfg.pool_window), None


def head_logits(p_slices, params):
    """Features and logits from P slices, one per segment size, in order.

    The head path is linear in P for avg pooling and no pooling, and for
    fixed routing switches under max pooling.
    """
    pooled = [
        _pool_slice(np.asarray(p, dtype=np.float64), params)[0] for p in p_slices
    ]
    features = np.concatenate([pl.reshape(*pl.shape[:-2], -1) for pl in pooled], axis=-1)
    logits = kernels.dense_forward(features, params.head_weight, params.head_bias)
    return features, logits


def forward(x, params):
    """Full forward pass for one sample (L, v), returning a trace."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.n_variates:
        raise ValueError(f"expected input (L, {params.n_variates}), got {x.shape}")
    z, q, p, pooled, switches = {}, {}, {}, {}, {}
    for m in params.config.segment_sizes:
        z[m] = composition_matrix(x, params, m)
        q[m] = latent(x, params, m)
        p[m] = cross_representation(z[m], q[m])
        pooled[m], sw = _pool_slice(p[m], params, want_switches=True)
        if sw is not None:
            switches[m] = sw
    features = np.concatenate([pooled[m].reshape(-1) for m in params.config.segment_sizes])
    logits = kernels.dense_forward(features, params.head_weight, params.head_bias)
    return ForwardTrace(
        z=z,
        q=q,
        p=p,
        pooled=pooled,
        switches=switches,
        features=features,
        logits=logits,
        predicted_class=int(np.argmax(logits)),
    )


def predict(x, params):
    """Predicted label (argmax of logits, first index on ties) and logits."""
    trace = forward(x, params)
    return trace.predicted_class, trace.logits


# ---------------------------------------------------------------------------
# batched training path


def _dataset_symbols(X, edges):
    """Symbols for a whole dataset, (N, L, v) int16."""
    N, L, v = X.shape
    out = np.empty((N, L, v), dtype=np.int16)
    for c in range(v):
        out[:, :, c] = 1 + np.searchsorted(edges.edges[c], X[:, :, c].ravel(), side="left").reshape(
            N, L
        )
    return out


def _z_batch(sym, bins, segment_sizes):
    """Z slices for a batch of symbol matrices via one shared cumulative sum.

    Counts are small integers, so the cumulative-difference window sum is
    exact and matches symbolic.compose bit for bit.
    """
    B, L, v = sym.shape
    nv = bins * v
    oh = np.zeros((B, L + 1, nv), dtype=np.float64)
    cols = (np.arange(v) * bins)[None, None, :] + (sym.astype(np.int64) - 1)
    oh[
        np.arange(B)[:, None, None],
        np.arange(1, L + 1)[None, :, None],
        cols,
    ] = 1.0
    cs = np.cumsum(oh, axis=1)
    return {m: (cs[:, m:] - cs[:, :-m]) / m for m in segment_sizes}


def _z_batch_raw(xb, params):
    out = {}
    for m in params.config.segment_sizes:
        windows = sliding_window_view(xb, m, axis=-2)  # (B, kappa, v, m)
        flat = windows.transpose(0, 1, 3, 2).reshape(xb.shape[0], -1, m * xb.shape[-1])
        out[m] = flat @ params.z_proj[m].T
    return out


def _forward_batch(xb_pe, zb, params, want_caches=False):
    cfg = params.config
    caches = {"q_pre": {}, "q": {}, "p": {}, "switches": {}}
    slices = []
    for m in cfg.segment_sizes:
        pre = kernels.conv1d_forward(xb_pe, params.conv_kernels[m], params.conv_bias[m])
        qm = _activation(pre, cfg.conv_activation)
        pm = np.swapaxes(zb[m], -1, -2) @ qm
        if cfg.pooling == "none":
            pooled, sw = pm, None
        elif cfg.pooling == "avg":
            pooled, sw = kernels.avgpool2d_forward(pm, cfg.pool_window), None
        else:
            pooled, sw = kernels.maxpool2d_forward(pm, cfg.pool_window, return_switches=True)
        slices.append(pooled)
        if want_caches:
            caches["q_pre"][m] = pre
            caches["q"][m] = qm
            caches["p"][m] = pm
            caches["switches"][m] = sw
    features = np.concatenate([s.reshape(s.shape[0], -1) for s in slices], axis=-1)
    logits = kernels.dense_forward(features, params.head_weight, params.head_bias)
    if want_caches:
        caches["features"] = features
        return logits, caches
    return logits


def _backward_batch(grad_logits, xb_pe, xb_raw, zb, params, caches):
    cfg = params.config
    grads = {}
    grad_feat, g_w, g_b = kernels.dense_backward(
        grad_logits, caches["features"], params.head_weight
    )
    grads["head_weight"] = g_w
    grads["head_bias"] = g_b
    pr, pc = params.pooled_shape
    nv, q = params.symbol_dim, cfg.latent_dim
    off = 0
    for m in cfg.segment_sizes:
        gs = grad_feat[:, off:off + pr * pc].reshape(-1, pr, pc)
        off += pr * pc
        if cfg.pooling == "none":
            d_p = gs
        elif cfg.pooling == "avg":
            d_p = kernels.avgpool2d_backward(gs, (gs.shape[0], nv, q), cfg.pool_window)
        else:
            d_p = kernels.maxpool2d_backward(
                gs, (gs.shape[0], nv, q), cfg.pool_window, caches["switches"][m]
            )
        d_q = zb[m] @ d_p
        if cfg.conv_activation == "relu":
            d_q = d_q * (caches["q_pre"][m] > 0.0)
        _, g_k, g_kb = kernels.conv1d_backward(
            d_q, xb_pe, params.conv_kernels[m], need_input_grad=False
        )
        grads[f"conv_kernels_{m}"] = g_k
        grads[f"conv_bias_{m}"] = g_kb
        if cfg.z_mode == "raw_projection":
            d_z = caches["q"][m] @ np.swapaxes(d_p, -1, -2)  # (B, kappa, nv)
            windows = sliding_window_view(xb_raw, m, axis=-2)
            flat = windows.transpose(0, 1, 3, 2).reshape(xb_raw.shape[0], -1, m * xb_raw.shape[-1])
            grads[f"z_proj_{m}"] = np.einsum("bki,bkl->il", d_z, flat, optimize=True)
    return grads


def _predict_batched(X, params, symbols=None, batch_size=256):
    cfg = params.config
    N = X.shape[0]
    labels = np.empty(N, dtype=np.int64)
    pe = (
        positional_encoding(X.shape[1], params.n_variates)
        if cfg.positional_encoding
        else None
    )
    for lo in range(0, N, batch_size):
        hi = min(lo + batch_size, N)
        xb = np.asarray(X[lo:hi], dtype=np.float64)
        if cfg.z_mode == "symbolic":
            sym = symbols[lo:hi] if symbols is not None else _dataset_symbols(xb, params.edges)
            zb = _z_batch(sym, cfg.bins, cfg.segment_sizes)
        else:
            zb = _z_batch_raw(xb, params)
        xb_pe = xb + pe if pe is not None else xb
        logits = _forward_batch(xb_pe, zb, params)
        labels[lo:hi] = np.argmax(logits, axis=-1)
    return labels


def predict_dataset(X, params, batch_size=256):
    """Predicted labels for a dataset (N, L, v), batched for speed."""
    return _predict_batched(np.asarray(X), params, batch_size=batch_size)


def loss_and_grads(x, label, params):
    """Cross-entropy loss and parameter gradients for one sample.

    Returns (loss, grads) with grads keyed like params.learnables();
    the entry point for gradient checking the full pipeline.
    """
    cfg = params.config
    xb = np.asarray(x, dtype=np.float64)[None]
    xb_pe = conv_input(xb, params)
    if cfg.z_mode == "symbolic":
        zb = _z_batch(
            _dataset_symbols(xb, params.edges), cfg.bins, cfg.segment_sizes
        )
    else:
        zb = _z_batch_raw(xb, params)
    logits, caches = _forward_batch(xb_pe, zb, params, want_caches=True)
    loss_vec, grad_ce = kernels.softmax_cross_entropy(logits, np.array([label]))
    grads = _backward_batch(grad_ce, xb_pe, xb, zb, params, caches)
    return float(loss_vec[0]), grads


def accuracy(X, y, params, batch_size=256):
    labels = predict_dataset(X, params, batch_size=batch_size)
    return float(np.mean(labels == np.asarray(y)))


def train(X_train, y_train, X_valid, y_valid, config):
    """Fit a model; returns (best-validation params, history).

    Bins are fitted on the training split only. Batches are reshuffled
    each epoch from a generator seeded by config.seed, the parameters
    with the best validation accuracy are checkpointed (earliest epoch
    wins ties), and training stops after config.patience epochs without
    improvement. History rows record epoch, mean train loss, validation
    accuracy and the running best.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    X_valid = np.asarray(X_valid, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    y_valid = np.asarray(y_valid, dtype=np.int64)
    if X_train.ndim != 3 or X_valid.ndim != 3:
        raise ValueError("training data must be (N, L, v)")
    if X_train.shape[1:] != X_valid.shape[1:]:
        raise ValueError(
            f"train/valid shape mismatch: {X_train.shape[1:]} vs {X_valid.shape[1:]}"
        )
    N, L, v = X_train.shape
    if y_train.shape != (N,) or y_valid.shape != (X_valid.shape[0],):
        raise ValueError("label arrays do not match data")
    if y_train.min() < 0:
        raise ValueError("labels must be non-negative")
    n_classes = max(2, int(max(y_train.max(), y_valid.max())) + 1)

    rng = np.random.default_rng(config.seed)
    params = init_params(config, L, v, n_classes, rng)
    if config.z_mode == "symbolic":
        params.edges = symbolic.fit_bins(
            X_train, symbolic.DiscretizerConfig(bins=config.bins, strategy=config.bin_strategy)
        )
        sym_train = _dataset_symbols(X_train, params.edges)
        sym_valid = _dataset_symbols(X_valid, params.edges)
    else:
        sym_train = sym_valid = None

    logger.info(
        "training: %d samples, L=%d, v=%d, %d classes, %d trainable parameters",
        N, L, v, n_classes, params.parameter_count,
    )

    pe = positional_encoding(L, v) if config.positional_encoding else None
    arrays = params.learnables()
    state = kernels.adam_init(arrays, lr=config.learning_rate)
    best = params.copy()
    best_acc = -1.0
    best_epoch = -1
    history = []

    for epoch in range(config.max_epochs):
        perm = rng.permutation(N)
        losses = []
        for lo in range(0, N, config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            xb = X_train[idx]
            xb_pe = xb + pe if pe is not None else xb
            if config.z_mode == "symbolic":
                zb = _z_batch(sym_train[idx], config.bins, config.segment_sizes)
            else:
                zb = _z_batch_raw(xb, params)
            logits, caches = _forward_batch(xb_pe, zb, params, want_caches=True)
            if not np.isfinite(logits).all():
                raise TrainingDiverged(f"non-finite logits at epoch {epoch}")
            loss_vec, grad_ce = kernels.softmax_cross_entropy(logits, y_train[idx])
            losses.append(float(loss_vec.mean()))
            grads = _backward_batch(grad_ce / len(idx), xb_pe, xb, zb, params, caches)
            arrays = kernels.adam_step(arrays, grads, state)
            params = params.with_learnables(arrays)
        mean_loss = float(np.mean(losses))
        if not np.isfinite(mean_loss):
            raise TrainingDiverged(f"non-finite training loss at epoch {epoch}")
        val_labels = _predict_batched(X_valid, params, symbols=sym_valid)
        val_acc = float(np.mean(val_labels == y_valid))
        if val_acc > best_acc:
            best_acc = val_acc
            best_epoch = epoch
            best = params.copy()
        history.append(
            {
                "epoch": epoch,
                "train_loss": mean_loss,
                "val_accuracy": val_acc,
                "best_val_accuracy": best_acc,
            }
        )
        logger.info(
            "epoch %3d  loss %.4f  val_acc %.4f  best %.4f", epoch, mean_loss, val_acc, best_acc
        )
        if epoch - best_epoch >= config.patience:
            logger.info("early stop at epoch %d (best epoch %d)", epoch, best_epoch)
            break
    return best, history


# ---------------------------------------------------------------------------
# serialization


def save_model(params, path, extra_meta=None, history=None):
    """Write a model directory: model.json plus a float64 little-endian blob.

    The JSON declares the weight order; the blob concatenates the arrays
    in exactly that order.
    """
    import os

    os.makedirs(path, exist_ok=True)
    arrays = params.learnables()
    order = [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()]
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": dataclasses.asdict(params.config),
        "length": params.length,
        "n_variates": params.n_variates,
        "n_classes": params.n_classes,
        "parameter_count": params.parameter_count,
        "bin_edges": params.edges.edges.tolist() if params.edges is not None else None,
        "weights": order,
    }
    if extra_meta:
        meta.update(extra_meta)
    with open(os.path.join(path, "model.json"), "w") as f:
        json.dump(meta, f, indent=1)
    blob = np.concatenate([v.reshape(-1) for v in arrays.values()])
    blob.astype("<f8").tofile(os.path.join(path, "weights.f64le"))
    if history is not None:
        with open(os.path.join(path, "history.json"), "w") as f:
            json.dump(history, f, indent=1)


def load_model(path):
    """Read a model directory written by save_model."""
    import os

    meta_path = os.path.join(path, "model.json")
    blob_path = os.path.join(path, "weights.f64le")
    if not os.path.isfile(meta_path) or not os.path.isfile(blob_path):
        raise ModelFormatError(f"{path} is not a model directory")
    try:
        with open(meta_path) as f:
            meta = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"corrupt model metadata: {e}") from e
    if meta.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {meta.get('format_version')}")
    cfg_dict = dict(meta["config"])
    cfg_dict["segment_sizes"] = tuple(cfg_dict["segment_sizes"])
    config = ModelConfig(**cfg_dict)
    blob = np.fromfile(blob_path, dtype="<f8")
    expected = sum(int(np.prod(w["shape"])) for w in meta["weights"])
    if blob.size != expected:
        raise ModelFormatError(
            f"weight blob holds {blob.size} values, metadata declares {expected}"
        )
    arrays = {}
    off = 0
    for w in meta["weights"]:
        size = int(np.prod(w["shape"]))
        arrays[w["name"]] = blob[off:off + size].reshape(w["shape"]).astype(np.float64)
        off += size
    edges = None
    if meta["bin_edges"] is not None:
        edges = symbolic.BinEdges(edges=np.array(meta["bin_edges"], dtype=np.float64),
                                  bins=config.bins)
    params = ModelParams(
        config=config,
        length=int(meta["length"]),
        n_variates=int(meta["n_variates"]),
        n_classes=int(meta["n_classes"]),
        edges=edges,
        conv_kernels={},
        conv_bias={},
        head_weight=np.zeros((1, 1)),
        head_bias=np.zeros(1),
    )
    params = params.with_learnables(arrays)
    if params.parameter_count != meta["parameter_count"]:
        raise ModelFormatError("parameter count mismatch between metadata and blob")
    return params
