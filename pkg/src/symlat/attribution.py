"""Attribution of class evidence to segments and time points.

For target class c, the head gradient g_ij = d logit_c / d P_ij routes
class evidence back onto the cross-representation. Each segment k
contributes Z_ki * Q_kj to P_ij; the supporting share is

    zeta+_{k,ij} = |g_ij| * gate(sign(g_ij) Z_ki Q_kj) / D+_ij

and the opposing share zeta-_{k,ij} uses the flipped sign. With
max-scaling on, D_ij is the per-(i, j) maximum of the gated terms over
segments plus epsilon, so the strongest segment meets its gradient
magnitude; with it off, D_ij = 1. Segment sums phi+-_k are mapped to time
points by reducing over all segments covering each point, then summed
across segment sizes.

With the default ReLU gate, no max-scaling and a bias-free head, the
summed signed contributions reproduce the target logit exactly
(ReLU(a) - ReLU(-a) = a, and sign(g)|g| = g).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, model

GATES = ("relu", "abs", "sigmoid", "tanh", "identity")
REDUCTIONS = ("mean", "sum")


@dataclass(frozen=True)
class AttributionConfig:
    gate: str = "relu"
    max_scaling: bool = True
    epsilon: float = 1e-18
    reduction: str = "mean"
    target: int | None = None

    def __post_init__(self):
        if self.gate not in GATES:
            raise ValueError(f"gate must be one of {GATES}, got {self.gate!r}")
        if self.reduction not in REDUCTIONS:
            raise ValueError(f"reduction must be one of {REDUCTIONS}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class AttributionResult:
    phi_pos: np.ndarray  # (L,) supporting evidence per time point
    phi_neg: np.ndarray  # (L,) opposing evidence per time point
    segment_pos: dict  # segment size -> (kappa,)
    segment_neg: dict
    gradients: dict  # segment size -> (n*v, q)
    target_class: int
    sample_dependent_gradient: bool


def _gate(a, kind):
    if kind == "relu":
        return np.maximum(a, 0.0)
    if kind == "abs":
        return np.abs(a)
    if kind == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * a))  # overflow-safe logistic
    if kind == "tanh":
        return np.tanh(a)
    return a


def logit_gradients(params, trace, target):
    """d logit_target / d P for each segment size.

    Routes the head-weight row back through flattening and pooling. For
    average pooling and no pooling the result depends only on the weights,
    so it is sample-independent; max pooling routes through the trace's
    argmax switches, making it sample-dependent (flagged in the second
    return value).
    """
    cfg = params.config
    if not 0 <= target < params.n_classes:
        raise ValueError(f"target class {target} out of range [0, {params.n_classes})")
    row = params.head_weight[target]
    pr, pc = params.pooled_shape
    nv, q = params.symbol_dim, cfg.latent_dim
    grads = {}
    off = 0
    for m in cfg.segment_sizes:
        gs = row[off:off + pr * pc].reshape(pr, pc)
        off += pr * pc
        if cfg.pooling == "none":
            grads[m] = gs.copy()
        elif cfg.pooling == "avg":
            grads[m] = kernels.avgpool2d_backward(gs, (nv, q), cfg.pool_window)
        else:
            grads[m] = kernels.maxpool2d_backward(
                gs, (nv, q), cfg.pool_window, trace.switches[m]
            )
    return grads, cfg.pooling == "max"


def segment_contributions(g, z, q, config):
    """Scaled supporting/opposing contributions (kappa, n*v, q) of each segment."""
    g = np.asarray(g, dtype=np.float64)
    prod = z[:, :, None] * q[:, None, :]
    sign = np.sign(g)[None]
    a_pos = _gate(sign * prod, config.gate)
    a_neg = _gate(-sign * prod, config.gate)
    if config.max_scaling:
        den_pos = a_pos.max(axis=0) + config.epsilon
        den_neg = a_neg.max(axis=0) + config.epsilon
    else:
        den_pos = den_neg = 1.0
    mag = np.abs(g)[None]
    return mag * a_pos / den_pos, mag * a_neg / den_neg


def to_timepoints(seg_scores, m, length, reduction="mean"):
    """Map per-segment scores (kappa,) to per-time-point scores (length,).

    Time point t is covered by segments max(0, t-m+1) .. min(t, kappa-1);
    the reduction over covering segments is their mean or sum.
    """
    seg_scores = np.asarray(seg_scores, dtype=np.float64)
    kappa = seg_scores.shape[0]
    if kappa != length - m + 1:
        raise ValueError(f"expected {length - m + 1} segment scores, got {kappa}")
    t = np.arange(length)
    lo = np.maximum(0, t - m + 1)
    hi = np.minimum(t, kappa - 1)
    cs = np.concatenate([[0.0], np.cumsum(seg_scores)])
    sums = cs[hi + 1] - cs[lo]
    if reduction == "sum":
        return sums
    return sums / (hi - lo + 1)


def attribute(x, params, config):
    """Attribution scores for one sample (L, v).

    The target class defaults to the predicted class (raw logits); per-size
    time-point vectors are computed first, then summed over segment sizes.
    """
    x = np.asarray(x, dtype=np.float64)
    trace = model.forward(x, params)
    target = config.target if config.target is not None else trace.predicted_class
    grads, sample_dep = logit_gradients(params, trace, target)
    L = x.shape[0]
    phi_pos = np.zeros(L)
    phi_neg = np.zeros(L)
    segment_pos, segment_neg = {}, {}
    for m in params.config.segment_sizes:
        zp, zn = segment_contributions(grads[m], trace.z[m], trace.q[m], config)
        segment_pos[m] = zp.sum(axis=(1, 2))
        segment_neg[m] = zn.sum(axis=(1, 2))
        phi_pos += to_timepoints(segment_pos[m], m, L, reduction=config.reduction)
        phi_neg += to_timepoints(segment_neg[m], m, L, reduction=config.reduction)
    return AttributionResult(
        phi_pos=phi_pos,
        phi_neg=phi_neg,
        segment_pos=segment_pos,
        segment_neg=segment_neg,
        gradients=grads,
        target_class=target,
        sample_dependent_gradient=sample_dep,
    )


def _attribute_chunk(args):
    X, params, config = args
    return [attribute(x, params, config) for x in X]


def attribute_dataset(X, params, config, jobs=1):
    """Attributions for every sample of (N, L, v); returns a list of results.

    Samples are independent, so jobs > 1 splits them over forked workers
    without changing any result.
    """
    X = np.asarray(X)
    if jobs > 1 and X.shape[0] > 1:
        import multiprocessing

        ctx = multiprocessing.get_context("fork")
        chunks = [c for c in np.array_split(X, jobs) if c.shape[0]]
        with ctx.Pool(processes=len(chunks)) as pool:
            parts = pool.map(_attribute_chunk, [(c, params, config) for c in chunks])
        return [res for part in parts for res in part]
    return [attribute(X[i], params, config) for i in range(X.shape[0])]


def write_attributions(results, path, header_meta=None):
    """Export attributions as delimited text, one row per (sample, time point).

    Leading '#' lines carry key=value metadata (e.g. the config hash),
    followed by a CSV header and rows sample_id,t,phi_plus,phi_minus,
    predicted_class ordered by sample then time.
    """
    with open(path, "w") as f:
        for key, value in (header_meta or {}).items():
            f.write(f"# {key}={value}\n")
        f.write("sample_id,t,phi_plus,phi_minus,predicted_class\n")
        for i, res in enumerate(results):
            for t in range(res.phi_pos.shape[0]):
                f.write(
                    f"{i},{t},{res.phi_pos[t]:.17g},{res.phi_neg[t]:.17g},"
                    f"{res.target_class}\n"
                )


def read_attributions(path):
    """Read an attribution export; returns a dict with phi arrays and metadata.

    Keys: phi_pos (N, L), phi_neg (N, L), predicted (N,), meta (dict of
    '#' header fields).
    """
    meta = {}
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, value = body.split("=", 1)
                    meta[key.strip()] = value.strip()
                continue
            if line.startswith("sample_id,"):
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"malformed attribution row: {line!r}")
            rows.append(
                (int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]),
                 int(parts[4]))
            )
    if not rows:
        raise ValueError("attribution file holds no rows")
    n = max(r[0] for r in rows) + 1
    length = max(r[1] for r in rows) + 1
    if len(rows) != n * length:
        raise ValueError(
            f"attribution file holds {len(rows)} rows, expected {n}x{length}"
        )
    phi_pos = np.zeros((n, length))
    phi_neg = np.zeros((n, length))
    predicted = np.zeros(n, dtype=np.int64)
    for sid, t, pp, pn, cls in rows:
        phi_pos[sid, t] = pp
        phi_neg[sid, t] = pn
        predicted[sid] = cls
    return {"phi_pos": phi_pos, "phi_neg": phi_neg, "predicted": predicted, "meta": meta}
