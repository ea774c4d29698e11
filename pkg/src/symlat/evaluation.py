"""Explainability and backbone evaluation: AUPRC, masking curves, retraining.

Attribution quality is scored against ground-truth masks by AUPRC over a
threshold sweep of softmax-normalized scores. Faithfulness is probed two
ways: occlusion curves (keep only the top-u% salient points, retrain from
scratch, track accuracy) and negative-evidence masking (zero the most
opposing points, track the predicted logit without retraining).
"""

from __future__ import annotations

import dataclasses
import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import datasets as datasets_mod
from . import model

logger = logging.getLogger(__name__)

DEFAULT_U_GRID = (1, 2, 5, 10, 15, 20, 30, 40, 50, 75, 100)


def _softmax(scores):
    z = scores - scores.max()
    e = np.exp(z)
    return e / e.sum()


def auprc(scores, mask):
    """Area under the precision-recall curve of one sample's saliency scores.

    Scores (L,) are softmax-normalized; every unique value serves as a
    threshold (prediction: score >= threshold) and the area is
    sum_k (R_k - R_{k-1}) * P_k over descending thresholds. Constant
    scores therefore yield the positive fraction. The mask (L,) must
    contain at least one positive.
    """
    scores = np.asarray(scores, dtype=np.float64)
    mask = np.asarray(mask)
    if scores.shape != mask.shape or scores.ndim != 1:
        raise ValueError(f"scores {scores.shape} and mask {mask.shape} must be equal 1-D")
    total = int((mask == 1).sum())
    if total == 0:
        raise ValueError("mask has no positive time points")
    p = _softmax(scores)
    order = np.argsort(-p, kind="stable")
    sorted_p = p[order]
    sorted_y = (mask[order] == 1).astype(np.int64)
    tp = np.cumsum(sorted_y)
    # group boundaries: last index of each run of equal scores
    boundary = np.flatnonzero(np.diff(sorted_p) != 0.0)
    idx = np.concatenate([boundary, [p.size - 1]])
    precision = tp[idx] / (idx + 1)
    recall = tp[idx] / total
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(((recall - prev_recall) * precision).sum())


def auprc_dataset(scores, masks):
    """Mean AUPRC over samples; all-zero-mask samples are skipped with a warning.

    Returns (mean, per-sample array with NaN at skipped samples, n_skipped).
    """
    scores = np.asarray(scores, dtype=np.float64)
    masks = np.asarray(masks)
    if scores.shape != masks.shape:
        raise ValueError("scores and masks must align")
    values = np.full(scores.shape[0], np.nan)
    skipped = 0
    for i in range(scores.shape[0]):
        if (masks[i] == 1).sum() == 0:
            skipped += 1
            continue
        values[i] = auprc(scores[i], masks[i])
    if skipped:
        warnings.warn(f"skipped {skipped} samples with all-zero ground-truth masks")
    if skipped == scores.shape[0]:
        raise ValueError("every sample has an all-zero mask")
    return float(np.nanmean(values)), values, skipped


def top_k_indices(scores, k):
    """Indices of the k largest scores, ties broken by ascending index."""
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    return order[:k]


def mask_top(dataset, scores, u, direction="keep_top"):
    """Zero time points by saliency rank; u is a percentage of the length.

    keep_top keeps the ceil(u * L / 100) highest-scored time points per
    sample and zeroes the rest; mask_top zeroes exactly those points
    instead. All channels of a zeroed time point are cleared.
    """
    if direction not in ("keep_top", "mask_top"):
        raise ValueError(f"unknown direction {direction!r}")
    if direction == "keep_top" and not 0 < u <= 100:
        raise ValueError(f"u must be in (0, 100], got {u}")
    if direction == "mask_top" and not 0 <= u <= 100:
        raise ValueError(f"u must be in [0, 100], got {u}")
    scores = np.asarray(scores, dtype=np.float64)
    N, L = dataset.x.shape[:2]
    if scores.shape != (N, L):
        raise ValueError(f"scores must be ({N}, {L}), got {scores.shape}")
    k = int(np.ceil(u * L / 100.0))
    x = dataset.x.copy()
    for i in range(N):
        top = top_k_indices(scores[i], k)
        if direction == "keep_top":
            keep = np.zeros(L, dtype=bool)
            keep[top] = True
            x[i, ~keep, :] = 0.0
        else:
            x[i, top, :] = 0.0
    prov = dict(dataset.provenance)
    prov["masking"] = {"direction": direction, "u": u}
    return datasets_mod.TimeSeriesDataset(x=x, y=dataset.y.copy(),
                                          mask=None if dataset.mask is None
                                          else dataset.mask.copy(),
                                          provenance=prov)


def random_scores(seed, n_samples, length):
    """Seeded uniform saliency scores, one counter-based stream per sample."""
    out = np.empty((n_samples, length))
    for i in range(n_samples):
        rng = np.random.Generator(np.random.Philox(key=(int(seed) << 64) + i))
        out[i] = rng.uniform(size=length)
    return out


def majority_class_accuracy(y):
    """Accuracy of always predicting the most frequent class."""
    y = np.asarray(y)
    return float(np.bincount(y).max() / y.size)


@dataclass
class OcclusionReport:
    u_grid: tuple
    accuracies: dict  # u -> list of per-trial accuracies (NaN for diverged runs)
    e0: float
    trials: int
    point_seeds: dict = field(default_factory=dict)  # u -> list of seeds

    def mean_curve(self):
        us, means, stds = [], [], []
        for u in self.u_grid:
            vals = np.asarray(self.accuracies[u], dtype=np.float64)
            vals = vals[np.isfinite(vals)]
            if vals.size == 0:
                continue
            us.append(u)
            means.append(float(vals.mean()))
            stds.append(float(vals.std()))
        return us, means, stds

    def integral(self, up_to):
        """Trapezoidal area under the curve on [0, up_to], anchored at e(0)."""
        us, means, _ = self.mean_curve()
        xs = [0.0] + [u for u in us if u <= up_to]
        ys = [self.e0] + [m for u, m in zip(us, means) if u <= up_to]
        if len(xs) < 2:
            raise ValueError(f"no occlusion points at or below u={up_to}")
        return float(np.trapezoid(ys, xs))


def _occlusion_point(args):
    (u, trial, point_seed, config, n_classes_hint,
     train_ds, valid_ds, test_ds, scores) = args
    masked_train = mask_top(train_ds, scores["train"], u, direction="keep_top")
    masked_valid = mask_top(valid_ds, scores["valid"], u, direction="keep_top")
    masked_test = mask_top(test_ds, scores["test"], u, direction="keep_top")
    cfg = dataclasses.replace(config, seed=point_seed)
    try:
        params, _ = model.train(
            masked_train.x, masked_train.y, masked_valid.x, masked_valid.y, cfg
        )
        return u, trial, model.accuracy(masked_test.x, masked_test.y, params)
    except model.TrainingDiverged:
        logger.warning("occlusion point u=%s trial=%d diverged; recorded as NaN", u, trial)
        return u, trial, float("nan")


def occlusion_curve(train_ds, valid_ds, test_ds, scores, config,
                    u_grid=DEFAULT_U_GRID, trials=1, jobs=1):
    """Retrain-from-scratch occlusion curve.

    scores maps split name ("train", "valid", "test") to per-sample
    saliency arrays from a frozen explainer. For each u in the grid and
    each trial, the three splits are masked to their top-u% points, a
    fresh model is trained on the masked train/valid splits with a
    point-specific seed, and masked-test accuracy is recorded. e(0) is
    anchored at the majority-class accuracy of the test labels.
    """
    for name, ds in (("train", train_ds), ("valid", valid_ds), ("test", test_ds)):
        if name not in scores:
            raise ValueError(f"scores missing split {name!r}")
        if np.asarray(scores[name]).shape != ds.x.shape[:2]:
            raise ValueError(f"scores for {name!r} do not match the dataset")
    tasks = []
    point_seeds = {u: [] for u in u_grid}
    for ui, u in enumerate(u_grid):
        for trial in range(trials):
            point_seed = config.seed + 1000 * (trial + 1) + ui
            point_seeds[u].append(point_seed)
            tasks.append((u, trial, point_seed, config, None,
                          train_ds, valid_ds, test_ds, scores))
    if jobs > 1:
        import multiprocessing

        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=jobs) as pool:
            results = pool.map(_occlusion_point, tasks)
    else:
        results = [_occlusion_point(t) for t in tasks]
    accuracies = {u: [float("nan")] * trials for u in u_grid}
    for u, trial, acc in results:
        accuracies[u][trial] = acc
        logger.info("occlusion u=%-3s trial=%d accuracy=%.4f", u, trial, acc)
    return OcclusionReport(
        u_grid=tuple(u_grid),
        accuracies=accuracies,
        e0=majority_class_accuracy(test_ds.y),
        trials=trials,
        point_seeds=point_seeds,
    )


def write_occlusion_report(report, csv_path, summary_path, extra_meta=None):
    """Write the per-u curve as CSV and the integrals as a JSON summary."""
    us, means, stds = report.mean_curve()
    with open(csv_path, "w") as f:
        for key, value in (extra_meta or {}).items():
            f.write(f"# {key}={value}\n")
        f.write("u,mean_accuracy,std_accuracy\n")
        f.write(f"0,{report.e0:.10g},0\n")
        for u, m, s in zip(us, means, stds):
            f.write(f"{u},{m:.10g},{s:.10g}\n")
    summary = {
        "e0": report.e0,
        "u_grid": list(report.u_grid),
        "trials": report.trials,
        "integral_20": report.integral(20) if any(u <= 20 for u in us) else None,
        "integral_full": report.integral(max(report.u_grid)),
        "accuracies": {str(u): report.accuracies[u] for u in report.u_grid},
        "point_seeds": {str(u): report.point_seeds.get(u, []) for u in report.u_grid},
    }
    if extra_meta:
        summary.update(extra_meta)
    with open(summary_path, "w") as f:
        json.dump(summary, f, indent=1)


@dataclass
class NegMaskReport:
    u_list: tuple
    deltas: dict  # u -> (N,) array of logit changes
    n_fallback: int

    def summary(self):
        return {
            str(u): {"mean": float(self.deltas[u].mean()),
                     "std": float(self.deltas[u].std())}
            for u in self.u_list
        }


def delta_logit_neg(params, dataset, attributions, u_list=(2, 5)):
    """Logit change after zeroing the most opposing time points, no retraining.

    For each sample the top ceil(u% * L) points by opposing evidence are
    zeroed and the change in the originally predicted class's raw logit is
    recorded. Samples whose opposing scores are identically zero fall back
    to masking the lowest-supporting points and are counted in n_fallback.
    At u = 0 the delta is exactly 0.
    """
    N, L = dataset.x.shape[:2]
    if len(attributions) != N:
        raise ValueError("need one attribution result per sample")
    deltas = {u: np.zeros(N) for u in u_list}
    n_fallback = 0
    for i in range(N):
        x = np.asarray(dataset.x[i], dtype=np.float64)
        base_label, base_logits = model.predict(x, params)
        phi_neg = attributions[i].phi_neg
        if np.all(phi_neg == 0.0):
            ranking = -attributions[i].phi_pos
            n_fallback += 1
        else:
            ranking = phi_neg
        for u in u_list:
            k = int(np.ceil(u * L / 100.0))
            if k == 0:
                continue
            masked = x.copy()
            masked[top_k_indices(ranking, k), :] = 0.0
            _, logits = model.predict(masked, params)
            deltas[u][i] = logits[base_label] - base_logits[base_label]
    return NegMaskReport(u_list=tuple(u_list), deltas=deltas, n_fallback=n_fallback)
