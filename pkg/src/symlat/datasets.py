"""Synthetic benchmark generators and the on-disk dataset format.

Every generator is deterministic in (name, seed, parameters): sample i is
drawn from its own counter-based stream keyed by (seed, i), so datasets
are reproducible independent of generation order or worker count.

On disk a dataset is a directory holding meta.json plus row-major
little-endian blobs: x.f32le (N*L*v float32), y.i32le (N int32) and,
when a ground-truth saliency mask exists, g.u8 (N*L bytes in {0, 1}).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

DATASET_FORMAT_VERSION = 1


class DatasetFormatError(Exception):
    """Raised for corrupt or inconsistent dataset files."""


class DatasetVersionError(DatasetFormatError):
    """Raised for an unknown on-disk format version."""


@dataclass
class TimeSeriesDataset:
    x: np.ndarray  # (N, L, v) float32
    y: np.ndarray  # (N,) int32
    mask: np.ndarray | None = None  # (N, L) uint8, 1 marks salient time points
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float32)
        self.y = np.asarray(self.y, dtype=np.int32)
        if self.x.ndim != 3:
            raise ValueError(f"x must be (N, L, v), got {self.x.shape}")
        if self.y.shape != (self.x.shape[0],):
            raise ValueError("y must have one label per sample")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=np.uint8)
            if self.mask.shape != self.x.shape[:2]:
                raise ValueError("mask must be (N, L)")

    @property
    def n_samples(self):
        return self.x.shape[0]

    @property
    def length(self):
        return self.x.shape[1]

    @property
    def n_variates(self):
        return self.x.shape[2]

    @property
    def n_classes(self):
        return int(self.y.max()) + 1 if self.y.size else 0


def _rng(seed, index):
    """Counter-based per-sample stream: key packs (seed, sample index)."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) + int(index)))


def make_freqsum(
    n_samples,
    seed,
    length=500,
    n_variates=6,
    baseline_freq=(2.0, 5.0),
    signal_freq=(10, 50),
    signal_window=100,
    threshold=60,
    square_prob=0.5,
    duration=1.0,
):
    """Frequency-sum task: six sine features on a shared time axis.

    The axis spans `duration` time units over `length` samples, so a
    frequency-f component completes f * duration cycles across the
    series. Two randomly chosen features receive an added discriminative
    sine with an integer frequency from signal_freq, supported on a
    window of signal_window steps; the label is 1 iff the two
    frequencies sum to more than threshold. Each remaining feature gains
    a full-length unit square wave with probability square_prob. The
    mask marks the union of the two windows.
    """
    L, v, W = length, n_variates, signal_window
    t = np.arange(L) * (duration / L)
    X = np.empty((n_samples, L, v), dtype=np.float32)
    y = np.empty(n_samples, dtype=np.int32)
    G = np.zeros((n_samples, L), dtype=np.uint8)
    for i in range(n_samples):
        rng = _rng(seed, i)
        x = np.zeros((L, v))
        for c in range(v):
            f = rng.uniform(*baseline_freq)
            ph = rng.uniform(0.0, 2.0 * np.pi)
            x[:, c] = np.sin(2.0 * np.pi * f * t + ph)
        feats = np.sort(rng.choice(v, size=2, replace=False))
        freqs = rng.integers(signal_freq[0], signal_freq[1] + 1, size=2)
        starts = rng.integers(0, L - W + 1, size=2)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
        for k in range(2):
            sl = slice(int(starts[k]), int(starts[k]) + W)
            x[sl, feats[k]] += np.sin(2.0 * np.pi * freqs[k] * t[sl] + phases[k])
            G[i, sl] = 1
        for c in range(v):
            if c in feats:
                continue
            if rng.random() < square_prob:
                f = rng.integers(signal_freq[0], signal_freq[1] + 1)
                ph = rng.uniform(0.0, 2.0 * np.pi)
                x[:, c] += np.sign(np.sin(2.0 * np.pi * f * t + ph))
        X[i] = x
        y[i] = 1 if int(freqs.sum()) > threshold else 0
    prov = {
        "generator": "freqsum",
        "seed": int(seed),
        "params": {
            "length": L, "n_variates": v, "baseline_freq": list(baseline_freq),
            "signal_freq": list(signal_freq), "signal_window": W,
            "threshold": threshold, "square_prob": square_prob,
            "duration": duration,
        },
    }
    return TimeSeriesDataset(x=X, y=y, mask=G, provenance=prov)


def _seqcomb(n_samples, seed, length, n_variates, window, slope, noise_sigma):
    L, v, W = length, n_variates, window
    if 2 * W > L:
        raise ValueError(f"two disjoint windows of {W} do not fit in length {L}")
    X = np.empty((n_samples, L, v), dtype=np.float32)
    y = np.empty(n_samples, dtype=np.int32)
    G = np.zeros((n_samples, L), dtype=np.uint8)
    ramp = np.arange(1, W + 1, dtype=np.float64)
    for i in range(n_samples):
        rng = _rng(seed, i)
        label = i % 4
        x = rng.normal(0.0, noise_sigma, size=(L, v))
        # keep three window lengths of clearance so the earlier/later roles
        # stay unambiguous under the positional encoding
        s1 = int(rng.integers(0, L - W + 1))
        s2 = int(rng.integers(0, L - W + 1))
        while abs(s2 - s1) < 3 * W:
            s2 = int(rng.integers(0, L - W + 1))
        early, late = sorted((s1, s2))
        # class bits: (earlier trend, later trend), 0 = up, 1 = down
        trends = (label >> 1, label & 1)
        for s, bit in ((early, trends[0]), (late, trends[1])):
            ch = int(rng.integers(0, v)) if v > 1 else 0
            direction = 1.0 if bit == 0 else -1.0
            x[s:s + W, ch] = direction * slope * ramp
            G[i, s:s + W] = 1
        X[i] = x
        y[i] = label
    return X, y, G


def make_seqcomb_uv(n_samples, seed, length=200, window=20, slope=0.5, noise_sigma=1.0):
    """Two disjoint linear trend windows on one channel; four classes from
    the ordered pair (earlier trend, later trend) with up-up = 0, up-down = 1,
    down-up = 2, down-down = 3. Labels are assigned round-robin, so any
    sample count divisible by four is exactly balanced."""
    X, y, G = _seqcomb(n_samples, seed, length, 1, window, slope, noise_sigma)
    prov = {
        "generator": "seqcomb_uv",
        "seed": int(seed),
        "params": {"length": length, "window": window, "slope": slope,
                   "noise_sigma": noise_sigma},
    }
    return TimeSeriesDataset(x=X, y=y, mask=G, provenance=prov)


def make_seqcomb_mv(n_samples, seed, length=200, n_variates=4, window=20, slope=0.5,
                    noise_sigma=1.0):
    """Multivariate variant: each trend window lands on a random channel."""
    X, y, G = _seqcomb(n_samples, seed, length, n_variates, window, slope, noise_sigma)
    prov = {
        "generator": "seqcomb_mv",
        "seed": int(seed),
        "params": {"length": length, "n_variates": n_variates, "window": window,
                   "slope": slope, "noise_sigma": noise_sigma},
    }
    return TimeSeriesDataset(x=X, y=y, mask=G, provenance=prov)


def make_lowvar(n_samples, seed, length=200, window=20, variance_ratio=0.1,
                shifts=(-1.5, 1.5)):
    """Low-variance window task on two channels.

    One window of reduced variance and shifted mean replaces the unit
    background noise on one channel; the four classes encode
    (channel, shift sign) as 2 * channel + (shift > 0).
    """
    L, W = length, window
    if W > L:
        raise ValueError(f"window {W} exceeds length {L}")
    X = np.empty((n_samples, L, 2), dtype=np.float32)
    y = np.empty(n_samples, dtype=np.int32)
    G = np.zeros((n_samples, L), dtype=np.uint8)
    sd = float(np.sqrt(variance_ratio))
    for i in range(n_samples):
        rng = _rng(seed, i)
        label = i % 4
        channel, shift = label >> 1, shifts[label & 1]
        x = rng.normal(0.0, 1.0, size=(L, 2))
        s = int(rng.integers(0, L - W + 1))
        x[s:s + W, channel] = shift + rng.normal(0.0, sd, size=W)
        G[i, s:s + W] = 1
        X[i] = x
        y[i] = label
    prov = {
        "generator": "lowvar",
        "seed": int(seed),
        "params": {"length": L, "window": W, "variance_ratio": variance_ratio,
                   "shifts": list(shifts)},
    }
    return TimeSeriesDataset(x=X, y=y, mask=G, provenance=prov)


def farfield_pairing_score(x):
    """Sum of mirror-pair products sum_j x_j * x_(L+1-j) over the first half
    (1-indexed); the quantity whose sign labels a far-field sample."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    L = x.shape[0]
    if L % 2 != 0:
        raise ValueError(f"series length must be even, got {L}")
    half = L // 2
    return float(x[:half] @ x[:half - L - 1:-1])


def make_farfield(n_samples, seed, length=100, freq_range=(1.0, 10.0), noise_scale=0.01):
    """Mirror-pair product task with no local decision rule.

    x(t) = sin(f t + phase) + eta(t) * (t - L/2) for t = 1..L, with f
    continuous-uniform and eta Gaussian of scale noise_scale. The label is
    1 iff the pairing score of the stored (float32) series is positive, so
    labels are exactly recomputable from x. No saliency mask exists.
    """
    L = length
    if L % 2 != 0:
        raise ValueError(f"series length must be even, got {L}")
    t = np.arange(1, L + 1, dtype=np.float64)
    X = np.empty((n_samples, L, 1), dtype=np.float32)
    y = np.empty(n_samples, dtype=np.int32)
    for i in range(n_samples):
        rng = _rng(seed, i)
        f = rng.uniform(*freq_range)
        ph = rng.uniform(0.0, 2.0 * np.pi)
        eta = rng.normal(0.0, noise_scale, size=L)
        x = np.sin(f * t + ph) + eta * (t - L / 2.0)
        X[i, :, 0] = x
        y[i] = 1 if farfield_pairing_score(X[i]) > 0 else 0
    prov = {
        "generator": "farfield",
        "seed": int(seed),
        "params": {"length": L, "freq_range": list(freq_range),
                   "noise_scale": noise_scale},
    }
    return TimeSeriesDataset(x=X, y=y, mask=None, provenance=prov)


GENERATORS = {
    "freqsum": make_freqsum,
    "seqcomb_uv": make_seqcomb_uv,
    "seqcomb_mv": make_seqcomb_mv,
    "lowvar": make_lowvar,
    "farfield": make_farfield,
}


def generate(name, n_samples, seed, **params):
    """Dispatch to a named generator."""
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    return GENERATORS[name](n_samples, seed, **params)


def save_dataset(dataset, path, extra_meta=None):
    """Write a dataset directory: meta.json plus raw little-endian blobs."""
    os.makedirs(path, exist_ok=True)
    meta = {
        "format_version": DATASET_FORMAT_VERSION,
        "n_samples": dataset.n_samples,
        "length": dataset.length,
        "n_variates": dataset.n_variates,
        "n_classes": dataset.n_classes,
        "has_mask": dataset.mask is not None,
        "provenance": dataset.provenance,
    }
    if extra_meta:
        meta.update(extra_meta)
    with open(os.path.join(path, "meta.json"), "w") as f:
        json.dump(meta, f, indent=1)
    dataset.x.astype("<f4").tofile(os.path.join(path, "x.f32le"))
    dataset.y.astype("<i4").tofile(os.path.join(path, "y.i32le"))
    if dataset.mask is not None:
        dataset.mask.astype(np.uint8).tofile(os.path.join(path, "g.u8"))


def load_dataset(path):
    """Read a dataset directory written by save_dataset, validating sizes."""
    meta_path = os.path.join(path, "meta.json")
    if not os.path.isfile(meta_path):
        raise DatasetFormatError(f"{path} has no meta.json")
    try:
        with open(meta_path) as f:
            meta = json.load(f)
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"corrupt dataset header: {e}") from e
    version = meta.get("format_version")
    if version != DATASET_FORMAT_VERSION:
        raise DatasetVersionError(f"unknown dataset format version {version!r}")
    for key in ("n_samples", "length", "n_variates", "has_mask"):
        if key not in meta:
            raise DatasetFormatError(f"dataset header missing field {key!r}")
    N, L, v = meta["n_samples"], meta["length"], meta["n_variates"]
    x = np.fromfile(os.path.join(path, "x.f32le"), dtype="<f4")
    if x.size != N * L * v:
        raise DatasetFormatError(
            f"x blob holds {x.size} values, header declares {N * L * v}"
        )
    y = np.fromfile(os.path.join(path, "y.i32le"), dtype="<i4")
    if y.size != N:
        raise DatasetFormatError(f"y blob holds {y.size} labels, header declares {N}")
    mask = None
    if meta["has_mask"]:
        mask = np.fromfile(os.path.join(path, "g.u8"), dtype=np.uint8)
        if mask.size != N * L:
            raise DatasetFormatError(
                f"mask blob holds {mask.size} bytes, header declares {N * L}"
            )
        mask = mask.reshape(N, L)
    return TimeSeriesDataset(
        x=x.reshape(N, L, v),
        y=y,
        mask=mask,
        provenance=meta.get("provenance", {}),
    )


def import_csv(csv_path, layout):
    """Import a long-format CSV: one row per time step, rows grouped by sample.

    layout declares the length, the sample and label columns and the value
    columns, e.g. {"length": 20, "sample_column": "sample",
    "label_column": "label", "value_columns": ["a", "b"]}. Every sample
    must have exactly `length` rows, one consistent integer label, and
    labels must cover a contiguous range starting at 0.
    """
    import csv

    for key in ("length", "sample_column", "label_column", "value_columns"):
        if key not in layout:
            raise DatasetFormatError(f"layout missing field {key!r}")
    L = int(layout["length"])
    vcols = list(layout["value_columns"])
    with open(csv_path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise DatasetFormatError("CSV file has no header row")
        needed = {layout["sample_column"], layout["label_column"], *vcols}
        missing = needed - set(reader.fieldnames)
        if missing:
            raise DatasetFormatError(f"CSV missing columns {sorted(missing)}")
        samples = []  # (id, label, rows)
        current_id = None
        for lineno, row in enumerate(reader, start=2):
            sid = row[layout["sample_column"]]
            try:
                label = int(row[layout["label_column"]])
                values = [float(row[c]) for c in vcols]
            except ValueError as e:
                raise DatasetFormatError(f"line {lineno}: {e}") from e
            if sid != current_id:
                if any(sid == s[0] for s in samples):
                    raise DatasetFormatError(
                        f"line {lineno}: sample {sid!r} is not contiguous"
                    )
                samples.append((sid, label, []))
                current_id = sid
            elif label != samples[-1][1]:
                raise DatasetFormatError(
                    f"line {lineno}: sample {sid!r} has inconsistent labels "
                    f"{samples[-1][1]} and {label}"
                )
            samples[-1][2].append(values)
    if not samples:
        raise DatasetFormatError("CSV contains no data rows")
    for sid, _, rows in samples:
        if len(rows) != L:
            raise DatasetFormatError(
                f"sample {sid!r} has {len(rows)} rows, expected {L}"
            )
    labels = np.array([s[1] for s in samples], dtype=np.int32)
    if labels.min() < 0 or set(np.unique(labels)) != set(range(labels.max() + 1)):
        raise DatasetFormatError(
            f"labels must cover 0..C-1 without gaps, got {sorted(set(labels))}"
        )
    x = np.array([s[2] for s in samples], dtype=np.float32)
    return TimeSeriesDataset(
        x=x,
        y=labels,
        mask=None,
        provenance={"generator": "csv", "source": os.path.basename(str(csv_path))},
    )
