"""Symbolic path: per-variate binning, one-hot expansion, sliding composition.

A series (L, v) is discretized per variate into symbols 1..n using bin
edges fitted on training data, expanded to a one-hot matrix (L, n*v) with
variate blocks concatenated in variate order, and composed into a matrix
Z (L - m + 1, n*v) whose row k is the mean of one-hot rows k .. k+m-1.
Entries of Z are symbol occupancy fractions inside the window.

Symbols depend only on the ordering of values relative to the fitted
edges, so strictly increasing per-variate transforms applied to both the
training data (edges refitted) and the inputs leave the symbol stream,
and therefore Z, unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

STRATEGIES = ("quantile", "uniform")


@dataclass(frozen=True)
class DiscretizerConfig:
    """Binning settings. word_length is fixed at 1: one symbol per time step."""

    bins: int
    strategy: str = "quantile"
    word_length: int = 1

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.word_length != 1:
            raise ValueError("only word_length=1 is supported")


@dataclass
class BinEdges:
    """Fitted interior edges, shape (v, bins - 1), ascending per variate."""

    edges: np.ndarray
    bins: int

    @property
    def n_variates(self):
        return self.edges.shape[0]


def fit_bins(x, config):
    """Fit per-variate bin edges on training data pooled across samples and time.

    x: (N, L, v). Quantile edges are the k/bins quantiles (linear
    interpolation) for k = 1..bins-1; uniform edges split [min, max]
    evenly. Duplicate edges are allowed for degenerate distributions;
    downstream the middle bins simply never fire.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"training data must be (N, L, v), got shape {x.shape}")
    v = x.shape[-1]
    pooled = x.reshape(-1, v)
    n = config.bins
    if config.strategy == "quantile":
        qs = np.arange(1, n) / n
        edges = np.quantile(pooled, qs, axis=0, method="linear").T
    else:
        lo = pooled.min(axis=0)
        hi = pooled.max(axis=0)
        grid = np.linspace(0.0, 1.0, n + 1)[1:-1]
        edges = lo[:, None] + (hi - lo)[:, None] * grid[None, :]
    return BinEdges(edges=np.ascontiguousarray(edges), bins=n)


def discretize(x, edges):
    """Map a series (L, v) to symbols (L, v) in 1..bins.

    The symbol is 1 + the count of edges strictly below the value, so a
    value equal to an edge falls into the lower bin.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != edges.n_variates:
        raise ValueError(
            f"input shape {x.shape} incompatible with edges for {edges.n_variates} variates"
        )
    out = np.empty(x.shape, dtype=np.int64)
    for c in range(edges.n_variates):
        out[:, c] = 1 + np.searchsorted(edges.edges[c], x[:, c], side="left")
    return out


def one_hot(symbols, bins):
    """Expand symbols (L, v) to a binary matrix (L, bins * v).

    Variate blocks are concatenated in variate order: column bins*c + (s-1)
    is set for symbol s of variate c. Exactly v entries per row are one.
    """
    symbols = np.asarray(symbols)
    if symbols.ndim != 2:
        raise ValueError(f"symbols must be (L, v), got shape {symbols.shape}")
    if symbols.min() < 1 or symbols.max() > bins:
        raise ValueError(f"symbols must lie in [1, {bins}]")
    L, v = symbols.shape
    out = np.zeros((L, bins * v), dtype=np.float64)
    cols = np.arange(v) * bins + (symbols - 1)
    out[np.arange(L)[:, None], cols] = 1.0
    return out


def compose(onehot, m):
    """Sliding mean over m consecutive one-hot rows, stride 1.

    onehot: (L, d) -> (L - m + 1, d). Linear in its input; for binary
    inputs entries are occupancy fractions in [0, 1] and each row sums to
    the number of variates.
    """
    onehot = np.asarray(onehot, dtype=np.float64)
    if onehot.ndim != 2:
        raise ValueError(f"input must be 2-D, got shape {onehot.shape}")
    L = onehot.shape[0]
    if m < 1 or m > L:
        raise ValueError(f"window m={m} must be in [1, L={L}]")
    windows = sliding_window_view(onehot, m, axis=0)  # (L-m+1, d, m)
    return windows.sum(axis=-1) / m
