"""symlat: explainable time-series classification via symbolic-latent cross-representations."""

__version__ = "0.1.0"
