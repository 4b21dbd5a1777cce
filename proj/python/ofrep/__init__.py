"""Order-flow representation learning: synthetic markets, triplet LSTM encoder,
failure-rate evaluation, clustering and behavioral indicators."""

from ._ofrep import (
    Config,
    FailureRate,
    adjusted_rand_index,
    elbow,
    embed,
    failure_rate,
    grad_check,
    indicators,
    indicator_names,
    kmeans,
    pca,
    run_all,
    stage,
    triplet_loss,
)

__all__ = [
    "Config",
    "FailureRate",
    "adjusted_rand_index",
    "elbow",
    "embed",
    "failure_rate",
    "grad_check",
    "indicators",
    "indicator_names",
    "kmeans",
    "pca",
    "run_all",
    "stage",
    "triplet_loss",
]
