"""Spatial-temporal tensor graph convolution for traffic forecasting."""

from ._core import (
    ArgumentError,
    DataError,
    batch_mode3_product,
    bench_forward,
    compute_metrics,
    fold,
    ha_metrics,
    hooi,
    make_synthetic,
    memory_footprint,
    mode_product,
    normalize_adjacency,
    ranks_from_rule,
    run_cli,
    st_conv_factorized,
    st_conv_full,
    tucker_reconstruct,
    unfold,
)

__all__ = [
    "ArgumentError",
    "DataError",
    "batch_mode3_product",
    "bench_forward",
    "compute_metrics",
    "fold",
    "ha_metrics",
    "hooi",
    "make_synthetic",
    "memory_footprint",
    "mode_product",
    "normalize_adjacency",
    "ranks_from_rule",
    "run_cli",
    "st_conv_factorized",
    "st_conv_full",
    "tucker_reconstruct",
    "unfold",
]
