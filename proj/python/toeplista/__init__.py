"""Sparse harmonic retrieval with Toeplitz-structured unfolded networks."""

from ._toeplista import (
    ConditioningError,
    Dictionary,
    DimensionError,
    FormatError,
    NumericError,
    UnfoldedNetwork,
    add_noise,
    conv1d,
    conv2d,
    dbt_expand,
    draw_sampling,
    fista,
    fourier_matrix,
    gen_dataset,
    gen_sparse_signal,
    hit_rate,
    ista,
    lipschitz_constant,
    nmse,
    objective,
    param_count,
    run_sweep,
    soft_threshold,
    synth_offgrid,
    toeplitz_expand,
    top_k_indices,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ConditioningError",
    "Dictionary",
    "DimensionError",
    "FormatError",
    "NumericError",
    "UnfoldedNetwork",
    "add_noise",
    "conv1d",
    "conv2d",
    "dbt_expand",
    "draw_sampling",
    "fista",
    "fourier_matrix",
    "gen_dataset",
    "gen_sparse_signal",
    "hit_rate",
    "ista",
    "lipschitz_constant",
    "nmse",
    "objective",
    "param_count",
    "run_sweep",
    "soft_threshold",
    "synth_offgrid",
    "toeplitz_expand",
    "top_k_indices",
    "train",
]
