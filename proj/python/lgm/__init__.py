"""Latent-space generative models for trained autoencoders."""

from ._lgm import (
    Autoencoder,
    DataError,
    Error,
    InvalidArgument,
    Model,
    NumericError,
    compute_ranks,
    emd,
    evaluate,
    fit,
    kendall_tau,
    load_autoencoder,
    load_matrix,
    load_model,
    mmd,
    one_nn_accuracy,
    save_matrix,
    train_autoencoder,
)

__all__ = [
    "Autoencoder",
    "DataError",
    "Error",
    "InvalidArgument",
    "Model",
    "NumericError",
    "compute_ranks",
    "emd",
    "evaluate",
    "fit",
    "kendall_tau",
    "load_autoencoder",
    "load_matrix",
    "load_model",
    "mmd",
    "one_nn_accuracy",
    "save_matrix",
    "train_autoencoder",
]
