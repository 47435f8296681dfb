"""Surrogate-model configuration tuning for replicated key-value stores."""

from ._kvtune import (
    BackendError,
    Dataset,
    Domain,
    Model,
    ValidationError,
    compare,
    generate_dataset,
    load_dataset,
    load_model,
    model_from_json,
    oracle_metrics,
    parse_metrics,
    train,
    tune,
)

__all__ = [
    "BackendError",
    "Dataset",
    "Domain",
    "Model",
    "ValidationError",
    "compare",
    "generate_dataset",
    "load_dataset",
    "load_model",
    "model_from_json",
    "oracle_metrics",
    "parse_metrics",
    "train",
    "tune",
]
