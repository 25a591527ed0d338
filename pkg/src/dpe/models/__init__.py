"""Program embedding models: three trace-based encoders and three syntax baselines."""

from __future__ import annotations

from .arch import Classifier, ModelConfig, classify
from .features import (
    ARCHITECTURES,
    DYNAMIC,
    SYNTAX,
    EmptyProgram,
    EmptyTrace,
    Featurizer,
    fit_featurizer,
    make_batch,
)
from .train import (
    DivergedLoss,
    EmptyDataset,
    Model,
    VocabMismatch,
    build_model,
    evaluate,
    load_model,
    save_model,
    train,
    write_metrics,
)

__all__ = [
    "ARCHITECTURES", "DYNAMIC", "SYNTAX", "Classifier", "ModelConfig", "classify",
    "EmptyProgram", "EmptyTrace", "Featurizer", "fit_featurizer", "make_batch",
    "DivergedLoss", "EmptyDataset", "Model", "VocabMismatch", "build_model", "evaluate",
    "load_model", "save_model", "train", "write_metrics",
]
