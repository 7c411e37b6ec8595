"""Desk-scale models: classifiers, generators, and synthetic datasets."""

from .classifiers import (
    LinearSoftmaxClassifier,
    MlpClassifier,
    hard_label,
    logits,
    train_classifier,
)
from .datasets import SyntheticDataset, make_gaussian_mixture, split_classes
from .generators import AffineGenerator, IdentityGenerator, fit_affine_generator
from .io import load_model, save_model

__all__ = [
    "AffineGenerator",
    "IdentityGenerator",
    "LinearSoftmaxClassifier",
    "MlpClassifier",
    "SyntheticDataset",
    "fit_affine_generator",
    "hard_label",
    "load_model",
    "logits",
    "make_gaussian_mixture",
    "save_model",
    "split_classes",
    "train_classifier",
]
