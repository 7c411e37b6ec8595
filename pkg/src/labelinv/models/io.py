"""Versioned JSON save/load for classifiers.

Documents look like::

    {
      "format_version": 1,
      "kind": "linear_softmax" | "mlp",
      "dims": [input_dim, ...hidden..., num_classes],
      "weights": one weight matrix (linear) or a list of per-layer matrices,
      "biases": one bias vector (linear) or a list of per-layer vectors,
      "nonlinearity": "none" | "tanh",
      "classes": class labels in logit-column order
    }

Every real number is written with 17 significant digits, so a load after a
save reproduces the parameters bit for bit.
"""

from __future__ import annotations

from pathlib import Path

from ..errors import ValidationError
from ..jsonio import dump_canonical, load_json
from .classifiers import LinearSoftmaxClassifier, MlpClassifier

__all__ = ["save_model", "load_model"]

FORMAT_VERSION = 1


def save_model(model, path) -> None:
    """Write a fitted classifier to ``path`` as versioned JSON."""
    if isinstance(model, LinearSoftmaxClassifier):
        model._check_fitted()
        document = {
            "format_version": FORMAT_VERSION,
            "kind": "linear_softmax",
            "dims": [int(model.n_features_in_), int(model.classes_.size)],
            "weights": model.coef_.tolist(),
            "biases": model.intercept_.tolist(),
            "nonlinearity": "none",
            "classes": [int(c) for c in model.classes_],
        }
    elif isinstance(model, MlpClassifier):
        model._check_fitted()
        dims = [int(model.n_features_in_)] + [int(w.shape[0]) for w in model.weights_]
        document = {
            "format_version": FORMAT_VERSION,
            "kind": "mlp",
            "dims": dims,
            "weights": [w.tolist() for w in model.weights_],
            "biases": [b.tolist() for b in model.biases_],
            "nonlinearity": "tanh",
            "classes": [int(c) for c in model.classes_],
        }
    else:
        raise ValidationError(f"cannot serialize model of type {type(model).__name__}")
    dump_canonical(Path(path), document)


def load_model(path):
    """Read a classifier written by :func:`save_model`."""
    try:
        document = load_json(Path(path))
    except ValueError as exc:
        raise ValidationError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ValidationError("model file must contain a JSON object")
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise ValidationError(f"unsupported model format_version {version!r}")
    kind = document.get("kind")
    classes = document.get("classes")
    try:
        if kind == "linear_softmax":
            if document.get("nonlinearity") != "none":
                raise ValidationError("linear_softmax models must declare nonlinearity 'none'")
            model = LinearSoftmaxClassifier.from_parameters(
                document["weights"], document["biases"], classes=classes
            )
        elif kind == "mlp":
            if document.get("nonlinearity") != "tanh":
                raise ValidationError("mlp models must declare nonlinearity 'tanh'")
            model = MlpClassifier.from_parameters(
                document["weights"], document["biases"], classes=classes
            )
        else:
            raise ValidationError(f"unknown model kind {kind!r}")
    except KeyError as missing:
        raise ValidationError(f"model file missing field {missing}") from None
    dims = [int(model.n_features_in_)]
    if kind == "linear_softmax":
        dims.append(int(model.classes_.size))
    else:
        dims.extend(int(w.shape[0]) for w in model.weights_)
    if document.get("dims") != dims:
        raise ValidationError(f"dims field {document.get('dims')!r} does not match weights")
    return model
