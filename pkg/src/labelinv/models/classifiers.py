"""Softmax classifiers trained from scratch by full-batch gradient descent.

Two families: a linear softmax model and a small tanh MLP.  Both follow the
scikit-learn estimator protocol (``fit`` / ``predict`` / ``decision_function``
with trailing-underscore fitted attributes), and both expose the logit
gradients the theory module needs.

Training standardizes features internally — fixed-step gradient descent on
raw widely-spread mixtures diverges — and then folds the standardization
into the first affine layer, so a fitted model is a plain stack of affine
maps (plus tanh for the MLP) and serializes without any preprocessing state.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ..core import RngStream, check_matrix, check_vector
from ..errors import TrainingError, ValidationError

__all__ = [
    "LinearSoftmaxClassifier",
    "MlpClassifier",
    "hard_label",
    "logits",
    "train_classifier",
]


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _standardize(X: np.ndarray):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    return (X - mean) / std, mean, std


def _absorb_standardization(weights: np.ndarray, biases: np.ndarray,
                            mean: np.ndarray, std: np.ndarray):
    """Rewrite the first affine layer so it acts on raw features.

    W((x-μ)/σ) + b  ==  (W/σ)x + (b - W(μ/σ)), exactly.
    """
    absorbed_w = weights / std[None, :]
    absorbed_b = biases - weights @ (mean / std)
    return absorbed_w, absorbed_b


def _encode_labels(y: np.ndarray, classes: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(classes, y)
    if np.any(idx >= classes.size) or np.any(classes[np.clip(idx, 0, classes.size - 1)] != y):
        raise ValidationError("labels outside the fitted class set")
    return idx


class LinearSoftmaxClassifier(ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression fit by full-batch gradient descent.

    Parameters
    ----------
    learning_rate : float
        Step size on the standardized features.
    max_iter : int
        Gradient-descent iteration cap.
    target_accuracy : float
        Training stops early once training accuracy reaches this level.
    min_accuracy : float
        If the cap is hit below this accuracy, fit raises ``TrainingError``.
    """

    def __init__(self, learning_rate: float = 0.5, max_iter: int = 2000,
                 target_accuracy: float = 0.99, min_accuracy: float = 0.90):
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.target_accuracy = target_accuracy
        self.min_accuracy = min_accuracy

    @classmethod
    def from_parameters(cls, weights, biases, classes=None) -> "LinearSoftmaxClassifier":
        """Build a fitted model directly from a weight matrix and bias vector."""
        model = cls()
        weights = check_matrix(weights, name="weights")
        biases = check_vector(biases, dim=weights.shape[0], name="biases")
        if weights.shape[0] < 2:
            raise ValidationError("need at least 2 classes")
        model.coef_ = weights
        model.intercept_ = biases
        model.classes_ = (np.arange(weights.shape[0]) if classes is None
                          else np.asarray(classes, dtype=np.int64))
        if model.classes_.shape[0] != weights.shape[0]:
            raise ValidationError("classes length must match weight rows")
        model.n_features_in_ = weights.shape[1]
        model.n_iter_ = 0
        model.training_accuracy_ = None
        return model

    def fit(self, X, y):
        X = check_matrix(X, name="X")
        y = np.asarray(y, dtype=np.int64)
        self.classes_ = np.unique(y)
        if self.classes_.size < 2:
            raise ValidationError("need at least 2 classes to fit")
        n, d = X.shape
        idx = _encode_labels(y, self.classes_)
        onehot = np.eye(self.classes_.size)[idx]

        Xs, mean, std = _standardize(X)
        W = np.zeros((self.classes_.size, d))
        b = np.zeros(self.classes_.size)
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            scores = Xs @ W.T + b
            if np.mean(np.argmax(scores, axis=1) == idx) >= self.target_accuracy:
                break
            probs = _softmax(scores)
            err = probs - onehot
            W -= self.learning_rate * (err.T @ Xs) / n
            b -= self.learning_rate * err.mean(axis=0)

        self.coef_, self.intercept_ = _absorb_standardization(W, b, mean, std)
        self.n_features_in_ = d
        self.n_iter_ = n_iter
        self.training_accuracy_ = float(np.mean(self.predict(X) == y))
        if self.training_accuracy_ < self.min_accuracy:
            raise TrainingError(
                f"training accuracy {self.training_accuracy_:.4f} below "
                f"{self.min_accuracy} after {self.max_iter} iterations"
            )
        return self

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise NotFittedError("this LinearSoftmaxClassifier is not fitted yet")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_matrix(X, shape=(None, self.n_features_in_), name="X")
        return X @ self.coef_.T + self.intercept_

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]

    def logit_combination_gradient(self, x, coefficients) -> np.ndarray:
        """Gradient of ``coefficients · logits(x)`` with respect to ``x``."""
        self._check_fitted()
        check_vector(x, dim=self.n_features_in_, name="x")
        coefficients = check_vector(coefficients, dim=self.classes_.size,
                                    name="coefficients")
        return coefficients @ self.coef_


class MlpClassifier(ClassifierMixin, BaseEstimator):
    """A small tanh multilayer perceptron trained by full-batch descent.

    The hidden nonlinearity is tanh — smooth everywhere, so the margin has a
    Lipschitz continuous gradient, which the curvature analyses rely on.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
        Widths of the hidden layers.
    learning_rate, max_iter, target_accuracy, min_accuracy
        As for :class:`LinearSoftmaxClassifier`.
    random_state : int
        Seed for weight initialization.
    """

    def __init__(self, hidden_layer_sizes: tuple = (32,), learning_rate: float = 0.5,
                 max_iter: int = 4000, target_accuracy: float = 0.99,
                 min_accuracy: float = 0.90, random_state: int = 0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.target_accuracy = target_accuracy
        self.min_accuracy = min_accuracy
        self.random_state = random_state

    @classmethod
    def from_parameters(cls, weights, biases, classes=None) -> "MlpClassifier":
        """Build a fitted model from per-layer weight matrices and bias vectors."""
        model = cls()
        weights = [check_matrix(w, name=f"weights[{i}]") for i, w in enumerate(weights)]
        biases = [check_vector(b, dim=w.shape[0], name=f"biases[{i}]")
                  for i, (w, b) in enumerate(zip(weights, biases, strict=True))]
        if not weights:
            raise ValidationError("need at least one layer")
        for lower, upper in zip(weights[:-1], weights[1:]):
            if upper.shape[1] != lower.shape[0]:
                raise ValidationError("layer shapes do not chain")
        n_out = weights[-1].shape[0]
        if n_out < 2:
            raise ValidationError("need at least 2 classes")
        model.weights_ = weights
        model.biases_ = biases
        model.classes_ = (np.arange(n_out) if classes is None
                          else np.asarray(classes, dtype=np.int64))
        if model.classes_.shape[0] != n_out:
            raise ValidationError("classes length must match output width")
        model.n_features_in_ = weights[0].shape[1]
        model.n_iter_ = 0
        model.training_accuracy_ = None
        return model

    def fit(self, X, y):
        X = check_matrix(X, name="X")
        y = np.asarray(y, dtype=np.int64)
        self.classes_ = np.unique(y)
        if self.classes_.size < 2:
            raise ValidationError("need at least 2 classes to fit")
        n, d = X.shape
        idx = _encode_labels(y, self.classes_)
        onehot = np.eye(self.classes_.size)[idx]

        Xs, mean, std = _standardize(X)
        rng = RngStream(self.random_state, key=(0,))
        widths = [d, *map(int, self.hidden_layer_sizes), int(self.classes_.size)]
        weights = [rng.normal((widths[i + 1], widths[i])) / np.sqrt(widths[i])
                   for i in range(len(widths) - 1)]
        biases = [np.zeros(w) for w in widths[1:]]

        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            # Forward pass keeping hidden activations for backprop.
            activations = [Xs]
            for W, b in zip(weights[:-1], biases[:-1]):
                activations.append(np.tanh(activations[-1] @ W.T + b))
            scores = activations[-1] @ weights[-1].T + biases[-1]
            if np.mean(np.argmax(scores, axis=1) == idx) >= self.target_accuracy:
                break
            delta = (_softmax(scores) - onehot) / n
            for layer in range(len(weights) - 1, -1, -1):
                grad_w = delta.T @ activations[layer]
                grad_b = delta.sum(axis=0)
                if layer > 0:
                    delta = (delta @ weights[layer]) * (1.0 - activations[layer] ** 2)
                weights[layer] = weights[layer] - self.learning_rate * grad_w
                biases[layer] = biases[layer] - self.learning_rate * grad_b

        weights[0], biases[0] = _absorb_standardization(weights[0], biases[0], mean, std)
        self.weights_ = weights
        self.biases_ = biases
        self.n_features_in_ = d
        self.n_iter_ = n_iter
        self.training_accuracy_ = float(np.mean(self.predict(X) == y))
        if self.training_accuracy_ < self.min_accuracy:
            raise TrainingError(
                f"training accuracy {self.training_accuracy_:.4f} below "
                f"{self.min_accuracy} after {self.max_iter} iterations"
            )
        return self

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise NotFittedError("this MlpClassifier is not fitted yet")

    def _forward(self, X: np.ndarray):
        activations = [X]
        for W, b in zip(self.weights_[:-1], self.biases_[:-1]):
            activations.append(np.tanh(activations[-1] @ W.T + b))
        scores = activations[-1] @ self.weights_[-1].T + self.biases_[-1]
        return scores, activations

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_matrix(X, shape=(None, self.n_features_in_), name="X")
        return self._forward(X)[0]

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]

    def logit_combination_gradient(self, x, coefficients) -> np.ndarray:
        """Gradient of ``coefficients · logits(x)`` via reverse-mode sweep."""
        self._check_fitted()
        x = check_vector(x, dim=self.n_features_in_, name="x")
        coefficients = check_vector(coefficients, dim=self.classes_.size,
                                    name="coefficients")
        _, activations = self._forward(x[None, :])
        grad = coefficients[None, :] @ self.weights_[-1]
        for layer in range(len(self.weights_) - 2, -1, -1):
            grad = (grad * (1.0 - activations[layer + 1] ** 2)) @ self.weights_[layer]
        return grad[0]


def logits(model, x) -> np.ndarray:
    """Full score vector of a classifier at a single point."""
    x = check_vector(x, name="x")
    return model.decision_function(x[None, :])[0]


def hard_label(model, x) -> int:
    """Predicted class at a single point; ties break to the lowest class."""
    scores = logits(model, x)
    return int(model.classes_[int(np.argmax(scores))])


_ARCHITECTURES = {"linear", "mlp"}


def train_classifier(dataset, classes, architecture, seed: int = 0):
    """Train a classifier on the samples of ``classes`` from ``dataset``.

    ``architecture`` is ``"linear"``, ``"mlp"``, or a dict like
    ``{"kind": "mlp", "hidden_layer_sizes": [16]}`` whose extra keys are
    passed to the estimator constructor.
    """
    if isinstance(architecture, str):
        spec = {"kind": architecture}
    elif isinstance(architecture, dict):
        spec = dict(architecture)
    else:
        raise ValidationError(f"bad architecture descriptor: {architecture!r}")
    kind = spec.pop("kind", None)
    if kind not in _ARCHITECTURES:
        raise ValidationError(f"unknown architecture {kind!r}; expected one of {sorted(_ARCHITECTURES)}")

    classes = sorted(int(c) for c in classes)
    if len(classes) < 2:
        raise ValidationError("class subset must contain at least 2 classes")
    X, y = dataset.samples_for(classes)
    for c in classes:
        if int(np.sum(y == c)) < 2:
            raise ValidationError(f"class {c} has fewer than 2 samples")

    if kind == "linear":
        model = LinearSoftmaxClassifier(**spec)
    else:
        if "hidden_layer_sizes" in spec:
            spec["hidden_layer_sizes"] = tuple(spec["hidden_layer_sizes"])
        model = MlpClassifier(random_state=int(seed), **spec)
    return model.fit(X, y)
