"""Closed-form margins and empirical alignment checks for the estimator.

The estimator's guarantee is about angles: in expectation, the sphere
average points along the margin gradient, with alignment improving as the
query radius grows on linear models and breaking down past an interior
"sweet point" on curved ones.  This module computes exact margins and
gradients for both model families, sweeps the empirical alignment across
radii, and evaluates the closed-form cosine bounds (with the proof's
``delta * R`` product collapsed into the single effective radius used for
querying).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .attack import estimate_direction
from .core import RngStream, check_vector, cosine
from .errors import DegenerateInputError, ValidationError
from .jsonio import format_float
from .models.classifiers import logits as model_logits
from .models.generators import IdentityGenerator
from .oracle import ModelOracle

__all__ = [
    "AlignmentCurve",
    "AlignmentPoint",
    "MarginGradient",
    "MarginModel",
    "QuadraticMarginModel",
    "TheoryTestbed",
    "alignment_sweep",
    "linear_alignment_testbed",
    "margin",
    "margin_gradient",
    "quadratic_alignment_testbed",
    "theorem1_bound",
    "theorem2_bound",
    "write_alignment_csv",
]

TIE_TOLERANCE = 1e-12


class QuadraticMarginModel:
    """A two-class model with logits 1 − ‖x − center‖² and 0.

    The class-0 margin is exactly quadratic, so its gradient −2(x − center)
    and gradient-Lipschitz constant 2 are known in closed form; this is the
    curved testbed on which alignment must peak at an interior radius.
    """

    def __init__(self, center):
        self.center = check_vector(center, name="center")
        self.n_features_in_ = self.center.shape[0]
        self.classes_ = np.arange(2)
        self.lipschitz = 2.0

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        first = 1.0 - np.sum((X - self.center) ** 2, axis=1)
        return np.column_stack([first, np.zeros(X.shape[0])])

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def logit_combination_gradient(self, x, coefficients) -> np.ndarray:
        x = check_vector(x, dim=self.n_features_in_, name="x")
        coefficients = check_vector(coefficients, dim=2, name="coefficients")
        return coefficients[0] * (-2.0) * (x - self.center)


@dataclass(frozen=True)
class MarginGradient:
    """A margin gradient plus the runner-up it was taken against."""

    vector: np.ndarray = field(repr=False)
    runner_up: int
    tie: bool


@dataclass(frozen=True)
class MarginModel:
    """A classifier viewed through the margin of one target class."""

    model: object
    target_class: int

    def __post_init__(self):
        classes = np.asarray(self.model.classes_)
        if self.target_class not in classes:
            raise ValidationError(
                f"target class {self.target_class} not among model classes {classes.tolist()}"
            )

    @property
    def input_dim(self) -> int:
        return int(self.model.n_features_in_)

    def _split_logits(self, x):
        scores = model_logits(self.model, x)
        classes = np.asarray(self.model.classes_)
        target_position = int(np.flatnonzero(classes == self.target_class)[0])
        competitors = np.delete(np.arange(classes.size), target_position)
        return scores, target_position, competitors

    def margin(self, x) -> float:
        scores, target_position, competitors = self._split_logits(x)
        return float(scores[target_position] - np.max(scores[competitors]))

    def margin_gradient(self, x) -> MarginGradient:
        scores, target_position, competitors = self._split_logits(x)
        competitor_scores = scores[competitors]
        best = int(np.argmax(competitor_scores))
        runner_position = int(competitors[best])
        gap = np.max(competitor_scores) - competitor_scores
        tie = int(np.sum(gap <= TIE_TOLERANCE)) > 1
        coefficients = np.zeros(scores.shape[0])
        coefficients[target_position] = 1.0
        coefficients[runner_position] = -1.0
        vector = self.model.logit_combination_gradient(np.asarray(x, dtype=np.float64),
                                                       coefficients)
        runner_up = int(np.asarray(self.model.classes_)[runner_position])
        return MarginGradient(vector=vector, runner_up=runner_up, tie=tie)


def margin(model: MarginModel, x) -> float:
    """Target logit minus the best competing logit."""
    return model.margin(x)


def margin_gradient(model: MarginModel, x) -> MarginGradient:
    """Exact margin gradient; the tie flag marks non-differentiable points."""
    return model.margin_gradient(x)


@dataclass(frozen=True)
class AlignmentPoint:
    """Alignment at one radius.

    ``mean_cosine`` is the cosine between the mean of all batch estimates
    and the true gradient (0.0 if every batch came back empty); ``stderr``
    is the standard error of single-batch cosines over the
    ``nonzero_trials`` batches that produced a direction.
    """

    radius: float
    mean_cosine: float
    stderr: float
    trials: int
    nonzero_trials: int
    bound: float | None = None

    def __post_init__(self):
        if not -1.0 <= self.mean_cosine <= 1.0:
            raise ValidationError(f"cosine out of range: {self.mean_cosine}")
        if self.trials < 30:
            raise ValidationError(f"need >= 30 trials per radius, got {self.trials}")


@dataclass(frozen=True)
class AlignmentCurve:
    points: tuple
    model_descriptor: str
    z: np.ndarray = field(repr=False)
    n_per_trial: int

    def mean_cosines(self) -> np.ndarray:
        return np.array([p.mean_cosine for p in self.points])

    def radii(self) -> np.ndarray:
        return np.array([p.radius for p in self.points])


def theorem1_bound(margin_value: float, grad_norm: float, d: int, radius: float) -> float:
    """Linear-model cosine lower bound 1 − 2m²(d−1)²/(ρ²g²), clamped to ≥ −1.

    This is the derivation's explicit-constant form; the looser O(·)
    statement differs only in the constant.
    """
    for name, value in [("margin_value", margin_value), ("grad_norm", grad_norm),
                        ("d", d), ("radius", radius)]:
        if not value > 0:
            raise ValidationError(f"{name} must be positive, got {value}")
    bound = 1.0 - 2.0 * margin_value ** 2 * (d - 1) ** 2 / (radius ** 2 * grad_norm ** 2)
    return max(-1.0, bound)


def theorem2_bound(margin_value: float, grad_norm: float, d: int, radius: float,
                   lipschitz: float) -> float:
    """Curved-model cosine lower bound with gradient-Lipschitz constant L.

    1 − (4m² + L²ρ⁴ + 4m²Lρ²)(d−1)² / (2ρ²g²), clamped to ≥ −1; the ρ²
    term in the numerator makes the bound collapse at large radii, which is
    the "sweet point" behavior.
    """
    for name, value in [("margin_value", margin_value), ("grad_norm", grad_norm),
                        ("d", d), ("radius", radius), ("lipschitz", lipschitz)]:
        if not value > 0:
            raise ValidationError(f"{name} must be positive, got {value}")
    numerator = (4.0 * margin_value ** 2
                 + lipschitz ** 2 * radius ** 4
                 + 4.0 * margin_value ** 2 * lipschitz * radius ** 2)
    bound = 1.0 - numerator * (d - 1) ** 2 / (2.0 * radius ** 2 * grad_norm ** 2)
    return max(-1.0, bound)


def alignment_sweep(model: MarginModel, generator, z, radii, n: int, trials: int,
                    rng: RngStream, bounds=None) -> AlignmentCurve:
    """Empirical alignment between sphere estimates and the true gradient.

    For each radius, ``trials`` independent batches of ``n`` hard-label
    queries are reduced two ways: the cosine of the aggregated (mean)
    estimate gives the headline value, and per-batch cosines give its
    spread.  Each (radius, trial) cell draws from its own substream, so the
    sweep is reproducible under any evaluation order.

    ``bounds`` optionally maps each radius to a closed-form lower bound to
    carry alongside (see :func:`theorem1_bound` / :func:`theorem2_bound`).
    """
    z = check_vector(z, name="z")
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii):
        raise ValidationError("radii must be positive")
    if any(b >= a for a, b in zip(radii[1:], radii[:-1])):
        raise ValidationError("radii must be strictly ascending")
    if trials < 30:
        raise ValidationError(f"need >= 30 trials per radius, got {trials}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")

    x = generator(z)
    if model.margin(x) <= 0:
        raise ValidationError("base point must have positive margin")
    gradient_x = model.margin_gradient(x).vector
    jacobian = generator.jacobian(z)
    gradient = jacobian.T @ gradient_x
    if not np.any(gradient):
        raise DegenerateInputError("margin gradient vanishes at the base point")

    oracle = ModelOracle(model.model)
    points = []
    for radius_index, radius in enumerate(radii):
        vectors = np.zeros((trials, z.shape[0]))
        for trial in range(trials):
            cell = rng.substream(radius_index, trial)
            estimate = estimate_direction(oracle, generator, model.target_class,
                                          z, radius, n, cell)
            vectors[trial] = estimate.vector
        nonzero = np.any(vectors != 0.0, axis=1)
        per_trial = np.array([cosine(v, gradient) for v in vectors[nonzero]])
        aggregate = vectors.mean(axis=0)
        mean_cosine = cosine(aggregate, gradient) if np.any(aggregate) else 0.0
        if per_trial.size >= 2:
            stderr = float(np.std(per_trial, ddof=1) / np.sqrt(per_trial.size))
        else:
            stderr = 0.0
        points.append(AlignmentPoint(
            radius=radius,
            mean_cosine=float(mean_cosine),
            stderr=stderr,
            trials=trials,
            nonzero_trials=int(np.sum(nonzero)),
            bound=None if bounds is None else float(bounds(radius)),
        ))
    descriptor = f"{type(model.model).__name__}(target_class={model.target_class})"
    return AlignmentCurve(points=tuple(points), model_descriptor=descriptor,
                          z=z, n_per_trial=n)


@dataclass(frozen=True)
class TheoryTestbed:
    """A ready-to-sweep configuration with its closed-form quantities."""

    name: str
    margin_model: MarginModel
    generator: object
    z: np.ndarray = field(repr=False)
    radii: tuple
    margin_value: float
    grad_norm: float
    dim: int
    lipschitz: float | None = None

    def bound_at(self, radius: float) -> float:
        if self.lipschitz is None:
            return theorem1_bound(self.margin_value, self.grad_norm, self.dim, radius)
        return theorem2_bound(self.margin_value, self.grad_norm, self.dim, radius,
                              self.lipschitz)


def linear_alignment_testbed(grad_norm: float = 3.0, dim: int = 16) -> TheoryTestbed:
    """The fixed linear sweep: margin 1 at the base point, known gradient.

    Two classes split by the first coordinate with logit gap ``grad_norm``;
    the base point sits at margin exactly 1.
    """
    from .models.classifiers import LinearSoftmaxClassifier

    weights = np.zeros((2, dim))
    weights[0, 0] = grad_norm / 2.0
    weights[1, 0] = -grad_norm / 2.0
    model = LinearSoftmaxClassifier.from_parameters(weights, np.zeros(2))
    z = np.zeros(dim)
    z[0] = 1.0 / grad_norm
    return TheoryTestbed(
        name="linear",
        margin_model=MarginModel(model=model, target_class=0),
        generator=IdentityGenerator(dim=dim),
        z=z,
        radii=(0.5, 2.0, 8.0, 32.0),
        margin_value=1.0,
        grad_norm=float(grad_norm),
        dim=dim,
    )


def quadratic_alignment_testbed(dim: int = 8) -> TheoryTestbed:
    """The fixed curved sweep: quadratic margin, gradient-Lipschitz L = 2.

    The class region is the unit ball; the base point at 0.6 from the
    center leaves sample spheres partly inside for radii between 0.4 and
    1.6, so alignment must rise and then collapse inside the default grid.
    """
    center = np.zeros(dim)
    model = QuadraticMarginModel(center)
    z = np.zeros(dim)
    z[0] = 0.6
    margin_value = 1.0 - 0.36
    return TheoryTestbed(
        name="curved",
        margin_model=MarginModel(model=model, target_class=0),
        generator=IdentityGenerator(dim=dim),
        z=z,
        radii=tuple(np.geomspace(0.15, 4.0, 12)),
        margin_value=margin_value,
        grad_norm=1.2,
        dim=dim,
        lipschitz=2.0,
    )


def write_alignment_csv(curve: AlignmentCurve, path) -> None:
    """Serialize a curve as CSV: rho, mean_cos, stderr, trials, bound."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["rho", "mean_cos", "stderr", "trials", "bound"])
        for point in curve.points:
            writer.writerow([
                format_float(point.radius),
                format_float(point.mean_cosine),
                format_float(point.stderr),
                point.trials,
                "" if point.bound is None else format_float(point.bound),
            ])
