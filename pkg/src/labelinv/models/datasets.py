"""Synthetic Gaussian-mixture datasets with a public/private class split."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import RngStream, sample_unit_sphere
from ..errors import ValidationError

__all__ = ["SyntheticDataset", "make_gaussian_mixture", "split_classes"]


def split_classes(num_classes: int, public_fraction: float) -> tuple[tuple, tuple]:
    """Split class indices into (public, private) by index order.

    The first ``round(num_classes * public_fraction)`` classes are public,
    clamped so both sides stay nonempty.
    """
    if num_classes < 2:
        raise ValidationError(f"num_classes must be >= 2, got {num_classes}")
    if not 0.0 < public_fraction < 1.0:
        raise ValidationError("public_fraction must lie strictly between 0 and 1")
    n_public = int(round(num_classes * public_fraction))
    n_public = min(max(n_public, 1), num_classes - 1)
    return tuple(range(n_public)), tuple(range(n_public, num_classes))


@dataclass(frozen=True)
class SyntheticDataset:
    """An isotropic Gaussian mixture with disjoint public and private classes.

    ``X``/``y`` hold the drawn training samples; ``class_means`` and
    ``spread`` retain the generating distribution so held-out samples can be
    drawn later from an explicit stream.
    """

    class_means: np.ndarray = field(repr=False)
    spread: float
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    public_classes: tuple
    private_classes: tuple

    def __post_init__(self):
        if set(self.public_classes) & set(self.private_classes):
            raise ValidationError("public and private classes must be disjoint")
        if not self.public_classes or not self.private_classes:
            raise ValidationError("both class subsets must be nonempty")

    @property
    def num_classes(self) -> int:
        return self.class_means.shape[0]

    @property
    def dim(self) -> int:
        return self.class_means.shape[1]

    def samples_for(self, classes) -> tuple[np.ndarray, np.ndarray]:
        """Training samples restricted to ``classes`` (order preserved)."""
        classes = [int(c) for c in classes]
        unknown = set(classes) - set(range(self.num_classes))
        if unknown:
            raise ValidationError(f"unknown classes {sorted(unknown)}")
        mask = np.isin(self.y, classes)
        return self.X[mask], self.y[mask]

    def draw(self, rng: RngStream, samples_per_class: int, classes=None):
        """Fresh samples from the generating mixture (held-out data)."""
        classes = (list(range(self.num_classes)) if classes is None
                   else [int(c) for c in classes])
        X = np.empty((len(classes) * samples_per_class, self.dim))
        y = np.empty(len(classes) * samples_per_class, dtype=np.int64)
        row = 0
        for c in classes:
            noise = rng.normal((samples_per_class, self.dim))
            X[row:row + samples_per_class] = self.class_means[c] + self.spread * noise
            y[row:row + samples_per_class] = c
            row += samples_per_class
        return X, y


def make_gaussian_mixture(num_classes: int, dim: int, separation: float,
                          spread: float, samples_per_class: int,
                          rng: RngStream, public_fraction: float = 0.5) -> SyntheticDataset:
    """A labeled mixture whose class means sit on a sphere of radius ``separation``.

    Classes are split into public and private by index: the first
    ``round(num_classes * public_fraction)`` classes are public, the rest
    private.  Both sides must be nonempty.
    """
    if separation <= 0 or spread < 0:
        raise ValidationError("separation must be positive and spread non-negative")
    if samples_per_class < 1:
        raise ValidationError("samples_per_class must be >= 1")
    public, private = split_classes(num_classes, public_fraction)

    means = np.empty((num_classes, dim))
    for c in range(num_classes):
        means[c] = separation * sample_unit_sphere(rng, dim)
    y = np.repeat(np.arange(num_classes), samples_per_class)
    noise = rng.normal((num_classes * samples_per_class, dim))
    X = means[y] + spread * noise

    return SyntheticDataset(
        class_means=means,
        spread=float(spread),
        X=X,
        y=y,
        public_classes=public,
        private_classes=private,
    )
