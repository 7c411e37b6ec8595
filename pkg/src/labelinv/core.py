"""Deterministic randomness and small vector utilities.

Everything stochastic in this package flows through :class:`RngStream`, a
thin wrapper over numpy's counter-based Philox generator keyed by a
``SeedSequence``.  Streams are addressed by a seed plus a tuple key, so a
run can hand out independent substreams (per trial, per radius, per class)
whose output never depends on the order in which sibling streams are
consumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, ValidationError

__all__ = [
    "RngStream",
    "SphereBatch",
    "check_vector",
    "check_matrix",
    "cosine",
    "sample_unit_sphere",
    "sample_sphere_batch",
]


def check_vector(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float64 array, optionally of length ``dim``."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValidationError(f"{name} must have length {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_matrix(x, shape: tuple[int | None, int | None] = (None, None),
                 name: str = "matrix") -> np.ndarray:
    """Coerce ``x`` to a finite 2-D float64 array with optional shape pins."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    for axis, want in enumerate(shape):
        if want is not None and arr.shape[axis] != want:
            raise ValidationError(
                f"{name} must have shape {shape}, got {arr.shape}"
            )
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def cosine(a, b) -> float:
    """Cosine of the angle between two vectors.

    Raises :class:`DegenerateInputError` if either vector is zero, because
    the angle is undefined there; callers that want a sentinel must branch
    before calling.
    """
    a = check_vector(a, name="a")
    b = check_vector(b, dim=a.shape[0], name="b")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


class RngStream:
    """A keyed, counter-based random stream.

    Parameters
    ----------
    seed : int
        Root entropy for the whole experiment.
    key : tuple of int, optional
        Substream address.  Streams with the same seed but different keys
        are statistically independent; the same (seed, key) pair always
        reproduces the same sequence.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
            raise ValidationError(f"seed must be an integer, got {seed!r}")
        if int(seed) < 0:
            raise ValidationError(f"seed must be non-negative, got {seed}")
        key = tuple(int(k) for k in key)
        if any(k < 0 for k in key):
            raise ValidationError(f"substream key entries must be non-negative, got {key}")
        self.seed = int(seed)
        self.key = key
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.Philox(seq))
        self._draws = 0

    @property
    def draws(self) -> int:
        """Number of scalar normal variates drawn so far."""
        return self._draws

    def substream(self, *indices: int) -> "RngStream":
        """A fresh independent stream addressed by ``key + indices``."""
        return RngStream(self.seed, self.key + tuple(int(i) for i in indices))

    def normal(self, shape: int | tuple[int, ...] = ()) -> np.ndarray:
        """Standard normal draws with the given shape."""
        out = self._gen.standard_normal(shape)
        self._draws += int(np.size(out))
        return out

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"RngStream(seed={self.seed}, key={self.key}, draws={self._draws})"


@dataclass(frozen=True)
class SphereBatch:
    """A batch of unit directions paired with the sphere radius they scale."""

    directions: np.ndarray = field(repr=False)
    radius: float

    def __post_init__(self):
        directions = check_matrix(self.directions, name="directions")
        object.__setattr__(self, "directions", directions)
        if not (self.radius > 0.0 and np.isfinite(self.radius)):
            raise ValidationError(f"radius must be positive and finite, got {self.radius}")
        norms = np.linalg.norm(directions, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValidationError("directions must be unit vectors")

    @property
    def n(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def points_around(self, center) -> np.ndarray:
        """The sampled sphere points ``center + radius * u`` as rows."""
        center = check_vector(center, dim=self.dim, name="center")
        return center[None, :] + self.radius * self.directions


def sample_unit_sphere(rng: RngStream, dim: int) -> np.ndarray:
    """One point uniform on the unit sphere in ``dim`` dimensions."""
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    while True:
        g = rng.normal(dim)
        norm = float(np.linalg.norm(g))
        # A zero draw has probability zero but would poison the division.
        if norm > 1e-12:
            return g / norm


def sample_sphere_batch(rng: RngStream, n: int, dim: int, radius: float) -> SphereBatch:
    """``n`` independent uniform unit directions plus the sphere radius.

    Directions are normalized Gaussian rows drawn in one block, which the
    counter-based generator makes identical to drawing them one at a time,
    so the batch content is a pure function of the stream state and
    (n, dim).
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    g = rng.normal((n, dim))
    norms = np.linalg.norm(g, axis=1)
    # Zero rows have probability zero but would poison the division.
    for i in np.flatnonzero(norms <= 1e-12):
        g[i] = rng.normal(dim)
        norms[i] = np.linalg.norm(g[i])
    return SphereBatch(directions=g / norms[:, None], radius=float(radius))
