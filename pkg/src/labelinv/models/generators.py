"""Latent-space generators: an identity map and a principal-component decoder.

The affine generator is the desk-scale stand-in for a learned image prior:
its offset is the public-data mean and its columns are the top principal
directions scaled by the per-direction standard deviation, so a standard
normal latent vector decodes onto the data's dominant variance ellipsoid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ..core import check_matrix, check_vector
from ..errors import DegenerateInputError, ValidationError

__all__ = ["AffineGenerator", "IdentityGenerator", "fit_affine_generator"]


@dataclass(frozen=True)
class IdentityGenerator:
    """The degenerate prior G(z) = z, used by the theory testbeds."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"dim must be >= 1, got {self.dim}")

    @property
    def latent_dim(self) -> int:
        return self.dim

    @property
    def output_dim(self) -> int:
        return self.dim

    def transform(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.ndim == 1:
            return check_vector(z, dim=self.dim, name="z")
        return check_matrix(z, shape=(None, self.dim), name="z")

    __call__ = transform

    def project(self, x) -> np.ndarray:
        return self.transform(x)

    def jacobian(self, z) -> np.ndarray:
        check_vector(z, dim=self.dim, name="z")
        return np.eye(self.dim)


class AffineGenerator(BaseEstimator):
    """Affine decoder G(z) = matrix·z + offset fit by principal components.

    Parameters
    ----------
    latent_dim : int
        Dimension of the latent space; must not exceed the data dimension.
    """

    def __init__(self, latent_dim: int = 2):
        self.latent_dim = latent_dim

    @classmethod
    def from_parameters(cls, matrix, offset) -> "AffineGenerator":
        matrix = check_matrix(matrix, name="matrix")
        offset = check_vector(offset, dim=matrix.shape[0], name="offset")
        if matrix.shape[1] > matrix.shape[0]:
            raise ValidationError("latent dimension cannot exceed output dimension")
        model = cls(latent_dim=matrix.shape[1])
        model.matrix_ = matrix
        model.offset_ = offset
        model.n_features_in_ = matrix.shape[0]
        return model

    def fit(self, X, y=None):
        X = check_matrix(X, name="X")
        n, d = X.shape
        if not 1 <= self.latent_dim <= d:
            raise ValidationError(
                f"latent_dim must be in [1, {d}], got {self.latent_dim}"
            )
        if n <= self.latent_dim:
            raise ValidationError(
                f"need more than latent_dim={self.latent_dim} samples, got {n}"
            )
        offset = X.mean(axis=0)
        centered = X - offset
        # Thin SVD of the centered data; columns of V are principal directions.
        _, s, vt = np.linalg.svd(centered, full_matrices=False)
        rank_tol = max(n, d) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
        if int(np.sum(s > rank_tol)) < self.latent_dim:
            raise DegenerateInputError(
                f"centered data has rank < latent_dim={self.latent_dim}"
            )
        # Scale each direction by its standard deviation (singular value of
        # the 1/n-normalized covariance) so unit latents span the variance
        # ellipsoid rather than the raw data norm.
        scales = s[: self.latent_dim] / np.sqrt(n)
        self.matrix_ = vt[: self.latent_dim].T * scales[None, :]
        self.offset_ = offset
        self.singular_values_ = s
        self.explained_variance_ = (s ** 2) / n
        self.n_features_in_ = d
        return self

    def _check_fitted(self):
        if not hasattr(self, "matrix_"):
            raise NotFittedError("this AffineGenerator is not fitted yet")

    @property
    def output_dim(self) -> int:
        self._check_fitted()
        return self.matrix_.shape[0]

    def transform(self, z) -> np.ndarray:
        """Decode latent points to input space; accepts a vector or rows."""
        self._check_fitted()
        z = np.asarray(z, dtype=np.float64)
        if z.ndim == 1:
            z = check_vector(z, dim=self.matrix_.shape[1], name="z")
            return self.matrix_ @ z + self.offset_
        z = check_matrix(z, shape=(None, self.matrix_.shape[1]), name="z")
        return z @ self.matrix_.T + self.offset_[None, :]

    __call__ = transform

    def project(self, x) -> np.ndarray:
        """Least-squares latent preimage of input-space points."""
        self._check_fitted()
        pinv = np.linalg.pinv(self.matrix_)
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = check_vector(x, dim=self.matrix_.shape[0], name="x")
            return pinv @ (x - self.offset_)
        x = check_matrix(x, shape=(None, self.matrix_.shape[0]), name="x")
        return (x - self.offset_[None, :]) @ pinv.T

    def jacobian(self, z) -> np.ndarray:
        self._check_fitted()
        check_vector(z, dim=self.matrix_.shape[1], name="z")
        return self.matrix_


def fit_affine_generator(samples, latent_dim: int) -> AffineGenerator:
    """Fit the principal-component decoder to public samples."""
    return AffineGenerator(latent_dim=int(latent_dim)).fit(np.asarray(samples, dtype=np.float64))
