"""Label-only model inversion by boundary repulsion.

A hard-label attacker walks a latent point away from the target class's
decision boundary using only argmax queries: sample a sphere, average the
negated directions of points that fall outside the class, step along the
average, and grow the sphere whenever it fits entirely inside the class.
The package provides the estimator and full attack driver, desk-scale
models and generators, exact query accounting with an optional wire
protocol, closed-form margin/gradient checks for the underlying theory,
and a reproducible experiment harness with a CLI.
"""

__version__ = "0.1.0"
