"""Boundary-repulsion inversion: sphere estimator and the full attack loop.

The attacker holds a latent point whose decoded image the oracle labels as
the target class, samples points on a latent sphere around it, averages the
negated directions of samples the oracle labels differently, and steps
along that average — moving away from the nearest decision boundary.  When
an entire sphere stays inside the class, the radius grows by a fixed
factor, and the center becomes the best reconstruction so far.  The run
halts when a radius cannot be cleared within the iteration cap, or when
the query budget runs out.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, check_vector, sample_sphere_batch
from .errors import (
    BudgetExhaustedError,
    DegenerateInputError,
    InitializationError,
    LabelInvError,
    ValidationError,
)
from .jsonio import format_float
from .oracle import CountingOracle

__all__ = [
    "AttackConfig",
    "AttackResult",
    "AttackState",
    "AttackTrace",
    "DirectionEstimate",
    "QueryLedger",
    "TERMINATION_BUDGET",
    "TERMINATION_INIT_FAILED",
    "TERMINATION_MAX_ITERS",
    "TraceRow",
    "apply_update",
    "brep_attack",
    "estimate_direction",
    "initialize_in_class",
    "phi",
    "step_size",
    "write_trace_csv",
]

TERMINATION_MAX_ITERS = "max-iters"
TERMINATION_BUDGET = "budget-exhausted"
TERMINATION_INIT_FAILED = "init-failed"

# Beyond this radius the ladder is within a few doublings of float overflow;
# reaching it means the oracle never stops labeling points as the target.
_RADIUS_CAP = 1e300


def step_size(radius: float) -> float:
    """The default step rule: one third of the radius, clamped at 3."""
    if radius <= 0:
        raise ValidationError(f"radius must be positive, got {radius}")
    return min(radius / 3.0, 3.0)


def _resolve_step_rule(rule):
    if rule is None or rule == "default":
        return step_size
    if callable(rule):
        return rule
    if isinstance(rule, str) and rule.startswith("constant:"):
        value = float(rule.split(":", 1)[1])
        if value <= 0:
            raise ValidationError(f"constant step must be positive, got {value}")
        return lambda _radius: value
    raise ValidationError(f"unknown step rule {rule!r}")


@dataclass(frozen=True)
class AttackConfig:
    """Hyperparameters of one attack run.

    Defaults follow the reference setting: 32 sphere points, initial
    radius 2, radius multiplier 1.3, step min(R/3, 3), 1000 iterations per
    radius.  ``step_rule`` accepts "default", "constant:<x>", or a callable
    radius -> step.
    """

    target_class: int
    n_sphere_points: int = 32
    initial_radius: float = 2.0
    radius_multiplier: float = 1.3
    step_rule: object = "default"
    max_iters: int = 1000
    query_budget: int | None = None
    init_max_tries: int = 1000
    normalize_direction: bool = True

    def __post_init__(self):
        if self.n_sphere_points < 1:
            raise ValidationError(f"n_sphere_points must be >= 1, got {self.n_sphere_points}")
        if not self.initial_radius > 0:
            raise ValidationError(f"initial_radius must be positive, got {self.initial_radius}")
        if not self.radius_multiplier > 1:
            raise ValidationError(
                f"radius_multiplier must be > 1, got {self.radius_multiplier}"
            )
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.init_max_tries < 1:
            raise ValidationError(f"init_max_tries must be >= 1, got {self.init_max_tries}")
        if self.query_budget is not None and int(self.query_budget) < 1:
            raise ValidationError(f"query_budget must be >= 1 or None, got {self.query_budget}")
        _resolve_step_rule(self.step_rule)

    def radius_at(self, expansion_index: int) -> float:
        """The exact radius ladder value R0 · multiplier^k."""
        return self.initial_radius * self.radius_multiplier ** expansion_index


@dataclass(frozen=True)
class DirectionEstimate:
    """The sphere average of negated outside directions.

    ``vector`` is (1/N)·Σ Φ(z + R·u_n)·u_n; its norm can never exceed the
    fraction of outside samples, and it is exactly zero when no sample
    fell outside.
    """

    vector: np.ndarray = field(repr=False)
    outside_fraction: float

    def __post_init__(self):
        vector = check_vector(self.vector, name="vector")
        object.__setattr__(self, "vector", vector)
        if not 0.0 <= self.outside_fraction <= 1.0:
            raise ValidationError(
                f"outside_fraction must be in [0, 1], got {self.outside_fraction}"
            )
        # Tiny slack: the norm of a renormalized float unit vector can sit
        # one rounding step above the exact fraction bound.
        if float(np.linalg.norm(vector)) > self.outside_fraction + 1e-12:
            raise ValidationError("estimate norm exceeds the outside fraction")

    @property
    def is_zero(self) -> bool:
        return not np.any(self.vector)


@dataclass
class AttackState:
    """Mutable loop state: current center, rung, and best point so far."""

    z: np.ndarray
    expansion_index: int = 0
    iters: int = 0
    z_star: np.ndarray | None = None


@dataclass(frozen=True)
class TraceRow:
    """One cleared radius: everything known the moment the sphere fit."""

    expansion_index: int
    radius: float
    iters_to_clear: int
    cumulative_iters: int
    cumulative_queries: int
    z: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class AttackTrace:
    rows: tuple
    termination: str


@dataclass(frozen=True)
class QueryLedger:
    """Exact decomposition of every oracle query spent by a run."""

    init_tries: int
    sphere_passes: int
    n_sphere_points: int
    candidate_verifications: int
    discarded_partial: int = 0

    @property
    def total(self) -> int:
        return (self.init_tries
                + self.sphere_passes * self.n_sphere_points
                + self.candidate_verifications
                + self.discarded_partial)


@dataclass(frozen=True)
class AttackResult:
    target_class: int
    z_star: np.ndarray = field(repr=False)
    final_radius: float | None
    expansions: int
    termination: str
    trace: AttackTrace
    ledger: QueryLedger
    z0: np.ndarray = field(repr=False, default=None)


def phi(oracle, generator, target_class: int, z) -> int:
    """The repulsion indicator: 0 inside the target class, −1 outside."""
    x = generator(check_vector(z, name="z"))
    return 0 if oracle.query(x) == target_class else -1


def estimate_direction(oracle, generator, target_class: int, z, radius: float,
                       n: int, rng: RngStream) -> DirectionEstimate:
    """Average the negated directions of sphere samples outside the class.

    Consumes exactly ``n`` oracle queries.  If the budget dies mid-batch the
    answered prefix is discarded and the refusal propagates.
    """
    z = check_vector(z, name="z")
    batch = sample_sphere_batch(rng, n, z.shape[0], radius)
    points = batch.points_around(z)
    labels = _query_batch(oracle, generator(points))
    outside = labels != target_class
    k = int(np.sum(outside))
    if k == 0:
        vector = np.zeros_like(z)
    else:
        vector = -batch.directions[outside].sum(axis=0) / n
    return DirectionEstimate(vector=vector, outside_fraction=k / n)


def _query_batch(oracle, X) -> np.ndarray:
    batch = getattr(oracle, "query_batch", None)
    if batch is not None:
        return np.asarray(batch(X), dtype=np.int64)
    return np.asarray([oracle.query(row) for row in X], dtype=np.int64)


def apply_update(z, estimate: DirectionEstimate, alpha: float,
                 normalize: bool = True) -> np.ndarray:
    """Step from ``z`` along the estimate (unit-normalized by default)."""
    z = check_vector(z, name="z")
    if estimate.is_zero:
        raise DegenerateInputError("cannot update along a zero direction estimate")
    direction = estimate.vector
    if normalize:
        direction = direction / np.linalg.norm(direction)
    return z + alpha * direction


def initialize_in_class(oracle, generator, target_class: int, rng: RngStream,
                        init_max_tries: int) -> tuple[np.ndarray, int]:
    """Sample the standard normal latent prior until the oracle says c*.

    Returns the accepted point and the number of tries (= queries spent).
    """
    if init_max_tries < 1:
        raise ValidationError(f"init_max_tries must be >= 1, got {init_max_tries}")
    latent_dim = generator.latent_dim
    for attempt in range(1, init_max_tries + 1):
        z = rng.normal(latent_dim)
        if oracle.query(generator(z)) == target_class:
            return z, attempt
    raise InitializationError(init_max_tries, target_class)


def brep_attack(config: AttackConfig, oracle, generator, rng: RngStream) -> AttackResult:
    """Run the full repulsion loop; see the module docstring for the shape.

    The passed oracle is wrapped in a private :class:`CountingOracle`
    enforcing ``config.query_budget``, so the returned ledger reconciles
    with an exact count regardless of the oracle given.
    """
    oracle_dim = getattr(oracle, "input_dim", None)
    if oracle_dim is not None and oracle_dim != generator.output_dim:
        raise ValidationError(
            f"oracle expects dim {oracle_dim} but generator outputs {generator.output_dim}"
        )
    counted = CountingOracle(oracle, budget=config.query_budget)
    step_rule = _resolve_step_rule(config.step_rule)

    z0, init_tries = initialize_in_class(
        counted, generator, config.target_class, rng, config.init_max_tries
    )
    state = AttackState(z=z0, z_star=z0.copy())
    rows: list[TraceRow] = []
    sphere_passes = 0
    verifications = 0
    discarded = 0
    cumulative_iters = 0
    termination = TERMINATION_MAX_ITERS

    while state.iters < config.max_iters:
        radius = config.radius_at(state.expansion_index)
        if radius > _RADIUS_CAP:
            raise DegenerateInputError(
                "radius ladder overflow: the oracle appears to label every point "
                "as the target class"
            )
        before = counted.count
        try:
            estimate = estimate_direction(
                counted, generator, config.target_class, state.z,
                radius, config.n_sphere_points, rng,
            )
        except BudgetExhaustedError:
            discarded = counted.count - before
            termination = TERMINATION_BUDGET
            break
        sphere_passes += 1

        if estimate.outside_fraction == 0.0:
            # The whole sphere sits inside the class: lock it in and expand.
            state.z_star = state.z.copy()
            cumulative_iters += state.iters
            rows.append(TraceRow(
                expansion_index=state.expansion_index,
                radius=radius,
                iters_to_clear=state.iters,
                cumulative_iters=cumulative_iters,
                cumulative_queries=counted.count,
                z=state.z.copy(),
            ))
            state.expansion_index += 1
            state.iters = 0
            continue

        if estimate.is_zero:
            # Outside directions cancelled exactly; resample rather than
            # divide by zero.  Measure-zero, but the loop must be total.
            state.iters += 1
            continue

        candidate = apply_update(state.z, estimate, step_rule(radius),
                                 config.normalize_direction)
        try:
            indicator = phi(counted, generator, config.target_class, candidate)
        except BudgetExhaustedError:
            termination = TERMINATION_BUDGET
            break
        verifications += 1
        if indicator == 0:
            state.z = candidate
        state.iters += 1

    ledger = QueryLedger(
        init_tries=init_tries,
        sphere_passes=sphere_passes,
        n_sphere_points=config.n_sphere_points,
        candidate_verifications=verifications,
        discarded_partial=discarded,
    )
    if ledger.total != counted.count:
        raise LabelInvError(
            f"query ledger out of balance: {ledger.total} != {counted.count}"
        )
    expansions = len(rows)
    return AttackResult(
        target_class=config.target_class,
        z_star=state.z_star,
        final_radius=config.radius_at(expansions - 1) if expansions else None,
        expansions=expansions,
        termination=termination,
        trace=AttackTrace(rows=tuple(rows), termination=termination),
        ledger=ledger,
        z0=z0,
    )


def write_trace_csv(trace: AttackTrace, path) -> None:
    """Serialize a trace as CSV: radius, iters_to_clear, cumulative_queries."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["radius", "iters_to_clear", "cumulative_queries"])
        for row in trace.rows:
            writer.writerow([format_float(row.radius), row.iters_to_clear,
                             row.cumulative_queries])
