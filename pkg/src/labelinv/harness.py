"""Experiment orchestration: benchmarks, sweeps, radius reports, manifests.

An :class:`ExperimentSpec` (a documented JSON schema, see below) pins a
synthetic dataset, a target and an evaluation classifier of different
architectures, a latent generator, attack settings, target classes, and
seeds.  :func:`run_experiment` builds everything, runs the repulsion attack
once per (target class, seed), scores each reconstruction with the
evaluation classifier, and returns a :class:`RunManifest` whose canonical
JSON form is byte-identical across reruns except for the wall-clock field.

Spec document layout (all keys optional, defaults below)::

    {
      "dataset": {"num_classes": 10, "dim": 16, "separation": 20.0,
                  "spread": 2.0, "samples_per_class": 200,
                  "public_fraction": 0.5},
      "target_architecture": "linear" | {"kind": "mlp", ...},
      "evaluator_architecture": ...,            # must differ from target
      "generator": "identity" | {"kind": "affine", "latent_dim": 8},
      "attack": {"n_sphere_points": 32, "initial_radius": 2.0, ...},
      "target_classes": [5, 6, ...] | null,     # null = all private classes
      "seeds": [0, 1, 2],
      "data_seed": 0,
      "budgets": [1024, ...] | null,
      "n_grid": [8, 32, 128] | null
    }
"""

from __future__ import annotations

import csv
import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .attack import TERMINATION_INIT_FAILED, AttackConfig, AttackResult, brep_attack
from .core import RngStream
from .errors import (
    BudgetExhaustedError,
    DegenerateInputError,
    InitializationError,
    LabelInvError,
    ValidationError,
)
from .jsonio import dump_canonical, format_float, load_json
from .models import (
    IdentityGenerator,
    LinearSoftmaxClassifier,
    MlpClassifier,
    fit_affine_generator,
    hard_label,
    make_gaussian_mixture,
    split_classes,
    train_classifier,
)
from .oracle import ModelOracle, check_oracle_determinism

__all__ = [
    "ClassRunRecord",
    "DatasetParams",
    "ExperimentContext",
    "ExperimentSpec",
    "MANIFEST_VERSION",
    "RadiusReportRow",
    "RadiusStep",
    "RunManifest",
    "SeedStudyResult",
    "attack_accuracy",
    "budget_sweep",
    "build_experiment",
    "load_experiment_spec",
    "load_manifest",
    "mlp_benchmark_spec",
    "n_tradeoff_sweep",
    "normalize_architecture",
    "normalize_generator",
    "percent_string",
    "radius_report",
    "run_experiment",
    "seed_study",
    "standard_benchmark_spec",
    "write_manifest",
    "write_radius_report_csv",
    "write_run_trace_csv",
    "write_sweep_csv",
]

MANIFEST_VERSION = 1

_ARCH_KINDS = {"linear", "mlp"}
_ATTACK_KEYS = {
    "n_sphere_points", "initial_radius", "radius_multiplier", "step_rule",
    "max_iters", "query_budget", "init_max_tries", "normalize_direction",
}


def percent_string(fraction: float) -> str:
    """Two-decimal percentage string, e.g. 227/300 -> '75.67%'."""
    return f"{100.0 * float(fraction):.2f}%"


def normalize_architecture(arch) -> dict:
    """Canonical form of an architecture descriptor: {'kind': ..., **kwargs}."""
    if isinstance(arch, str):
        doc = {"kind": arch}
    elif isinstance(arch, dict):
        doc = {str(k): v for k, v in arch.items()}
    else:
        raise ValidationError(f"bad architecture descriptor: {arch!r}")
    kind = doc.get("kind")
    if kind not in _ARCH_KINDS:
        raise ValidationError(
            f"unknown architecture kind {kind!r}; expected one of {sorted(_ARCH_KINDS)}"
        )
    if "hidden_layer_sizes" in doc:
        doc["hidden_layer_sizes"] = [int(h) for h in doc["hidden_layer_sizes"]]
    return doc


def _architecture_signature(doc: dict):
    """Kind plus the full resolved hyperparameters (seed excluded).

    Instantiating the estimator expands defaults, so descriptors that spell
    the same network differently compare equal.
    """
    kwargs = {k: v for k, v in doc.items() if k != "kind"}
    if "hidden_layer_sizes" in kwargs:
        kwargs["hidden_layer_sizes"] = tuple(kwargs["hidden_layer_sizes"])
    try:
        if doc["kind"] == "linear":
            estimator = LinearSoftmaxClassifier(**kwargs)
        else:
            estimator = MlpClassifier(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"bad architecture parameters: {exc}") from exc
    params = estimator.get_params()
    params.pop("random_state", None)
    return (doc["kind"], tuple(sorted(params.items())))


def normalize_generator(gen) -> dict:
    """Canonical generator descriptor: identity or affine with a latent size."""
    if isinstance(gen, str):
        doc = {"kind": gen}
    elif isinstance(gen, dict):
        doc = {str(k): v for k, v in gen.items()}
    else:
        raise ValidationError(f"bad generator descriptor: {gen!r}")
    kind = doc.get("kind")
    if kind == "identity":
        if set(doc) - {"kind"}:
            raise ValidationError("identity generator takes no parameters")
        return {"kind": "identity"}
    if kind == "affine":
        if set(doc) - {"kind", "latent_dim"}:
            raise ValidationError(f"unknown generator keys {sorted(set(doc) - {'kind', 'latent_dim'})}")
        latent_dim = int(doc.get("latent_dim", 0))
        if latent_dim < 1:
            raise ValidationError("affine generator needs latent_dim >= 1")
        return {"kind": "affine", "latent_dim": latent_dim}
    raise ValidationError(f"unknown generator kind {kind!r}; expected identity or affine")


@dataclass(frozen=True)
class DatasetParams:
    """Parameters of the synthetic Gaussian-mixture benchmark dataset.

    The default separation places class means at the typical norm of the
    standard normal init prior, so an identity-prior attack can find every
    class; the spread keeps a 10:1 separation ratio so classifiers train
    to ~100%.
    """

    num_classes: int = 10
    dim: int = 16
    separation: float = 4.0
    spread: float = 0.4
    samples_per_class: int = 200
    public_fraction: float = 0.5

    def __post_init__(self):
        split_classes(self.num_classes, self.public_fraction)
        if self.dim < 1:
            raise ValidationError(f"dim must be >= 1, got {self.dim}")
        if not self.separation > 0 or self.spread < 0:
            raise ValidationError("separation must be positive and spread non-negative")
        if self.samples_per_class < 2:
            raise ValidationError("samples_per_class must be >= 2")

    def to_document(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment, JSON-serializable.

    Invariants: the evaluation architecture differs from the target
    architecture, and every target class is private.
    """

    dataset: DatasetParams = DatasetParams()
    target_architecture: object = "linear"
    evaluator_architecture: object = "mlp"
    generator: object = "identity"
    attack: dict = field(default_factory=dict)
    target_classes: tuple | None = None
    seeds: tuple = (0,)
    data_seed: int = 0
    budgets: tuple | None = None
    n_grid: tuple | None = None

    def __post_init__(self):
        if isinstance(self.dataset, dict):
            try:
                object.__setattr__(self, "dataset", DatasetParams(**self.dataset))
            except TypeError as exc:
                raise ValidationError(f"bad dataset parameters: {exc}") from exc
        elif not isinstance(self.dataset, DatasetParams):
            raise ValidationError(f"bad dataset descriptor: {self.dataset!r}")

        target = normalize_architecture(self.target_architecture)
        evaluator = normalize_architecture(self.evaluator_architecture)
        if _architecture_signature(target) == _architecture_signature(evaluator):
            raise ValidationError(
                "evaluator architecture must differ from the target architecture"
            )
        object.__setattr__(self, "target_architecture", target)
        object.__setattr__(self, "evaluator_architecture", evaluator)

        generator = normalize_generator(self.generator)
        if generator["kind"] == "affine" and generator["latent_dim"] > self.dataset.dim:
            raise ValidationError("affine latent_dim cannot exceed the dataset dim")
        object.__setattr__(self, "generator", generator)

        attack = {str(k): v for k, v in dict(self.attack).items()}
        unknown = set(attack) - _ATTACK_KEYS
        if unknown:
            raise ValidationError(f"unknown attack keys {sorted(unknown)}")
        if "step_rule" in attack and not isinstance(attack["step_rule"], str):
            raise ValidationError("step_rule in a spec must be a string")
        config = AttackConfig(target_class=0, **attack)  # value validation
        # store canonically (all keys, defaults expanded) so that two specs
        # naming the same settings compare equal and serialize identically
        object.__setattr__(
            self, "attack",
            {name: getattr(config, name) for name in sorted(_ATTACK_KEYS)})

        _, private = split_classes(self.dataset.num_classes,
                                   self.dataset.public_fraction)
        if self.target_classes is None:
            object.__setattr__(self, "target_classes", private)
        else:
            classes = tuple(int(c) for c in self.target_classes)
            if not classes:
                raise ValidationError("target_classes must be nonempty")
            if len(set(classes)) != len(classes):
                raise ValidationError("target_classes must not repeat")
            outside = set(classes) - set(private)
            if outside:
                raise ValidationError(
                    f"target classes {sorted(outside)} are not private classes {list(private)}"
                )
            object.__setattr__(self, "target_classes", classes)

        seeds = tuple(int(s) for s in self.seeds)
        if not seeds:
            raise ValidationError("seeds must be nonempty")
        object.__setattr__(self, "seeds", seeds)
        object.__setattr__(self, "data_seed", int(self.data_seed))

        for name in ("budgets", "n_grid"):
            grid = getattr(self, name)
            if grid is None:
                continue
            grid = tuple(int(v) for v in grid)
            if not grid or any(v < 1 for v in grid):
                raise ValidationError(f"{name} must be a nonempty list of positive integers")
            object.__setattr__(self, name, grid)

    @property
    def public_classes(self) -> tuple:
        return split_classes(self.dataset.num_classes, self.dataset.public_fraction)[0]

    @property
    def private_classes(self) -> tuple:
        return split_classes(self.dataset.num_classes, self.dataset.public_fraction)[1]

    def attack_config(self, target_class: int) -> AttackConfig:
        return AttackConfig(target_class=int(target_class), **self.attack)

    def to_document(self) -> dict:
        return {
            "dataset": self.dataset.to_document(),
            "target_architecture": self.target_architecture,
            "evaluator_architecture": self.evaluator_architecture,
            "generator": self.generator,
            "attack": dict(self.attack),
            "target_classes": list(self.target_classes),
            "seeds": list(self.seeds),
            "data_seed": self.data_seed,
            "budgets": None if self.budgets is None else list(self.budgets),
            "n_grid": None if self.n_grid is None else list(self.n_grid),
        }

    @classmethod
    def from_document(cls, doc) -> "ExperimentSpec":
        if not isinstance(doc, dict):
            raise ValidationError("spec document must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown spec keys {sorted(unknown)}")
        kwargs = dict(doc)
        for name in ("target_classes", "seeds", "budgets", "n_grid"):
            if kwargs.get(name) is not None:
                kwargs[name] = tuple(kwargs[name])
        return cls(**kwargs)


def load_experiment_spec(path) -> ExperimentSpec:
    """Parse a spec JSON file; malformed content raises a validation error."""
    try:
        doc = load_json(path)
    except ValueError as exc:
        raise ValidationError(f"spec file is not valid JSON: {exc}") from exc
    return ExperimentSpec.from_document(doc)


@dataclass(frozen=True)
class ExperimentContext:
    """The trained world an experiment runs in: data, models, generator."""

    dataset: object = field(repr=False)
    target_model: object = field(repr=False)
    evaluator_model: object = field(repr=False)
    generator: object = field(repr=False)
    target_training_accuracy: float = 0.0
    evaluator_training_accuracy: float = 0.0


def build_experiment(spec: ExperimentSpec) -> ExperimentContext:
    """Draw the dataset, train both classifiers, and fit the generator.

    Deterministic given the spec: the dataset stream, the target trainer,
    and the evaluator trainer are sub-seeded from ``data_seed``.
    """
    p = spec.dataset
    rng = RngStream(spec.data_seed, key=(0,))
    dataset = make_gaussian_mixture(p.num_classes, p.dim, p.separation, p.spread,
                                    p.samples_per_class, rng, p.public_fraction)
    private = dataset.private_classes
    target = train_classifier(dataset, private, spec.target_architecture,
                              seed=spec.data_seed + 1)
    evaluator = train_classifier(dataset, private, spec.evaluator_architecture,
                                 seed=spec.data_seed + 2)
    if spec.generator["kind"] == "identity":
        generator = IdentityGenerator(p.dim)
    else:
        public_X, _ = dataset.samples_for(dataset.public_classes)
        generator = fit_affine_generator(public_X, spec.generator["latent_dim"])
    return ExperimentContext(
        dataset=dataset,
        target_model=target,
        evaluator_model=evaluator,
        generator=generator,
        target_training_accuracy=float(target.training_accuracy_),
        evaluator_training_accuracy=float(evaluator.training_accuracy_),
    )


@dataclass(frozen=True)
class RadiusStep:
    """One cleared ladder rung of one run, as recorded in the manifest."""

    expansion_index: int
    radius: float
    iters_to_clear: int
    cumulative_iters: int
    cumulative_queries: int

    def to_document(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ClassRunRecord:
    """Outcome of one (target class, seed) attack run."""

    target_class: int
    seed: int
    termination: str
    success: bool
    evaluator_class: int | None
    queries_total: int | None
    init_tries: int | None
    sphere_passes: int | None
    candidate_verifications: int | None
    discarded_partial: int | None
    expansions: int
    final_radius: float | None
    steps: tuple
    z_star: tuple | None
    error: str | None = None
    result: AttackResult | None = field(default=None, repr=False, compare=False)

    def to_document(self) -> dict:
        return {
            "target_class": self.target_class,
            "seed": self.seed,
            "termination": self.termination,
            "success": self.success,
            "evaluator_class": self.evaluator_class,
            "queries_total": self.queries_total,
            "init_tries": self.init_tries,
            "sphere_passes": self.sphere_passes,
            "candidate_verifications": self.candidate_verifications,
            "discarded_partial": self.discarded_partial,
            "expansions": self.expansions,
            "final_radius": self.final_radius,
            "steps": [step.to_document() for step in self.steps],
            "z_star": None if self.z_star is None else list(self.z_star),
            "error": self.error,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "ClassRunRecord":
        steps = tuple(RadiusStep(**step) for step in doc.get("steps", []))
        fields = {f.name for f in dataclasses.fields(cls)} - {"result", "steps"}
        kwargs = {name: doc.get(name) for name in fields}
        if kwargs.get("z_star") is not None:
            kwargs["z_star"] = tuple(kwargs["z_star"])
        return cls(steps=steps, **kwargs)


@dataclass(frozen=True)
class RunManifest:
    """Aggregated record of one experiment; accuracy is successes/attempts."""

    spec: ExperimentSpec
    runs: tuple
    successes: int
    attempts: int
    target_training_accuracy: float | None
    evaluator_training_accuracy: float | None
    wall_clock_seconds: float
    tool_version: str
    invocation: tuple | None = None
    context: ExperimentContext | None = field(default=None, repr=False, compare=False)

    @property
    def accuracy(self) -> float:
        return self.successes / self.attempts

    def accuracy_for_seed(self, seed: int) -> float:
        runs = [r for r in self.runs if r.seed == seed]
        if not runs:
            raise ValidationError(f"no runs recorded for seed {seed}")
        return sum(r.success for r in runs) / len(runs)

    def to_document(self, include_wall_clock: bool = True) -> dict:
        doc = {
            "manifest_version": MANIFEST_VERSION,
            "tool_version": self.tool_version,
            "invocation": None if self.invocation is None else list(self.invocation),
            "spec": self.spec.to_document(),
            "target_training_accuracy": self.target_training_accuracy,
            "evaluator_training_accuracy": self.evaluator_training_accuracy,
            "runs": [run.to_document() for run in self.runs],
            "successes": self.successes,
            "attempts": self.attempts,
            "accuracy": self.accuracy,
            "accuracy_percent": percent_string(self.accuracy),
            "total_queries": sum(r.queries_total for r in self.runs
                                 if r.queries_total is not None),
        }
        if include_wall_clock:
            doc["wall_clock_seconds"] = self.wall_clock_seconds
        return doc

    @classmethod
    def from_document(cls, doc) -> "RunManifest":
        if not isinstance(doc, dict) or "runs" not in doc or "spec" not in doc:
            raise ValidationError("not a run manifest document")
        runs = tuple(ClassRunRecord.from_document(run) for run in doc["runs"])
        return cls(
            spec=ExperimentSpec.from_document(doc["spec"]),
            runs=runs,
            successes=int(doc["successes"]),
            attempts=int(doc["attempts"]),
            target_training_accuracy=doc.get("target_training_accuracy"),
            evaluator_training_accuracy=doc.get("evaluator_training_accuracy"),
            wall_clock_seconds=float(doc.get("wall_clock_seconds", 0.0)),
            tool_version=str(doc.get("tool_version", "")),
            invocation=(None if doc.get("invocation") is None
                        else tuple(doc["invocation"])),
        )


def write_manifest(manifest: RunManifest, path) -> None:
    dump_canonical(path, manifest.to_document())


def load_manifest(path) -> RunManifest:
    return RunManifest.from_document(load_json(path))


def _verdict(context: ExperimentContext, z_star, target_class: int):
    x = context.generator(np.asarray(z_star, dtype=np.float64))
    label = hard_label(context.evaluator_model, x)
    return label, label == target_class


def _execute_run(context: ExperimentContext, config: AttackConfig,
                 seed: int) -> ClassRunRecord:
    """One attack plus its evaluator verdict; failures become failed records."""
    oracle = ModelOracle(context.target_model)
    rng = RngStream(seed, key=(2, config.target_class))
    try:
        result = brep_attack(config, oracle, context.generator, rng)
    except InitializationError as exc:
        return _failed_record(config, seed, TERMINATION_INIT_FAILED, str(exc),
                              queries=exc.tries)
    except BudgetExhaustedError as exc:
        return _failed_record(config, seed, "budget-exhausted", str(exc),
                              queries=exc.count)
    except DegenerateInputError as exc:
        return _failed_record(config, seed, "degenerate", str(exc), queries=None)

    label, success = _verdict(context, result.z_star, config.target_class)
    steps = tuple(
        RadiusStep(
            expansion_index=row.expansion_index,
            radius=float(row.radius),
            iters_to_clear=row.iters_to_clear,
            cumulative_iters=row.cumulative_iters,
            cumulative_queries=row.cumulative_queries,
        )
        for row in result.trace.rows
    )
    ledger = result.ledger
    return ClassRunRecord(
        target_class=config.target_class,
        seed=seed,
        termination=result.termination,
        success=success,
        evaluator_class=label,
        queries_total=ledger.total,
        init_tries=ledger.init_tries,
        sphere_passes=ledger.sphere_passes,
        candidate_verifications=ledger.candidate_verifications,
        discarded_partial=ledger.discarded_partial,
        expansions=result.expansions,
        final_radius=result.final_radius,
        steps=steps,
        z_star=tuple(float(v) for v in result.z_star),
        result=result,
    )


def _failed_record(config: AttackConfig, seed: int, termination: str,
                   error: str, queries) -> ClassRunRecord:
    return ClassRunRecord(
        target_class=config.target_class,
        seed=seed,
        termination=termination,
        success=False,
        evaluator_class=None,
        queries_total=queries,
        init_tries=None,
        sphere_passes=None,
        candidate_verifications=None,
        discarded_partial=None,
        expansions=0,
        final_radius=None,
        steps=(),
        z_star=None,
        error=error,
    )


def run_experiment(spec: ExperimentSpec, context: ExperimentContext | None = None,
                   jobs: int = 1, invocation=None) -> RunManifest:
    """Run the attack grid (seeds x target classes) and aggregate a manifest.

    Per-run failures (no in-class start, budget gone before a result) are
    recorded as unsuccessful runs; they never abort the batch.  ``jobs`` > 1
    runs grid cells in a thread pool; each cell owns a private sub-seeded
    stream and query counter, so results are identical at any parallelism.
    """
    if jobs < 1:
        raise ValidationError(f"jobs must be >= 1, got {jobs}")
    start = time.perf_counter()
    if context is None:
        context = build_experiment(spec)
    probe = context.dataset.class_means[spec.target_classes[0]]
    check_oracle_determinism(ModelOracle(context.target_model), probe)

    cells = [(spec.attack_config(c), s) for s in spec.seeds for c in spec.target_classes]
    if jobs == 1:
        records = [_execute_run(context, config, seed) for config, seed in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_execute_run, context, config, seed)
                       for config, seed in cells]
            records = [future.result() for future in futures]

    return RunManifest(
        spec=spec,
        runs=tuple(records),
        successes=sum(r.success for r in records),
        attempts=len(records),
        target_training_accuracy=context.target_training_accuracy,
        evaluator_training_accuracy=context.evaluator_training_accuracy,
        wall_clock_seconds=time.perf_counter() - start,
        tool_version=__version__,
        invocation=None if invocation is None else tuple(invocation),
        context=context,
    )


def attack_accuracy(results, evaluator, generator) -> float:
    """Fraction of results whose decoded z* the evaluator labels correctly."""
    results = list(results)
    if not results:
        raise ValidationError("attack accuracy is undefined for an empty result list")
    hits = 0
    for result in results:
        x = generator(np.asarray(result.z_star, dtype=np.float64))
        hits += hard_label(evaluator, x) == result.target_class
    return hits / len(results)


def _with_attack(spec: ExperimentSpec, **overrides) -> ExperimentSpec:
    return dataclasses.replace(spec, attack={**spec.attack, **overrides})


def budget_sweep(spec: ExperimentSpec, budgets=None,
                 context: ExperimentContext | None = None, jobs: int = 1):
    """Accuracy per query budget, same seeds and models throughout."""
    budgets = spec.budgets if budgets is None else tuple(int(b) for b in budgets)
    if not budgets:
        raise ValidationError("budget_sweep needs a nonempty budget list")
    if any(b < 1 for b in budgets):
        raise ValidationError("budgets must be positive")
    if any(a >= b for a, b in zip(budgets, budgets[1:])):
        raise ValidationError(f"budgets must be strictly ascending, got {list(budgets)}")
    if context is None:
        context = build_experiment(spec)
    table = []
    for budget in budgets:
        manifest = run_experiment(_with_attack(spec, query_budget=budget),
                                  context=context, jobs=jobs)
        table.append((budget, manifest.accuracy))
    return tuple(table)


def n_tradeoff_sweep(spec: ExperimentSpec, budget: int, n_grid=None,
                     context: ExperimentContext | None = None, jobs: int = 1):
    """Accuracy per sphere-sample count N under one shared query budget."""
    n_grid = spec.n_grid if n_grid is None else tuple(int(n) for n in n_grid)
    if not n_grid:
        raise ValidationError("n_tradeoff_sweep needs a nonempty N grid")
    budget = int(budget)
    if budget < 1:
        raise ValidationError("budget must be positive")
    too_big = [n for n in n_grid if n > budget]
    if too_big:
        raise ValidationError(f"N values {too_big} exceed the budget {budget}")
    if context is None:
        context = build_experiment(spec)
    table = []
    for n in n_grid:
        manifest = run_experiment(
            _with_attack(spec, n_sphere_points=n, query_budget=budget),
            context=context, jobs=jobs)
        table.append((n, manifest.accuracy))
    return tuple(table)


@dataclass(frozen=True)
class SeedStudyResult:
    """Per-seed accuracies of repeated experiments on one trained world."""

    per_seed: tuple

    @property
    def accuracies(self) -> tuple:
        return tuple(accuracy for _, accuracy in self.per_seed)

    @property
    def spread(self) -> float:
        return max(self.accuracies) - min(self.accuracies)


def seed_study(spec: ExperimentSpec, seeds,
               context: ExperimentContext | None = None,
               jobs: int = 1) -> SeedStudyResult:
    """Rerun the experiment once per seed and report the accuracy spread."""
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) < 2:
        raise ValidationError("seed_study needs at least 2 seeds")
    if context is None:
        context = build_experiment(spec)
    per_seed = []
    for seed in seeds:
        manifest = run_experiment(dataclasses.replace(spec, seeds=(seed,)),
                                  context=context, jobs=jobs)
        per_seed.append((seed, manifest.accuracy))
    return SeedStudyResult(per_seed=tuple(per_seed))


@dataclass(frozen=True)
class RadiusReportRow:
    """Aggregate statistics of one ladder rung across runs.

    ``reached_percent`` is in [0, 100]; iteration statistics are cumulative
    non-clearing iterations up to the moment the rung cleared;
    ``success_rate`` is the final-verdict success fraction of the runs that
    reached this rung.
    """

    radius: float
    reached_percent: float
    min_iterations: int
    max_iterations: int
    mean_iterations: float
    success_rate: float


def radius_report(manifests) -> tuple:
    """Per-radius reach and success statistics across one or more manifests.

    All manifests must share the radius ladder (initial radius and
    multiplier), so rung k means the same radius everywhere.
    """
    manifests = list(manifests)
    if not manifests:
        raise ValidationError("radius_report needs at least one manifest")
    ladders = {
        (m.spec.attack_config(0).initial_radius,
         m.spec.attack_config(0).radius_multiplier)
        for m in manifests
    }
    if len(ladders) != 1:
        raise ValidationError("manifests use different radius ladders")

    runs = [run for m in manifests for run in m.runs]
    total = len(runs)
    by_rung: dict[int, list] = {}
    radii: dict[int, float] = {}
    for run in runs:
        for step in run.steps:
            by_rung.setdefault(step.expansion_index, []).append(
                (step.cumulative_iters, run.success))
            radii[step.expansion_index] = step.radius

    rows = []
    previous = 100.0
    for rung in sorted(by_rung):
        cohort = by_rung[rung]
        iters = [i for i, _ in cohort]
        reached = 100.0 * len(cohort) / total
        if reached > previous + 1e-9:
            raise LabelInvError("reach percentages must be non-increasing in radius")
        previous = reached
        rows.append(RadiusReportRow(
            radius=radii[rung],
            reached_percent=reached,
            min_iterations=min(iters),
            max_iterations=max(iters),
            mean_iterations=sum(iters) / len(cohort),
            success_rate=sum(success for _, success in cohort) / len(cohort),
        ))
    return tuple(rows)


def write_radius_report_csv(rows, path) -> None:
    """Radius report rows as CSV with two-decimal radii and percentages."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["radius", "reached", "min_iterations", "max_iterations",
                         "mean_iterations", "success_rate"])
        for row in rows:
            writer.writerow([
                f"{row.radius:.2f}",
                f"{row.reached_percent:.2f}%",
                row.min_iterations,
                row.max_iterations,
                f"{row.mean_iterations:.2f}",
                percent_string(row.success_rate),
            ])


def write_sweep_csv(table, path, key_header: str) -> None:
    """A (key, accuracy) table as CSV with exact and percent columns."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([key_header, "accuracy", "percent"])
        for key, accuracy in table:
            writer.writerow([key, format_float(accuracy), percent_string(accuracy)])


def write_run_trace_csv(record: ClassRunRecord, path) -> None:
    """One run's cleared-radius trace as CSV (same columns as the attack module)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["radius", "iters_to_clear", "cumulative_queries"])
        for step in record.steps:
            writer.writerow([format_float(step.radius), step.iters_to_clear,
                             step.cumulative_queries])


def standard_benchmark_spec(seeds=(0, 1, 2), data_seed=1,
                            **attack_overrides) -> ExperimentSpec:
    """The default benchmark: linear target, small MLP evaluator.

    Ten Gaussian classes in 16 dimensions, the first five public and the
    last five private (training and attack targets).  The default query
    budget stops each run at a moderate sphere radius, where target and
    evaluator still agree about deep in-class points; the world seed is a
    frozen regression choice.
    """
    attack = {"query_budget": 8192, **attack_overrides}
    return ExperimentSpec(
        dataset=DatasetParams(),
        target_architecture="linear",
        evaluator_architecture={"kind": "mlp", "hidden_layer_sizes": [32]},
        generator="identity",
        attack=attack,
        seeds=tuple(seeds),
        data_seed=data_seed,
    )


def mlp_benchmark_spec(seeds=(0, 1, 2), data_seed=14,
                       **attack_overrides) -> ExperimentSpec:
    """The curved-target benchmark: MLP target, wider MLP evaluator.

    Used for budget and N sweeps.  On this world the accuracy-versus-budget
    curve rises to an interior maximum and then declines: pushing past the
    sweet spot drives the reconstruction so deep along the target's curved
    class region that the evaluator stops recognizing it.  The budget grid
    is base-2 from 2^6 to 2^16; the world seed is a frozen regression
    choice.
    """
    return ExperimentSpec(
        dataset=DatasetParams(),
        target_architecture={"kind": "mlp", "hidden_layer_sizes": [32]},
        evaluator_architecture={"kind": "mlp", "hidden_layer_sizes": [64]},
        generator="identity",
        attack=dict(attack_overrides),
        seeds=tuple(seeds),
        data_seed=data_seed,
        budgets=tuple(2 ** k for k in range(6, 17)),
        n_grid=(8, 32, 128),
    )
