"""Command-line front end binding attacks, theory checks, sweeps, and serving.

Subcommands::

    attack        run an experiment spec, write manifest + traces + report
    verify-theory sweep direction-estimate alignment against the true gradient
    sweep-budget  attack accuracy across query budgets (one CSV row each)
    sweep-n       attack accuracy across sphere batch sizes at a fixed budget
    report        per-radius reach/success table aggregated over manifests
    serve-oracle  answer hard-label queries for a saved model over TCP

Model files are the versioned JSON documents written by
:func:`labelinv.models.save_model`.

Every command writes only inside its output directory, and every run
embeds the tool version plus its full invocation in the emitted JSON, so
results can be traced back to the exact command that produced them.  All
randomness is explicit: attack-style commands draw every seed from the
spec file, and ``verify-theory`` exposes a single ``--seed`` flag.

Exit codes are stable for scripting:

    0   success (including attack runs with recorded per-class failures)
    2   usage or specification error (bad flags, malformed spec or model)
    3   I/O failure (missing input, unwritable output, bind failure)
    4   numerical degeneracy (zero margin gradient at the base point)
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import RngStream
from .errors import DegenerateInputError, ProtocolError, ValidationError
from .harness import (
    budget_sweep,
    load_experiment_spec,
    load_manifest,
    n_tradeoff_sweep,
    percent_string,
    radius_report,
    run_experiment,
    write_manifest,
    write_radius_report_csv,
    write_run_trace_csv,
    write_sweep_csv,
)
from .jsonio import dump_canonical
from .models import IdentityGenerator, load_model
from .oracle import serve_oracle
from .theory import (
    MarginModel,
    alignment_sweep,
    linear_alignment_testbed,
    quadratic_alignment_testbed,
    theorem1_bound,
    write_alignment_csv,
)

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4

_TESTBEDS = ("linear", "curved")


def _fail(message: str) -> None:
    print(f"labelinv: error: {message}", file=sys.stderr)


def _parse_floats(text: str, flag: str) -> tuple:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ValidationError(f"{flag} expects comma-separated numbers: {exc}")
    if not values:
        raise ValidationError(f"{flag} must list at least one value")
    return values


def _parse_ints(text: str, flag: str) -> tuple:
    values = _parse_floats(text, flag)
    if any(v != int(v) for v in values):
        raise ValidationError(f"{flag} expects integers")
    return tuple(int(v) for v in values)


def _prepare_out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(out: Path, subcommand: str, invocation, **extras) -> None:
    doc = {
        "subcommand": subcommand,
        "tool_version": __version__,
        "invocation": list(invocation),
        **extras,
    }
    dump_canonical(out / "meta.json", doc)


# ----------------------------------------------------------------- commands

def cmd_attack(args, invocation) -> int:
    spec = load_experiment_spec(args.spec)  # validate before touching outputs
    out = _prepare_out_dir(args.out)
    manifest = run_experiment(spec, jobs=args.jobs, invocation=invocation)
    write_manifest(manifest, out / "manifest.json")
    for run in manifest.runs:
        write_run_trace_csv(run, out / f"trace_c{run.target_class}_s{run.seed}.csv")
    write_radius_report_csv(radius_report([manifest]), out / "radius_report.csv")
    for run in manifest.runs:
        verdict = "success" if run.success else f"failure ({run.termination})"
        print(f"class {run.target_class} seed {run.seed}: {verdict}, "
              f"{run.queries_total if run.queries_total is not None else '?'} queries, "
              f"{run.expansions} expansions")
    print(f"accuracy {manifest.successes}/{manifest.attempts} = "
          f"{percent_string(manifest.accuracy)}")
    print(f"wrote manifest.json, {len(manifest.runs)} trace files, "
          f"radius_report.csv to {out}")
    return EXIT_OK


def cmd_verify_theory(args, invocation) -> int:
    if args.target in _TESTBEDS:
        testbed = (linear_alignment_testbed() if args.target == "linear"
                   else quadratic_alignment_testbed())
        margin_model = testbed.margin_model
        generator = testbed.generator
        z = testbed.z
        radii = (_parse_floats(args.radii, "--radii") if args.radii
                 else testbed.radii)
        bounds = testbed.bound_at
        descriptor = f"builtin:{testbed.name}"
    else:
        path = Path(args.target)
        if not path.exists():
            _fail(f"{args.target!r} is neither a built-in testbed "
                  f"({', '.join(_TESTBEDS)}) nor a model file")
            return EXIT_USAGE
        if args.base_point is None:
            raise ValidationError("--base-point is required with a model file")
        if args.radii is None:
            raise ValidationError("--radii is required with a model file")
        model = load_model(path)
        z = np.array(_parse_floats(args.base_point, "--base-point"))
        margin_model = MarginModel(model=model, target_class=args.target_class)
        generator = IdentityGenerator(dim=z.shape[0])
        radii = _parse_floats(args.radii, "--radii")
        margin_value = margin_model.margin(z)
        if margin_value <= 0:
            raise ValidationError(
                f"base point has non-positive margin {margin_value:.6g} "
                f"for class {args.target_class}")
        gradient = margin_model.margin_gradient(z).vector
        grad_norm = float(np.linalg.norm(gradient))
        if grad_norm == 0.0:
            raise DegenerateInputError("margin gradient vanishes at the base point")
        dim = z.shape[0]

        def bounds(radius, _m=margin_value, _g=grad_norm, _d=dim):
            return theorem1_bound(_m, _g, _d, radius)

        descriptor = f"model:{path.name}"

    curve = alignment_sweep(margin_model, generator, z, radii, args.n,
                            args.trials, RngStream(args.seed), bounds=bounds)
    out = _prepare_out_dir(args.out)
    write_alignment_csv(curve, out / "alignment.csv")
    _write_meta(out, "verify-theory", invocation, target=descriptor,
                seed=args.seed, n=args.n, trials=args.trials,
                radii=list(radii))
    for point in curve.points:
        print(f"rho={point.radius:g}: mean_cos={point.mean_cosine:.4f} "
              f"(stderr {point.stderr:.4f}, bound {point.bound:.4f})")
    print(f"wrote alignment.csv to {out}")
    return EXIT_OK


def cmd_sweep_budget(args, invocation) -> int:
    spec = load_experiment_spec(args.spec)
    budgets = (_parse_ints(args.budgets, "--budgets") if args.budgets
               else spec.budgets)
    if not budgets:
        raise ValidationError("no budgets: pass --budgets or put a "
                              "\"budgets\" list in the spec")
    table = budget_sweep(spec, budgets=budgets, jobs=args.jobs)
    out = _prepare_out_dir(args.out)
    write_sweep_csv(table, out / "budget_sweep.csv", key_header="budget")
    _write_meta(out, "sweep-budget", invocation, spec=spec.to_document(),
                table=[[budget, accuracy] for budget, accuracy in table])
    for budget, accuracy in table:
        print(f"budget {budget}: {percent_string(accuracy)}")
    print(f"wrote budget_sweep.csv to {out}")
    return EXIT_OK


def cmd_sweep_n(args, invocation) -> int:
    spec = load_experiment_spec(args.spec)
    n_grid = (_parse_ints(args.n_grid, "--n-grid") if args.n_grid
              else spec.n_grid)
    if not n_grid:
        raise ValidationError("no batch sizes: pass --n-grid or put an "
                              "\"n_grid\" list in the spec")
    table = n_tradeoff_sweep(spec, budget=args.budget, n_grid=n_grid,
                             jobs=args.jobs)
    out = _prepare_out_dir(args.out)
    write_sweep_csv(table, out / "n_sweep.csv", key_header="n_sphere_points")
    _write_meta(out, "sweep-n", invocation, spec=spec.to_document(),
                budget=args.budget,
                table=[[n, accuracy] for n, accuracy in table])
    for n, accuracy in table:
        print(f"n {n}: {percent_string(accuracy)}")
    print(f"wrote n_sweep.csv to {out}")
    return EXIT_OK


def cmd_report(args, invocation) -> int:
    manifests = [load_manifest(path) for path in args.manifests]
    rows = radius_report(manifests)
    out = _prepare_out_dir(args.out)
    write_radius_report_csv(rows, out / "radius_report.csv")
    _write_meta(out, "report", invocation,
                manifests=[str(path) for path in args.manifests],
                attempts=sum(m.attempts for m in manifests))
    for row in rows:
        print(f"radius {row.radius:.2f}: reached {row.reached_percent:.2f}%, "
              f"iters {row.min_iterations}-{row.max_iterations} "
              f"(mean {row.mean_iterations:.2f}), "
              f"success {percent_string(row.success_rate)}")
    print(f"wrote radius_report.csv to {out}")
    return EXIT_OK


def cmd_serve_oracle(args, invocation) -> int:
    host, sep, port_text = args.listen.rpartition(":")
    if not sep or not host:
        raise ValidationError("--listen expects host:port")
    try:
        port = int(port_text)
    except ValueError:
        raise ValidationError(f"--listen port must be an integer, got {port_text!r}")
    model = load_model(args.model)
    server = serve_oracle(model, host, port)
    address = server.address
    print(f"listening on {address[0]}:{address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return EXIT_OK


# ------------------------------------------------------------------ parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labelinv",
        description="Hard-label model inversion: attacks, theory checks, "
                    "sweeps, and a query oracle server.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="subcommand", required=True)

    attack = commands.add_parser(
        "attack", help="run an experiment spec and write its manifest")
    attack.add_argument("--spec", required=True, help="experiment spec JSON")
    attack.add_argument("--out", required=True, help="output directory")
    attack.add_argument("--jobs", type=int, default=1,
                        help="parallel (class, seed) runs (default 1)")
    attack.set_defaults(handler=cmd_attack)

    verify = commands.add_parser(
        "verify-theory",
        help="sweep estimate/gradient alignment over sphere radii")
    verify.add_argument("target",
                        help="built-in testbed (linear, curved) or a saved "
                             "model JSON file")
    verify.add_argument("--out", required=True, help="output directory")
    verify.add_argument("--seed", type=int, default=0,
                        help="root seed for all sweep randomness (default 0)")
    verify.add_argument("--n", type=int, default=64,
                        help="queries per estimate (default 64)")
    verify.add_argument("--trials", type=int, default=100,
                        help="independent estimates per radius (default 100)")
    verify.add_argument("--radii", default=None,
                        help="comma-separated radii (default: testbed grid)")
    verify.add_argument("--target-class", type=int, default=0,
                        help="class whose margin is probed (model files only)")
    verify.add_argument("--base-point", default=None,
                        help="comma-separated coordinates (model files only)")
    verify.set_defaults(handler=cmd_verify_theory)

    sweep_budget = commands.add_parser(
        "sweep-budget", help="attack accuracy at each query budget")
    sweep_budget.add_argument("--spec", required=True)
    sweep_budget.add_argument("--out", required=True)
    sweep_budget.add_argument("--budgets", default=None,
                              help="comma-separated budgets (default: spec)")
    sweep_budget.add_argument("--jobs", type=int, default=1)
    sweep_budget.set_defaults(handler=cmd_sweep_budget)

    sweep_n = commands.add_parser(
        "sweep-n", help="attack accuracy at each sphere batch size")
    sweep_n.add_argument("--spec", required=True)
    sweep_n.add_argument("--out", required=True)
    sweep_n.add_argument("--budget", type=int, required=True,
                         help="query budget shared by every batch size")
    sweep_n.add_argument("--n-grid", default=None,
                         help="comma-separated batch sizes (default: spec)")
    sweep_n.add_argument("--jobs", type=int, default=1)
    sweep_n.set_defaults(handler=cmd_sweep_n)

    report = commands.add_parser(
        "report", help="per-radius reach/success table from manifests")
    report.add_argument("manifests", nargs="+", help="manifest JSON paths")
    report.add_argument("--out", required=True)
    report.set_defaults(handler=cmd_report)

    serve = commands.add_parser(
        "serve-oracle", help="serve hard-label queries for a saved model")
    serve.add_argument("--model", required=True,
                       help="classifier JSON written by save_model")
    serve.add_argument("--listen", required=True, help="host:port to bind "
                       "(port 0 picks a free port)")
    serve.set_defaults(handler=cmd_serve_oracle)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    invocation = [parser.prog, *argv]
    try:
        return args.handler(args, invocation)
    except ValidationError as exc:
        _fail(str(exc))
        return EXIT_USAGE
    except DegenerateInputError as exc:
        _fail(str(exc))
        return EXIT_DEGENERATE
    except ProtocolError as exc:
        _fail(str(exc))
        return EXIT_IO
    except OSError as exc:
        _fail(str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
