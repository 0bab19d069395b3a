"""Command-line surface: prob, sample, evolve, discretize, compare.

Exit codes: 0 success or statistical PASS, 1 statistical FAIL, 2 validation
or model-format error, 3 I/O error, 4 numeric failure. Every file-producing
command writes a sibling <out>.report.json with everything needed to
reproduce the run bit-exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import hmm as hmm_ops
from . import hqmm as hqmm_ops
from .ensemble import (
    EnsembleConfig,
    ensemble_vs_master,
    exact_distribution_if_feasible,
    run_ensemble,
    total_variation,
)
from .errors import (
    EXIT_FAIL,
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_VALIDATION,
    ModelFormatError,
    NumericFailureError,
    ToolkitError,
    ValidationError,
)
from .hmm import HMM
from .hqmm import HQMM, embed_hmm
from .linalg import DensityMatrix
from .modelfile import (
    FORMAT_VERSION,
    OpenSystemModel,
    file_digest,
    parse_model,
    write_model,
)
from .opensystem import _rk4_states, discretize
from .rng import GENERATOR_ID

TV_BAND_SIGMA = 3.0  # per-sequence 3-sigma bands, aggregated
MASTER_BAND_COEFFICIENT = 1.0  # C in the 3/sqrt(N) + C*dt acceptance band


def _parse_sequence(raw: str) -> tuple[str, ...]:
    """Comma-separated symbols, or one symbol per character when no comma."""
    if raw == "":
        return ()
    if "," in raw:
        parts = tuple(raw.split(","))
        if any(p == "" for p in parts):
            raise ValidationError(f"empty symbol in sequence {raw!r}")
        return parts
    return tuple(raw)


def _sequence_label(seq: tuple[str, ...]) -> str:
    return "".join(seq)


def _as_hqmm(model) -> HQMM:
    """View any parsed model as a quantum machine."""
    if isinstance(model, HQMM):
        return model
    if isinstance(model, HMM):
        return embed_hmm(model)
    if isinstance(model, OpenSystemModel):
        return HQMM(discretize(model.spec).kraus, model.initial)
    raise ValidationError(f"unsupported model type {type(model).__name__}")


def _write_report(report_path, command, model_path, parameters, outputs):
    report = {
        "format_version": FORMAT_VERSION,
        "command": command,
        "model_path": str(model_path),
        "model_sha256": file_digest(model_path),
        "parameters": parameters,
        "generator": GENERATOR_ID,
        "outputs": outputs,
    }
    Path(report_path).write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _distribution_rows(distribution, exact, total):
    """One row per sequence: label, count, frequency, exact prob, std err."""
    keys = set(distribution.counts)
    if exact is not None:
        keys |= set(exact)
    rows = []
    for seq in sorted(keys):
        count = distribution.counts.get(seq, 0)
        freq = count / total
        std_err = math.sqrt(freq * (1.0 - freq) / total)
        exact_prob = "" if exact is None else float(exact.get(seq, 0.0))
        rows.append([_sequence_label(seq), count, float(freq), exact_prob,
                     float(std_err)])
    return rows


def cmd_prob(args) -> int:
    model = parse_model(args.model)
    seq = _parse_sequence(args.sequence)
    if isinstance(model, HMM):
        p = hmm_ops.sequence_probability(model, seq)
    else:
        p = hqmm_ops.sequence_probability(_as_hqmm(model), seq)
    print(f"{p:.12f}")
    if args.report:
        _write_report(args.report, "prob", args.model,
                      {"sequence": args.sequence}, {"probability": p})
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 1:
        raise ValidationError("--n must be at least 1")
    model = _as_hqmm(parse_model(args.model))
    cfg = EnsembleConfig(num_trajectories=args.n, length=args.length,
                         master_seed=args.seed)
    result = run_ensemble(model, cfg)
    exact = exact_distribution_if_feasible(model, args.length)
    header = ["sequence", "count", "frequency", "exact_prob", "std_err"]
    _write_csv(args.out, header,
               _distribution_rows(result.distribution, exact, args.n))
    report_path = args.report or f"{args.out}.report.json"
    _write_report(report_path, "sample", args.model,
                  {"length": args.length, "n": args.n, "seed": args.seed},
                  {"csv": str(args.out)})
    print(f"wrote {len(result.distribution.counts)} observed sequences to {args.out}")
    return EXIT_OK


def cmd_evolve(args) -> int:
    model = parse_model(args.model)
    if not isinstance(model, OpenSystemModel):
        raise ValidationError("evolve requires an open_system model")
    if args.steps < 1:
        raise ValidationError("--steps must be at least 1")
    if args.t_final < 0:
        raise ValidationError("--t-final must be nonnegative")
    dim = model.spec.dim
    rows = []
    final = model.initial.mat
    for t, state in _rk4_states(model.spec, model.initial.mat, args.t_final,
                                args.steps):
        row = [float(t)]
        for i in range(dim):
            for j in range(dim):
                row.append(float(state[i, j].real))
                row.append(float(state[i, j].imag))
        rows.append(row)
        final = state
    # Trace-drift guard: raises NumericFailureError before anything is written.
    DensityMatrix.from_evolved(final, trace_tol=1e-8)
    header = ["t"]
    for i in range(dim):
        for j in range(dim):
            header.extend([f"rho_{i}_{j}_re", f"rho_{i}_{j}_im"])
    _write_csv(args.out, header, rows)
    report_path = args.report or f"{args.out}.report.json"
    _write_report(report_path, "evolve", args.model,
                  {"t_final": args.t_final, "steps": args.steps},
                  {"csv": str(args.out)})
    print(f"wrote {len(rows)} states to {args.out}")
    return EXIT_OK


def cmd_discretize(args) -> int:
    model = parse_model(args.model)
    if not isinstance(model, OpenSystemModel):
        raise ValidationError("discretize requires an open_system model")
    disc = discretize(model.spec)
    write_model(HQMM(disc.kraus, model.initial), args.out)
    print(f"completeness defect: {disc.defect!r} "
          f"(defect/dt^2 = {disc.quadratic_coefficient!r})")
    report_path = args.report or f"{args.out}.report.json"
    _write_report(report_path, "discretize", args.model, {},
                  {"model": str(args.out), "completeness_defect": disc.defect})
    return EXIT_OK


def cmd_compare(args) -> int:
    if args.n < 1:
        raise ValidationError("--n must be at least 1")
    model = parse_model(args.model)
    if not isinstance(model, OpenSystemModel):
        raise ValidationError("compare requires an open_system model")
    spec = model.spec
    cfg = EnsembleConfig(num_trajectories=args.n, length=args.length,
                         master_seed=args.seed)
    t_final = args.length * spec.dt
    comparison = ensemble_vs_master(spec, model.initial, cfg, t_final,
                                    band_coefficient=MASTER_BAND_COEFFICIENT)
    machine = HQMM(comparison.discretization.kraus, model.initial)
    exact = exact_distribution_if_feasible(machine, args.length)

    header = ["sequence", "count", "frequency", "exact_prob", "std_err"]
    _write_csv(args.out, header,
               _distribution_rows(comparison.ensemble.distribution, exact, args.n))
    report_path = args.report or f"{args.out}.report.json"
    _write_report(report_path, "compare", args.model,
                  {"length": args.length, "n": args.n, "seed": args.seed,
                   "t_final": t_final},
                  {"csv": str(args.out)})

    passed = comparison.passed
    print(f"completeness defect: {comparison.discretization.defect!r}")
    if exact is not None:
        tv = total_variation(comparison.ensemble.distribution, exact)
        tv_bound = 0.5 * TV_BAND_SIGMA * sum(
            math.sqrt(p * (1.0 - p) / args.n) for p in exact.values()
        )
        tv_ok = tv <= tv_bound
        passed = passed and tv_ok
        print(f"total variation: {tv!r} (bound {tv_bound!r}) "
              f"{'PASS' if tv_ok else 'FAIL'}")
    else:
        print("total variation: skipped (enumeration infeasible)")
    print(f"trace distance to master equation: {comparison.distance!r} "
          f"(bound {comparison.bound!r}) "
          f"{'PASS' if comparison.passed else 'FAIL'}")
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qhmm",
        description="Simulate labeled quantum stochastic machines and the "
                    "open systems that realize them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prob", help="probability of one output sequence")
    p.add_argument("--model", required=True)
    p.add_argument("--sequence", required=True,
                   help="symbols, one per character or comma-separated")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("sample", help="sample an ensemble of output sequences")
    p.add_argument("--model", required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evolve", help="integrate the master equation")
    p.add_argument("--model", required=True)
    p.add_argument("--t-final", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("discretize",
                       help="compile an open system into a Kraus machine file")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("compare",
                       help="sample, enumerate, and integrate; check agreement")
    p.add_argument("--model", required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ModelFormatError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())
