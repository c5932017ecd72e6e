"""``multitone`` command line: synth, estimate, theory, experiment.

Exit status is 0 on success, 2 for bad arguments or configs, 3 for
numerical failures and 4 for I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness
from .errors import ConfigurationError, NumericalError
from .estimator import EstimatorConfig, estimate, estimate_no_subtraction
from .signal import SampleBuffer, load_scenario, synthesize
from .theory import TheoryQuery, theory_report

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

FORMATS = ("csv", "bin")


def sample_format(path, override: str | None = None) -> str:
    if override:
        return override
    return "bin" if Path(path).suffix.lower() in (".bin", ".f64", ".dat") else "csv"


def write_samples(path, samples: np.ndarray, fmt: str | None = None) -> None:
    """CSV (``re,im`` per line) or little-endian float64 interleaved binary."""
    x = np.asarray(samples, dtype=np.complex128)
    if sample_format(path, fmt) == "bin":
        np.column_stack([x.real, x.imag]).astype("<f8").tofile(path)
    else:
        np.savetxt(path, np.column_stack([x.real, x.imag]), fmt="%.17g", delimiter=",")


def read_samples(path, fmt: str | None = None) -> SampleBuffer:
    if sample_format(path, fmt) == "bin":
        raw = np.fromfile(path, dtype="<f8")
        if raw.size % 2:
            raise ConfigurationError(f"{path}: odd number of float64 values")
        pairs = raw.reshape(-1, 2)
    else:
        try:
            pairs = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
        except ValueError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
        if pairs.shape[1] != 2:
            raise ConfigurationError(f"{path}: expected two columns (re, im)")
    if pairs.shape[0] == 0:
        raise ConfigurationError(f"{path}: no samples")
    return SampleBuffer(pairs[:, 0] + 1j * pairs[:, 1])


def _emit(doc: dict, output: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_synth(args) -> None:
    sc = load_scenario(args.scenario)
    write_samples(args.output, synthesize(sc, args.seed).samples, args.format)


def cmd_estimate(args) -> None:
    buf = read_samples(args.input, args.format)
    config = EstimatorConfig(args.components, args.iterations, args.tolerance_bins)
    run = estimate_no_subtraction if args.no_subtraction else estimate
    _emit(run(buf, config).to_dict(), args.output)


def cmd_theory(args) -> None:
    sc = load_scenario(args.scenario)
    query = TheoryQuery(sc, args.residual_errors, args.component)
    _emit(theory_report(query, exact=args.exact).to_dict(), args.output)


def _config_path(name: str) -> Path:
    path = Path(name)
    if path.exists() or path.suffix:
        return path
    return harness.bundled_config(name)


def cmd_experiment(args) -> None:
    doc = harness.load_config(_config_path(args.config))
    exps = harness.experiments_from_config(doc)
    if args.seed is not None:
        exps = [harness.with_seed(e, args.seed) for e in exps]
    if args.runs is not None:
        exps = [replace(e, runs=args.runs) for e in exps]
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    if doc.get("kind", "sweep") == "convergence":
        seps = doc.get("separations", [None] * len(exps))
        summary = []
        rows = []
        for sep, exp in zip(seps, exps):
            pts = harness.convergence_study(exp, args.workers)
            rows.append((sep, pts))
            summary.append({"name": exp.name, "separation": sep,
                            "points": [p.__dict__ for p in pts]})
        harness.write_convergence_csv(rows, out / "convergence.csv")
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        return
    result = harness.run_experiment(exps[0], args.workers)
    result.write_csv(out / "results.csv")
    (out / "summary.json").write_text(json.dumps(result.summary(), indent=2) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multitone", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="synthesize samples from a scenario file")
    s.add_argument("scenario")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", required=True)
    s.add_argument("--format", choices=FORMATS)
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("estimate", help="estimate L frequencies from a sample file")
    e.add_argument("input")
    e.add_argument("-L", "--components", type=int, required=True)
    e.add_argument("-Q", "--iterations", type=int, default=2)
    e.add_argument("--tolerance-bins", type=float, default=0.0)
    e.add_argument("--no-subtraction", action="store_true")
    e.add_argument("--format", choices=FORMATS)
    e.add_argument("--output")
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("theory", help="closed-form bias, variance and bounds")
    t.add_argument("scenario")
    t.add_argument("--component", type=int, default=1)
    t.add_argument("--residual-errors", type=_floats,
                   help="comma-separated d_l - nu_l in bins (default all zero)")
    t.add_argument("--exact", action="store_true", help="keep the interferer amplitude-noise terms")
    t.add_argument("--output")
    t.set_defaults(func=cmd_theory)

    x = sub.add_parser("experiment", help="run a Monte Carlo experiment config")
    x.add_argument("config", help="JSON config path or bundled name (fig1, fig2, fig34, table2)")
    x.add_argument("--output", required=True, help="output directory")
    x.add_argument("--workers", type=int, default=None)
    x.add_argument("--seed", type=int, default=None)
    x.add_argument("--runs", type=int, default=None, help="override the config's run count")
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigurationError as exc:
        print(f"multitone: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"multitone: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"multitone: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
