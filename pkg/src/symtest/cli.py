"""Command-line interface.

Subcommands:
  test      run a symmetry test on a CSV data matrix, emit a JSON report
  simulate  run a Monte Carlo suite from a plain-text config, emit CSV
  sample    draw from any distribution spec, emit CSV (debugging aid)

Exit codes: 0 success, 2 input/usage error, 3 numeric degeneracy
(singular covariance, or an aborted experiment).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .elliptical_test import test_elliptical
from .errors import (
    DomainError,
    EmptyInput,
    ExperimentFailure,
    InvalidDimension,
    InvalidSpec,
    SingularCovariance,
    SymtestError,
)
from .samplers import PURPOSE_DATA, DistributionSpec, RngStream, sample_distribution
from .simharness import parse_suite_file, replicate_log_lines, results_to_csv, run_suite
from .spherical_test import BootstrapConfig, test_spherical

_FAST_NU = 200
_FAST_NC = 100
_FAST_REPS = 200


class _CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


def _default_threads() -> int:
    raw = os.environ.get("SYMTEST_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise _CliError(f"SYMTEST_THREADS must be an integer, got {raw!r}") from None


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float, default=0.05, help="nominal level (default 0.05)")
    p.add_argument("--B", type=int, default=100, help="bootstrap replications (default 100)")
    p.add_argument("--Nu", type=int, default=1000, help="direction pairs (default 1000)")
    p.add_argument("--Nc", type=int, default=500, help="threshold grid count (default 500)")
    p.add_argument("--c0", type=float, default=10.0, help="threshold box half-width (default 10)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: SYMTEST_THREADS or 1)")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--fast", action="store_true",
                   help=f"coarse profile: Nu={_FAST_NU}, Nc={_FAST_NC}, reps={_FAST_REPS}")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="symtest",
                                 description="Bootstrap tests for spherical and "
                                             "elliptical symmetry of multivariate samples.")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test a CSV data matrix for symmetry")
    t.add_argument("input", help="CSV file: n rows x d numeric columns, optional header")
    t.add_argument("--test", dest="kind", choices=("spherical", "elliptical"),
                   default="spherical")
    t.add_argument("--format", choices=("json", "csv"), default="json")
    t.add_argument("--full-product", action="store_true",
                   help="evaluate all Nu x Nu direction combinations (slow)")
    _add_common(t)

    s = sub.add_parser("simulate", help="run a Monte Carlo experiment suite")
    s.add_argument("suite", help="suite file: one experiment per line")
    s.add_argument("--rep-log", default=None,
                   help="write a JSON-lines per-replicate log to this path")
    _add_common(s)

    d = sub.add_parser("sample", help="draw from a distribution spec")
    d.add_argument("tokens", nargs="+",
                   help="spec plus key=value fields, e.g. 'kotz:N=2,r=1,s=0.5,d=3 n=1000 seed=1'")
    d.add_argument("--format", choices=("csv",), default="csv")
    _add_common(d)
    return ap


def _read_matrix(path: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise _CliError(f"cannot read {path}: {exc}") from None
    rows = []
    width = None
    start_line = 1
    body = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not body:
        raise _CliError(f"{path}: no data rows")

    def parse_row(lineno: int, line: str):
        cells = [c.strip() for c in line.split(",")]
        try:
            return [float(c) for c in cells]
        except ValueError:
            bad = next(c for c in cells if not _is_number(c))
            raise _CliError(f"{path}: line {lineno}: non-numeric value {bad!r}") from None

    # optional single header: first line with any non-numeric cell
    first_cells = [c.strip() for c in body[0][1].split(",")]
    if not all(_is_number(c) for c in first_cells):
        body = body[1:]
        if not body:
            raise _CliError(f"{path}: header only, no data rows")
    for lineno, line in body:
        row = parse_row(lineno, line)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise _CliError(
                f"{path}: line {lineno}: expected {width} columns, got {len(row)}")
        rows.append(row)
    X = np.array(rows, dtype=np.float64)
    if not np.isfinite(X).all():
        raise _CliError(f"{path}: data contains non-finite values")
    return X


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _write_out(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _cfg_from_args(args) -> BootstrapConfig:
    Nu, Nc = args.Nu, args.Nc
    if args.fast:
        Nu, Nc = _FAST_NU, _FAST_NC
    try:
        return BootstrapConfig(B=args.B, Nu=Nu, Nc=Nc, c0=args.c0,
                               alpha=args.alpha, master_seed=args.seed)
    except ValueError as exc:
        raise _CliError(str(exc)) from None


def _cmd_test(args) -> int:
    X = _read_matrix(args.input)
    cfg = _cfg_from_args(args)
    threads = args.threads if args.threads is not None else _default_threads()
    if args.kind == "spherical":
        report = test_spherical(X, cfg, threads=threads,
                                full_product=args.full_product)
    else:
        report = test_elliptical(X, cfg, threads=threads,
                                 full_product=args.full_product)
    if args.format == "json":
        _write_out(report.to_json() + "\n", args.out)
    else:
        header = "test,n,d,statistic,quantile,p_value,reject,B,Nu,Nc,c0,alpha,seed"
        row = ",".join([
            report.test, str(report.n), str(report.d), repr(report.statistic),
            repr(report.quantile), repr(report.p_value),
            "true" if report.reject else "false",
            str(cfg.B), str(cfg.Nu), str(cfg.Nc), repr(float(cfg.c0)),
            repr(float(cfg.alpha)), str(cfg.master_seed),
        ])
        _write_out(header + "\n" + row + "\n", args.out)
    return 0


def _cmd_simulate(args) -> int:
    try:
        with open(args.suite, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _CliError(f"cannot read {args.suite}: {exc}") from None
    cfg = _cfg_from_args(args)
    default_reps = _FAST_REPS if args.fast else 500
    specs = parse_suite_file(text, defaults=cfg, default_reps=default_reps,
                             base_seed=args.seed)
    if not specs and text.strip() and not all(
            ln.split("#", 1)[0].strip() == "" for ln in text.splitlines()):
        raise _CliError(f"{args.suite}: no experiments parsed")
    threads = args.threads if args.threads is not None else _default_threads()

    def progress(i, total, res):
        sys.stderr.write(
            f"[{i + 1}/{total}] {res.spec.distribution.format()} "
            f"test={res.spec.test} n={res.spec.n} reps={res.spec.reps} "
            f"rate={res.rejection_rate:.4g} ({res.wall_time:.1f}s)\n")
        sys.stderr.flush()

    results = run_suite(specs, threads=threads, progress=progress,
                        collect_log=args.rep_log is not None)
    _write_out(results_to_csv(results), args.out)
    if args.rep_log is not None:
        with open(args.rep_log, "w", encoding="utf-8", newline="") as fh:
            fh.write(replicate_log_lines(results))
    return 0


def _cmd_sample(args) -> int:
    spec_text = args.tokens[0]
    fields = {}
    for tok in args.tokens[1:]:
        key, eq, val = tok.partition("=")
        if not eq or key not in ("n", "seed", "d", "out"):
            raise _CliError(f"expected key=value with key in (n, seed, d, out), got {tok!r}")
        fields[key] = val
    try:
        n = int(fields.get("n", 100))
        seed = int(fields.get("seed", args.seed))
        dim = int(fields["d"]) if "d" in fields else None
    except ValueError as exc:
        raise _CliError(str(exc)) from None
    spec = DistributionSpec.parse(spec_text, dim=dim)
    if n < 1:
        raise _CliError(f"n must be >= 1, got {n}")
    X = sample_distribution(spec, n, RngStream(seed, 0, 0, PURPOSE_DATA))
    lines = [",".join(repr(float(v)) for v in row) for row in X]
    _write_out("\n".join(lines) + "\n", fields.get("out", args.out))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        if args.command == "test":
            return _cmd_test(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_sample(args)
    except _CliError as exc:
        sys.stderr.write(f"symtest: error: {exc}\n")
        return exc.code
    except (InvalidSpec, InvalidDimension, EmptyInput, DomainError) as exc:
        sys.stderr.write(f"symtest: error: {exc}\n")
        return 2
    except (SingularCovariance, ExperimentFailure) as exc:
        sys.stderr.write(f"symtest: degenerate input: {exc}\n")
        return 3
    except SymtestError as exc:
        sys.stderr.write(f"symtest: error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
