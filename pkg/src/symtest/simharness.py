"""Monte Carlo experiment runner: distribution grid x sample size x test
kind, with schedule-independent seeding and CSV emission.

Replicate r of an experiment draws its data on stream (master_seed, r, 0,
data-purpose) and runs the test with replicate_index=r, so the rejection
rate is a pure function of the spec regardless of worker count.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .elliptical_test import test_elliptical
from .errors import ExperimentFailure, InvalidSpec, SingularCovariance
from .samplers import PURPOSE_DATA, DistributionSpec, RngStream, sample_distribution
from .spherical_test import BootstrapConfig, test_spherical

_TESTS = ("spherical", "elliptical")

CSV_COLUMNS = ("distribution", "d", "n", "test", "reps", "B", "Nu", "Nc",
               "c0", "alpha", "rejection_rate", "std_error", "seed")


@dataclass(frozen=True)
class ExperimentSpec:
    """One Monte Carlo experiment: distribution, sample size, replication
    count, test kind, and the bootstrap configuration (which carries the
    master seed)."""

    distribution: DistributionSpec
    n: int
    reps: int
    test: str
    cfg: BootstrapConfig
    out_path: str | None = None

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSpec(f"n must be >= 1, got {self.n}")
        if self.reps < 1:
            raise InvalidSpec(f"reps must be >= 1, got {self.reps}")
        if self.test not in _TESTS:
            raise InvalidSpec(f"test must be one of {_TESTS}, got {self.test!r}")


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    rejection_rate: float
    reps_completed: int
    reps_failed: int
    std_error: float
    wall_time: float
    p_values: tuple[float, ...] | None = None
    replicate_log: tuple[dict, ...] | None = None


def _run_replicate(spec: ExperimentSpec, r: int):
    """One replicate: (reject, p_value, statistic) or a failure marker."""
    stream = RngStream(spec.cfg.master_seed, r, 0, PURPOSE_DATA)
    X = sample_distribution(spec.distribution, spec.n, stream)
    if spec.test == "spherical":
        rep = test_spherical(X, spec.cfg, replicate_index=r)
    else:
        try:
            rep = test_elliptical(X, spec.cfg, replicate_index=r)
        except SingularCovariance as exc:
            return ("failed", str(exc))
    return ("ok", bool(rep.reject), float(rep.p_value), float(rep.statistic))


def run_experiment(spec: ExperimentSpec, *, threads: int = 1,
                   collect_pvalues: bool = False, collect_log: bool = False,
                   progress=None) -> ExperimentResult:
    """Run all replicates and aggregate the rejection rate.

    Failed replicates (singular bootstrap covariance under the elliptical
    test) are counted, never silently dropped; more than 1% of them aborts
    the experiment with :class:`ExperimentFailure`.
    """
    t0 = time.perf_counter()
    results: list = [None] * spec.reps

    def one(r: int):
        out = _run_replicate(spec, r)
        if progress is not None:
            progress(r)
        return out

    with threadpool_limits(limits=1):
        if threads <= 1 or spec.reps == 1:
            for r in range(spec.reps):
                results[r] = one(r)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, range(spec.reps)))

    failures = [msg for tag, *msg in results if tag == "failed"]
    n_failed = len(failures)
    if n_failed > 0.01 * spec.reps:
        raise ExperimentFailure(
            f"{n_failed}/{spec.reps} replicates failed "
            f"(first: {failures[0][0]})"
        )
    ok = [row for row in results if row[0] == "ok"]
    completed = len(ok)
    rejections = sum(1 for row in ok if row[1])
    rate = rejections / completed if completed else float("nan")
    se = float(np.sqrt(rate * (1.0 - rate) / completed)) if completed else float("nan")
    log = None
    if collect_log:
        log = tuple(
            {"replicate": r, "reject": row[1], "p_value": row[2], "statistic": row[3]}
            for r, row in enumerate(results) if row[0] == "ok"
        )
    return ExperimentResult(
        spec=spec,
        rejection_rate=rate,
        reps_completed=completed,
        reps_failed=n_failed,
        std_error=se,
        wall_time=time.perf_counter() - t0,
        p_values=tuple(row[2] for row in ok) if collect_pvalues else None,
        replicate_log=log,
    )


def result_csv_row(res: ExperimentResult) -> list[str]:
    spec = res.spec
    cfg = spec.cfg
    return [
        spec.distribution.format(),
        str(spec.distribution.dim),
        str(spec.n),
        spec.test,
        str(spec.reps),
        str(cfg.B),
        str(cfg.Nu),
        str(cfg.Nc),
        repr(float(cfg.c0)),
        repr(float(cfg.alpha)),
        repr(float(res.rejection_rate)),
        repr(float(res.std_error)),
        str(cfg.master_seed),
    ]


def results_to_csv(results) -> str:
    """CSV text for a result list; float cells use repr (shortest lossless
    form) so reruns emit identical bytes. Cells holding commas (parameter
    lists inside the distribution column) are double-quoted."""
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for res in results:
        writer.writerow(result_csv_row(res))
    return buf.getvalue()


def run_suite(specs, *, threads: int = 1, progress=None,
              collect_log: bool = False) -> list[ExperimentResult]:
    """Run experiments in order; results match the input order."""
    specs = list(specs)
    out = []
    for i, spec in enumerate(specs):
        res = run_experiment(spec, threads=threads, collect_log=collect_log)
        if progress is not None:
            progress(i, len(specs), res)
        out.append(res)
    return out


def replicate_log_lines(results) -> str:
    """JSON-lines per-replicate log across a suite run."""
    lines = []
    for i, res in enumerate(results):
        for entry in res.replicate_log or ():
            rec = {"experiment": i, "distribution": res.spec.distribution.format(),
                   "test": res.spec.test, **entry}
            lines.append(json.dumps(rec))
    return "\n".join(lines) + ("\n" if lines else "")


_LINE_KEYS = ("n", "reps", "test", "B", "Nu", "Nc", "c0", "alpha", "seed")


def parse_suite_file(text: str, *, defaults: BootstrapConfig | None = None,
                     default_n: int = 100, default_reps: int = 500,
                     default_test: str = "spherical",
                     base_seed: int | None = None) -> list[ExperimentSpec]:
    """Parse a plain-text suite: one experiment per line, first token the
    distribution spec, then key=value fields among n, reps, test, B, Nu,
    Nc, c0, alpha, seed. Blank lines and '#' comments are skipped.

    Lines without an explicit seed get base_seed + (line ordinal among
    experiments), so experiments never share replicate streams by accident.
    """
    cfg0 = defaults if defaults is not None else BootstrapConfig()
    if base_seed is None:
        base_seed = cfg0.master_seed
    specs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            dist = DistributionSpec.parse(tokens[0])
        except InvalidSpec as exc:
            raise InvalidSpec(f"line {lineno}: {exc}") from None
        fields = {}
        for tok in tokens[1:]:
            key, eq, val = tok.partition("=")
            if not eq or key not in _LINE_KEYS:
                raise InvalidSpec(
                    f"line {lineno}: expected key=value with key in "
                    f"{_LINE_KEYS}, got {tok!r}")
            fields[key] = val
        try:
            test = fields.get("test", default_test)
            cfg = BootstrapConfig(
                B=int(fields.get("B", cfg0.B)),
                Nu=int(fields.get("Nu", cfg0.Nu)),
                Nc=int(fields.get("Nc", cfg0.Nc)),
                c0=float(fields.get("c0", cfg0.c0)),
                alpha=float(fields.get("alpha", cfg0.alpha)),
                master_seed=int(fields.get("seed", base_seed + len(specs))),
            )
            spec = ExperimentSpec(
                distribution=dist,
                n=int(fields.get("n", default_n)),
                reps=int(fields.get("reps", default_reps)),
                test=test,
                cfg=cfg,
            )
        except (ValueError, InvalidSpec) as exc:
            raise InvalidSpec(f"line {lineno}: {exc}") from None
        specs.append(spec)
    return specs
