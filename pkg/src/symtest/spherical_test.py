"""Spherical-symmetry test: observed statistic plus the spherically
symmetric bootstrap.

Bootstrap scheme, per replicate b = 1..B: resample the observed norms with
replacement, attach fresh uniform sphere directions (the product is
spherically symmetric by construction), draw a fresh direction grid, and
recompute the statistic. The critical value is the empirical (1-alpha)
quantile of the B bootstrap statistics.

Every random draw is keyed by (master_seed, replicate_index, b, purpose),
so reports are pure functions of (data, config) under any thread count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import DomainError, EmptyInput
from .samplers import (
    PURPOSE_BOOT_GRID_U,
    PURPOSE_BOOT_NORMS,
    PURPOSE_BOOT_SPHERE,
    PURPOSE_GRID_U,
    RngStream,
    resample_with_replacement,
    sample_sphere,
)
from .statistic import ks_statistic, make_grid

# crude heavy-tail heuristic on the norm pool; flags Cauchy-like samples
_HEAVY_TAIL_RATIO = 20.0


@dataclass(frozen=True)
class BootstrapConfig:
    """Test configuration: bootstrap size, grid parameters, level, seed."""

    B: int = 100
    Nu: int = 1000
    Nc: int = 500
    c0: float = 10.0
    alpha: float = 0.05
    master_seed: int = 0

    def __post_init__(self):
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if self.Nu < 1 or self.Nc < 1:
            raise ValueError(f"need Nu >= 1 and Nc >= 1, got Nu={self.Nu}, Nc={self.Nc}")
        if not self.c0 >= 2.0:
            raise ValueError(f"c0 must be >= 2, got {self.c0}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.master_seed < 0:
            raise ValueError(f"master_seed must be nonnegative, got {self.master_seed}")


@dataclass(frozen=True)
class TestReport:
    """Outcome of one symmetry test.

    ``wall_time`` is measurement metadata and is excluded from the JSON
    form so identical (data, config) runs serialize byte-identically.
    """

    test: str
    n: int
    d: int
    statistic: float
    quantile: float
    p_value: float
    reject: bool
    n_zero_norm: int
    heavy_tail_warning: bool
    config: BootstrapConfig
    boot_stats: tuple[float, ...]
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        """JSON-shaped dict with a fixed key order (no wall_time)."""
        return {
            "test": self.test,
            "n": self.n,
            "d": self.d,
            "statistic": self.statistic,
            "quantile": self.quantile,
            "p_value": self.p_value,
            "reject": self.reject,
            "n_zero_norm": self.n_zero_norm,
            "heavy_tail_warning": self.heavy_tail_warning,
            "config": {
                "B": self.config.B,
                "Nu": self.config.Nu,
                "Nc": self.config.Nc,
                "c0": self.config.c0,
                "alpha": self.config.alpha,
                "master_seed": self.config.master_seed,
            },
            "boot_stats": list(self.boot_stats),
        }

    def to_json(self) -> str:
        return emit_json(self.as_dict())


def _fmt_scalar(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        # 17 significant digits: lossless for float64, stable across runs
        return f"{float(x):.17g}"
    if isinstance(x, str):
        return '"' + x.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(x).__name__}")


def emit_json(obj) -> str:
    """Canonical JSON: insertion-ordered keys, floats at 17 significant
    digits, no whitespace variance."""
    if isinstance(obj, dict):
        inner = ", ".join(f'"{k}": {emit_json(v)}' for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(emit_json(v) for v in obj) + "]"
    return _fmt_scalar(obj)


def empirical_quantile(values, p: float) -> float:
    """Type-1 empirical quantile: the ceil(p*B)-th order statistic."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise EmptyInput("quantile of an empty value list")
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {p}")
    B = values.size
    # nudge absorbs float error in p*B so exact-integer products stay exact
    target = p * B
    k = int(math.ceil(target - max(1e-12, 16 * np.finfo(float).eps * target)))
    k = min(max(k, 1), B)
    return float(np.sort(values)[k - 1])


def _check_sample(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise EmptyInput(f"need a nonempty 2-d sample, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("sample contains non-finite entries")
    return X


def _bootstrap_one(norms: np.ndarray, d: int, cfg: BootstrapConfig,
                   stream: RngStream, grid=None, full_product: bool = False) -> float:
    n = norms.size
    W = sample_sphere(d, n, stream.with_purpose(PURPOSE_BOOT_SPHERE))
    R = resample_with_replacement(norms, n, stream.with_purpose(PURPOSE_BOOT_NORMS))
    Xb = R[:, None] * W
    if grid is None:
        grid = make_grid(d, cfg.Nu, cfg.Nc, cfg.c0,
                         stream.with_purpose(PURPOSE_BOOT_GRID_U))
    return ks_statistic(Xb, grid, full_product=full_product).t


def _map_indexed(fn, count: int, threads: int) -> list:
    """Apply fn(i) for i in range(count), results in index order."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def bootstrap_stats_spherical(X, cfg: BootstrapConfig, *, replicate_index: int = 0,
                              threads: int = 1, shared_grid=None,
                              full_product: bool = False) -> np.ndarray:
    """The B bootstrap statistics for the spherical test on ``X``.

    ``shared_grid`` short-circuits the per-replicate grid redraw (variance
    reduction mode); default redraws directions every replicate.
    """
    X = _check_sample(X)
    n, d = X.shape
    norms = np.linalg.norm(X, axis=1)
    base = RngStream(cfg.master_seed, replicate_index)

    def one(i: int) -> float:
        return _bootstrap_one(norms, d, cfg, base.for_bootstrap(i + 1),
                              grid=shared_grid, full_product=full_product)

    with threadpool_limits(limits=1):
        return np.array(_map_indexed(one, cfg.B, threads))


def test_spherical(X, cfg: BootstrapConfig, *, replicate_index: int = 0,
                   threads: int = 1, shared_grid: bool = False,
                   full_product: bool = False) -> TestReport:
    """Run the spherical-symmetry test and assemble the report.

    The method presumes a finite mean; heavy-tailed inputs are accepted
    but flagged (`heavy_tail_warning`) since calibration degrades there.
    """
    t0 = time.perf_counter()
    X = _check_sample(X)
    n, d = X.shape
    norms = np.linalg.norm(X, axis=1)
    base = RngStream(cfg.master_seed, replicate_index)
    with threadpool_limits(limits=1):
        grid = make_grid(d, cfg.Nu, cfg.Nc, cfg.c0,
                         base.with_purpose(PURPOSE_GRID_U))
        stat = ks_statistic(X, grid, full_product=full_product).t
    boot = bootstrap_stats_spherical(
        X, cfg, replicate_index=replicate_index, threads=threads,
        shared_grid=grid if shared_grid else None, full_product=full_product)
    quantile = empirical_quantile(boot, 1.0 - cfg.alpha)
    p_value = (1.0 + int(np.sum(boot >= stat))) / (cfg.B + 1.0)
    med = float(np.median(norms))
    heavy = bool(med > 0.0 and float(norms.max()) > _HEAVY_TAIL_RATIO * med)
    return TestReport(
        test="spherical",
        n=n,
        d=d,
        statistic=float(stat),
        quantile=quantile,
        p_value=p_value,
        reject=bool(stat > quantile),
        n_zero_norm=int(np.sum(norms == 0.0)),
        heavy_tail_warning=heavy,
        config=cfg,
        boot_stats=tuple(float(b) for b in boot),
        wall_time=time.perf_counter() - t0,
    )
