"""Discretized Kolmogorov-Smirnov statistic over the projection-indicator
function class, with a fast bucketed engine and a quadratic reference oracle.

The class consists of functions f(x) = (v - (v.u)u).x * 1{u.x >= c} indexed
by a direction pair (u, v) and a threshold c. The statistic is

    t = sqrt(n) * max over pairs and thresholds of |mean_i f(X_i)|

Fast path, per block of direction pairs: project once, assign each
projection to its threshold bucket, accumulate the orthogonal components
into per-bucket sums, and read every threshold's value from one suffix
cumsum. Thresholds use the closed inequality (>=), so bucket assignment is
an exact comparison count: m = #{j : c_j <= p}. For the canonical uniform
threshold grid the count is computed arithmetically with an exact
comparison fix near bucket boundaries; anything else falls back to binary
search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyInput, InvalidSpec
from .samplers import RngStream, sample_sphere

# direction rows per block: keeps per-block bucket tables cache-resident
_BLOCK = 64
# cap on entries of the expanded (u, v) product handled per block
_PRODUCT_ENTRY_BUDGET = 2_000_000

_NORM_TOL = 1e-12


def _unit_check(M: np.ndarray, name: str):
    norms = np.linalg.norm(M, axis=1)
    err = np.abs(norms - 1.0).max()
    if err > _NORM_TOL:
        raise ValueError(f"{name} rows must be unit vectors (max deviation {err:.3e})")


@dataclass(frozen=True)
class DirectionGrid:
    """Direction pairs (U_k, V_k) plus the threshold grid.

    The canonical grid built by :func:`make_grid` has Nc+1 equispaced
    thresholds spanning [-c0, c0]. Custom strictly-increasing thresholds
    are accepted for diagnostics and hand-built oracles.
    """

    U: np.ndarray
    V: np.ndarray
    c0: float
    c_values: np.ndarray

    def __post_init__(self):
        U = np.array(self.U, dtype=np.float64)
        V = np.array(self.V, dtype=np.float64)
        c = np.array(self.c_values, dtype=np.float64)
        if U.ndim != 2 or V.shape != U.shape:
            raise ValueError(f"U and V must share shape (Nu, d), got {U.shape} and {V.shape}")
        if U.shape[0] < 1 or U.shape[1] < 1:
            raise ValueError(f"direction arrays must be nonempty, got shape {U.shape}")
        if c.ndim != 1 or c.size < 1:
            raise ValueError("c_values must be a nonempty 1-d array")
        if not (np.isfinite(U).all() and np.isfinite(V).all() and np.isfinite(c).all()):
            raise ValueError("grid entries must be finite")
        if c.size > 1 and not (np.diff(c) > 0).all():
            raise ValueError("c_values must be strictly increasing")
        if not self.c0 >= 2.0:
            raise ValueError(f"c0 must be >= 2, got {self.c0}")
        _unit_check(U, "U")
        _unit_check(V, "V")
        for arr in (U, V, c):
            arr.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "c_values", c)

    @property
    def Nu(self) -> int:
        return self.U.shape[0]

    @property
    def dim(self) -> int:
        return self.U.shape[1]

    @property
    def Nc(self) -> int:
        return self.c_values.size - 1


@dataclass(frozen=True)
class StatValue:
    """Statistic value with the attaining index.

    ``argmax`` is (pair index, threshold index). In full-product mode the
    pair index is ku * Nv + kv; with exact thresholds the threshold index
    is -1 (the attaining c is not a grid point).
    """

    t: float
    argmax: tuple[int, int]
    n: int


def make_grid(d: int, Nu: int, Nc: int, c0: float, rng: RngStream) -> DirectionGrid:
    """Draw Nu direction pairs uniformly on the sphere and build the
    threshold grid {-c0 + 2*c0*(j/Nc), j=0..Nc}.

    U comes from ``rng``'s stream; V from the purpose tag one above it.
    """
    if Nu < 1 or Nc < 1:
        raise InvalidSpec(f"need Nu >= 1 and Nc >= 1, got Nu={Nu}, Nc={Nc}")
    if not c0 >= 2.0:
        raise InvalidSpec(f"need c0 >= 2, got {c0}")
    U = sample_sphere(d, Nu, rng)
    V = sample_sphere(d, Nu, rng.with_purpose(rng.purpose_tag + 1))
    c = -c0 + 2.0 * c0 * (np.arange(Nc + 1) / Nc)
    return DirectionGrid(U=U, V=V, c0=c0, c_values=c)


def eval_f(u, v, c: float, x) -> float:
    """One function evaluation: (v - (v.u)u).x if u.x >= c else 0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    for vec, name in ((u, "u"), (v, "v")):
        if abs(np.linalg.norm(vec) - 1.0) > _NORM_TOL:
            raise ValueError(f"{name} must be a unit vector")
    if u @ x < c:
        return 0.0
    w = v - (v @ u) * u
    return float(w @ x)


# ---------------------------------------------------------------------------
# bucket assignment: m = #{j : c_j <= p} for every projection p

class _BucketTable:
    """Precomputed threshold lookup shared by all direction blocks."""

    __slots__ = ("c", "lower", "upper", "uniform", "c_lo", "inv_h", "n_thresholds")

    def __init__(self, c: np.ndarray):
        self.c = c
        self.n_thresholds = c.size
        self.lower = np.concatenate(([-np.inf], c))   # lower[m] = c_{m-1}
        self.upper = np.concatenate((c, [np.inf]))    # upper[m] = c_m
        if c.size >= 2:
            h = (c[-1] - c[0]) / (c.size - 1)
            scale = max(abs(c[0]), abs(c[-1]), 1.0)
            self.uniform = bool(np.abs(np.diff(c) - h).max() <= 1e-9 * scale)
            self.inv_h = (c.size - 1) / (c[-1] - c[0])
        else:
            self.uniform = False
            self.inv_h = 0.0
        self.c_lo = c[0]

    def assign(self, p: np.ndarray) -> np.ndarray:
        """Exact comparison count per element, m in [0, n_thresholds]."""
        if not self.uniform:
            return np.searchsorted(self.c, p, side="right")
        top = self.n_thresholds  # == Nc + 1 buckets above, m ranges 0..top
        with np.errstate(over="ignore", invalid="ignore"):
            z = (p - self.c_lo) * self.inv_h
            zf = np.floor(z)
            m = np.clip(zf + 1.0, 0.0, float(top)).astype(np.int64)
            np.subtract(z, zf, out=zf)  # zf becomes the fractional part
            near = zf <= 2e-3
            near |= zf >= 1.0 - 2e-3
            near |= ~np.isfinite(z)
        cand = np.nonzero(near)[0]
        if cand.size:
            # the arithmetic guess is provably within one bucket except at
            # boundary ties; settle those by exact comparison
            pc = p[cand]
            mc = m[cand]
            for _ in range(top + 1):
                bad = self.lower[mc] > pc
                if not bad.any():
                    break
                mc[bad] -= 1
            for _ in range(top + 1):
                bad = (self.upper[mc] <= pc) & (mc < top)
                if not bad.any():
                    break
                mc[bad] += 1
            m[cand] = mc
        return m


def _paired_max(X: np.ndarray, U: np.ndarray, V: np.ndarray, table: _BucketTable):
    """Max over paired rows (U_k, V_k) and thresholds of |sum_i f(X_i)|.

    Returns (max abs sum, pair index, threshold index); ties go to the
    smallest (pair, threshold).
    """
    n = X.shape[0]
    Nu = U.shape[0]
    nt = table.n_thresholds  # Nc + 1 threshold values
    W = V - np.sum(V * U, axis=1)[:, None] * U
    Xt = np.ascontiguousarray(X.T)
    best = -1.0
    best_k = 0
    best_j = 0
    Cbuf = np.empty((min(_BLOCK, Nu), nt))
    for k0 in range(0, Nu, _BLOCK):
        k1 = min(k0 + _BLOCK, Nu)
        kw = k1 - k0
        P = U[k0:k1] @ Xt
        Q = W[k0:k1] @ Xt
        m = table.assign(P.ravel())
        # reversed bucket index: suffix sums become a plain forward cumsum
        np.subtract(nt, m, out=m)
        m += (nt + 1) * np.repeat(np.arange(kw), n)
        A = np.bincount(m, weights=Q.ravel(), minlength=kw * (nt + 1))
        A = A.reshape(kw, nt + 1)
        # column s holds sum over {i : m_i >= nt - s}; drop the total column
        C = np.cumsum(A[:, :nt], axis=1, out=Cbuf[:kw])
        np.abs(C, out=C)
        rowmax = C.max(axis=1)
        krel = int(np.argmax(rowmax))
        v = float(rowmax[krel])
        if v > best:
            # smallest threshold index attaining the row max = largest s
            s = int(np.nonzero(C[krel] == v)[0].max())
            best = v
            best_k = k0 + krel
            best_j = (nt - 1) - s
    return best, best_k, best_j


def _check_inputs(X, grid: DirectionGrid) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"sample must be 2-d, got shape {X.shape}")
    if X.shape[0] < 1:
        raise EmptyInput("sample is empty")
    if X.shape[1] != grid.dim:
        raise DimensionError(
            f"sample dimension {X.shape[1]} does not match grid dimension {grid.dim}"
        )
    return X


def ks_statistic(X, grid: DirectionGrid, *, full_product: bool = False,
                 exact_thresholds: bool = False) -> StatValue:
    """The discretized KS statistic on sample ``X`` under ``grid``.

    ``full_product`` evaluates all Nu x Nu (u, v) combinations instead of
    the default paired reading. ``exact_thresholds`` replaces the grid
    thresholds with the exact supremum over c in [-c0, c0] (diagnostic).
    """
    X = _check_inputs(X, grid)
    n = X.shape[0]
    if exact_thresholds:
        return _exact_threshold_stat(X, grid, full_product)
    table = _BucketTable(grid.c_values)
    if not full_product:
        best, k, j = _paired_max(X, grid.U, grid.V, table)
        return StatValue(t=best / np.sqrt(n), argmax=(k, j), n=n)
    Nu = grid.Nu
    block = max(1, _PRODUCT_ENTRY_BUDGET // max(1, Nu * n))
    best = -1.0
    best_k = 0
    best_j = 0
    for b0 in range(0, Nu, block):
        b1 = min(b0 + block, Nu)
        Ub = np.repeat(grid.U[b0:b1], Nu, axis=0)
        Vb = np.tile(grid.V, (b1 - b0, 1))
        v, k, j = _paired_max(X, Ub, Vb, table)
        if v > best:
            best = v
            best_k = b0 * Nu + k
            best_j = j
    return StatValue(t=best / np.sqrt(n), argmax=(best_k, best_j), n=n)


def _exact_threshold_stat(X, grid, full_product):
    n = X.shape[0]
    c_lo, c_hi = -grid.c0, grid.c0
    best = -1.0
    best_k = 0
    Nu = grid.Nu
    pair_count = Nu * Nu if full_product else Nu
    for k in range(pair_count):
        u = grid.U[k // Nu if full_product else k]
        v = grid.V[k % Nu if full_product else k]
        w = v - (v @ u) * u
        p = X @ u
        q = X @ w
        order = np.argsort(p, kind="stable")
        ps = p[order]
        qs = q[order]
        suffix = np.cumsum(qs[::-1])[::-1]
        # candidate thresholds: the box ends and every projection inside it
        cands = [c_lo, c_hi]
        cands.extend(ps[(ps > c_lo) & (ps <= c_hi)])
        vals = np.abs([suffix[i] if (i := np.searchsorted(ps, c, side="left")) < n else 0.0
                       for c in cands])
        v_best = float(vals.max())
        if v_best > best:
            best = v_best
            best_k = k
    return StatValue(t=best / np.sqrt(n), argmax=(best_k, -1), n=n)


def ks_statistic_brute(X, grid: DirectionGrid, *, full_product: bool = False) -> StatValue:
    """Quadratic reference oracle: every (pair, threshold) sum is computed
    independently by masking, with no sorting and no shared prefix sums."""
    X = _check_inputs(X, grid)
    n = X.shape[0]
    Nu = grid.Nu
    c = grid.c_values
    best = -1.0
    best_k = 0
    best_j = 0
    pair_count = Nu * Nu if full_product else Nu
    for k in range(pair_count):
        ku, kv = divmod(k, Nu) if full_product else (k, k)
        u = grid.U[ku]
        v = grid.V[kv]
        w = v - (v @ u) * u
        p = X @ u
        q = X @ w
        for j in range(c.size):
            s = abs(float(np.sum(q[p >= c[j]])))
            if s > best:
                best = s
                best_k = k
                best_j = j
    return StatValue(t=best / np.sqrt(n), argmax=(best_k, best_j), n=n)
