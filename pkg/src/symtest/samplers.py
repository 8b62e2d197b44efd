"""Deterministic, seedable random generation.

Every draw in the package flows through an :class:`RngStream`: a
counter-based Philox generator keyed by ``(master_seed, replicate_index,
bootstrap_index, purpose_tag)``. Identical keys give identical output on
any machine and under any thread schedule, and distinct keys give
statistically independent streams, so Monte Carlo runs are reproducible
under any parallel layout.

Purpose tags are small integers from the registry below. Grid tags come in
(U, V) pairs: the V stream is always ``U tag + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import special as sp_special

from .errors import DomainError, EmptyInput, InvalidDimension, InvalidSpec

# purpose-tag registry
PURPOSE_DATA = 0          # data draw for a Monte Carlo replicate
PURPOSE_GRID_U = 1        # direction grid for the observed statistic
PURPOSE_GRID_V = 2
PURPOSE_BOOT_SPHERE = 3   # sphere vectors W of a bootstrap replicate
PURPOSE_BOOT_NORMS = 4    # norm resampling of a bootstrap replicate
PURPOSE_BOOT_GRID_U = 5   # fresh directions of a bootstrap replicate
PURPOSE_BOOT_GRID_V = 6
PURPOSE_RETRY_SPHERE = 7  # one-shot redraw after a singular bootstrap sample
PURPOSE_RETRY_NORMS = 8
PURPOSE_ROTATION = 9      # random orthogonal maps in diagnostics/tests


@dataclass(frozen=True)
class RngStream:
    """Key of one deterministic random stream."""

    master_seed: int
    replicate_index: int = 0
    bootstrap_index: int = 0
    purpose_tag: int = 0

    def __post_init__(self):
        for name in ("master_seed", "replicate_index", "bootstrap_index", "purpose_tag"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise TypeError(f"{name} must be an integer, got {v!r}")
            if v < 0:
                raise ValueError(f"{name} must be nonnegative, got {v}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = (self.master_seed, self.replicate_index,
               self.bootstrap_index, self.purpose_tag)
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))

    def with_purpose(self, purpose_tag: int) -> "RngStream":
        return replace(self, purpose_tag=purpose_tag)

    def for_bootstrap(self, bootstrap_index: int) -> "RngStream":
        return replace(self, bootstrap_index=bootstrap_index)

    def for_replicate(self, replicate_index: int) -> "RngStream":
        return replace(self, replicate_index=replicate_index)


def sample_sphere(d: int, n: int, rng: RngStream) -> np.ndarray:
    """n independent draws from the uniform distribution on the unit sphere
    in R^d, as an (n, d) array of unit rows."""
    if d < 2:
        raise InvalidDimension(f"sphere sampling needs d >= 2, got {d}")
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    g = rng.generator()
    Z = g.standard_normal((n, d))
    norms = np.linalg.norm(Z, axis=1)
    while (norms == 0.0).any():  # pragma: no cover - probability zero
        bad = norms == 0.0
        Z[bad] = g.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(Z, axis=1)
    return Z / norms[:, None]


def resample_with_replacement(values, n: int, rng: RngStream) -> np.ndarray:
    """n i.i.d. uniform picks from ``values``; outputs are exact elements
    of the input (bit-for-bit), never recomputed."""
    values = np.asarray(values)
    if values.ndim != 1 or values.size == 0:
        raise EmptyInput("value pool must be a nonempty 1-d sequence")
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    idx = rng.generator().integers(0, values.size, size=n)
    return values[idx]


def normal_quantile(p):
    """Standard normal quantile; DomainError outside (0, 1)."""
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"quantile argument must lie in (0, 1), got {p!r}")
    out = sp_special.ndtri(arr)
    return float(out) if np.isscalar(p) or arr.ndim == 0 else out


def student_t_cdf(x, df):
    """CDF of Student's t with ``df`` degrees of freedom."""
    if not df > 0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    arr = np.asarray(x, dtype=np.float64)
    out = sp_special.stdtr(df, arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# distribution specifications

# family -> (ordered param names with defaults, fixed dim or None, default dim)
_FAMILIES: dict[str, tuple[tuple[tuple[str, float | None], ...], int | None, int | None]] = {
    "gauss": ((("rho", 0.0),), None, None),
    "cauchy": ((), None, None),
    "mvt": ((("df", None),), None, None),
    "kotz": ((("N", None), ("r", None), ("s", None)), None, None),
    "pvii": ((("N", None), ("m", None)), None, None),
    "gaussmix": ((("mu", None),), None, None),
    "ncg": ((("mu", None),), None, None),
    "metat": ((("df", None),), None, None),
    "cube": ((), None, None),
    "unitcube": ((), None, None),
    "expthird": ((), 3, 3),
    "triprod": ((), 3, 3),
    "mix2": ((), 2, 2),
    "mix3": ((), 3, 3),
    "gammanorm": ((), None, None),
    "burr": ((("beta", 0.5),), None, None),
    "sectorA": ((("polar", 0.0), ("boxes", 0.0)), 2, 2),
}


@dataclass(frozen=True)
class DistributionSpec:
    """Tagged description of a sampling law, with a canonical text form
    like ``gauss:rho=0.4,d=3`` or ``mix2`` (see :meth:`parse`)."""

    family: str
    dim: int
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.family not in _FAMILIES:
            known = ", ".join(sorted(_FAMILIES))
            raise InvalidSpec(f"unknown family {self.family!r} (known: {known})")
        declared, fixed_dim, _ = _FAMILIES[self.family]
        names = [k for k, _ in declared]
        seen = set()
        for k, v in self.params:
            if k not in names:
                raise InvalidSpec(f"{self.family}: unknown parameter {k!r}")
            if k in seen:
                raise InvalidSpec(f"{self.family}: duplicate parameter {k!r}")
            seen.add(k)
            if not np.isfinite(v):
                raise InvalidSpec(f"{self.family}: parameter {k}={v} not finite")
        for k, default in declared:
            if default is None and k not in seen:
                raise InvalidSpec(f"{self.family}: missing required parameter {k!r}")
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InvalidSpec(f"{self.family}: dimension must be a positive integer, got {self.dim}")
        if fixed_dim is not None and self.dim != fixed_dim:
            raise InvalidSpec(f"{self.family}: d must be {fixed_dim}, got {self.dim}")
        self._validate_params()
        # normalize to the declared order with defaults filled in, so specs
        # that agree on every parameter value compare equal and round-trip
        # through the canonical text form
        given = dict(self.params)
        object.__setattr__(
            self,
            "params",
            tuple((k, float(given.get(k, d))) for k, d in declared),
        )

    def _validate_params(self):
        f = self.family
        if f == "gauss":
            rho = self.param("rho")
            lo = -1.0 / (self.dim - 1) if self.dim > 1 else -1.0
            if not (lo < rho < 1.0):
                raise InvalidSpec(f"gauss: rho={rho} outside ({lo:.4g}, 1) for d={self.dim}")
        elif f in ("mvt", "metat"):
            if not self.param("df") > 0:
                raise InvalidSpec(f"{f}: df must be positive")
        elif f == "kotz":
            N, r, s = self.param("N"), self.param("r"), self.param("s")
            if r <= 0 or s <= 0 or 2 * N - 2 + self.dim <= 0:
                raise InvalidSpec(f"kotz: need r>0, s>0 and 2N-2+d>0 (N={N}, r={r}, s={s}, d={self.dim})")
        elif f == "pvii":
            N, m = self.param("N"), self.param("m")
            if m <= 0 or 2 * N - self.dim <= 0:
                raise InvalidSpec(f"pvii: need m>0 and 2N-d>0 (N={N}, m={m}, d={self.dim})")
        elif f == "burr":
            if self.param("beta") <= 0:
                raise InvalidSpec("burr: beta must be positive")
        elif f == "sectorA":
            if self.param("polar") not in (0.0, 1.0):
                raise InvalidSpec("sectorA: polar must be 0 or 1")
            if self.param("boxes") not in (0.0, 1.0):
                raise InvalidSpec("sectorA: boxes must be 0 or 1")
            if self.param("polar") == 1.0 and self.param("boxes") == 1.0:
                raise InvalidSpec("sectorA: polar and boxes are mutually exclusive readings")

    def param(self, name: str, default: float | None = None) -> float:
        for k, v in self.params:
            if k == name:
                return v
        declared, _, _ = _FAMILIES[self.family]
        for k, d in declared:
            if k == name and d is not None:
                return d
        if default is not None:
            return default
        raise KeyError(name)

    @classmethod
    def parse(cls, text: str, dim: int | None = None) -> "DistributionSpec":
        """Parse the canonical text form ``family:key=value,...``.

        ``d`` may appear as a key; an explicit ``dim`` argument overrides it.
        """
        text = text.strip()
        if not text:
            raise InvalidSpec("empty distribution spec")
        family, _, rest = text.partition(":")
        family = family.strip()
        if family not in _FAMILIES:
            known = ", ".join(sorted(_FAMILIES))
            raise InvalidSpec(f"unknown family {family!r} (known: {known})")
        params: list[tuple[str, float]] = []
        d_from_text: int | None = None
        if rest.strip():
            for item in rest.split(","):
                key, eq, val = item.partition("=")
                key = key.strip()
                val = val.strip()
                if not eq or not key or not val:
                    raise InvalidSpec(f"malformed parameter {item!r} in {text!r}")
                try:
                    fval = float(val)
                except ValueError:
                    raise InvalidSpec(f"non-numeric value for {key!r} in {text!r}") from None
                if key == "d":
                    if fval != int(fval):
                        raise InvalidSpec(f"d must be an integer, got {val!r}")
                    d_from_text = int(fval)
                else:
                    params.append((key, fval))
        _, fixed_dim, default_dim = _FAMILIES[family]
        if dim is None:
            dim = d_from_text if d_from_text is not None else default_dim
        if dim is None:
            raise InvalidSpec(f"{family}: dimension required (add d=... to the spec)")
        return cls(family=family, dim=dim, params=tuple(params))

    def format(self) -> str:
        """Canonical text form; inverse of :meth:`parse`."""
        declared, fixed_dim, _ = _FAMILIES[self.family]
        parts = [f"{k}={self.param(k):g}" for k, _ in declared]
        if fixed_dim is None:
            parts.append(f"d={self.dim}")
        return self.family if not parts else f"{self.family}:" + ",".join(parts)


def _unit_rows(Z: np.ndarray) -> np.ndarray:
    return Z / np.linalg.norm(Z, axis=1)[:, None]


def _equicorr_cholesky(d: int, rho: float) -> np.ndarray:
    S = np.full((d, d), rho)
    np.fill_diagonal(S, 1.0)
    return np.linalg.cholesky(S)


def _mvt(g: np.random.Generator, n: int, d: int, df: float) -> np.ndarray:
    Z = g.standard_normal((n, d))
    chi2 = g.chisquare(df, n)
    return Z / np.sqrt(chi2 / df)[:, None]


# vertices of the origin-centered equilateral triangle with side sqrt(12)
_TRI_HALF_WIDTH = np.sqrt(3.0)
_TRI_SIDE = np.sqrt(12.0)


def _triangle_xy(g: np.random.Generator, n: int) -> np.ndarray:
    """Uniform draws on the triangle with vertices (0,2), (-s3,-1), (s3,-1)
    by rejection from the bounding box (acceptance rate ~1/2)."""
    out = np.empty((n, 2))
    have = 0
    while have < n:
        want = n - have
        batch = max(want * 2 + 8, 16)
        x = g.uniform(-_TRI_HALF_WIDTH, _TRI_HALF_WIDTH, batch)
        y = g.uniform(-1.0, 2.0, batch)
        keep = (y <= 2.0 - _TRI_HALF_WIDTH * x) & (y <= 2.0 + _TRI_HALF_WIDTH * x)
        take = min(int(keep.sum()), want)
        idx = np.nonzero(keep)[0][:take]
        out[have:have + take, 0] = x[idx]
        out[have:have + take, 1] = y[idx]
        have += take
    return out

_MIX2_MEAN = np.array([1.0, 2.0])
_MIX2_COV = np.array([[5.0, -4.0], [-4.0, 5.0]])
_MIX3_MEAN = np.array([1.0, 2.0, 3.0])
_MIX3_COV = np.array([[5.0, -4.0, 1.0], [-4.0, 6.0, -4.0], [1.0, -4.0, 5.0]])

# The sector set is written as four interval products.  Read in (radius,
# angle) coordinates they are a radius band times an angle quadrant; read
# literally as x-range times y-range they are axis-aligned boxes.  The
# sampler supports three laws on these products:
#   default      uniform in planar area over the polar sectors,
#   polar=1      uniform in the (r, angle) rectangle measure,
#   boxes=1      uniform in planar area over the literal Cartesian boxes.
_SECTORS = (
    (0.0, 1.0, 0.0, 0.5 * np.pi),
    (0.0, 1.0, np.pi, 1.5 * np.pi),
    (1.0, np.sqrt(2.0), 0.5 * np.pi, np.pi),
    (1.0, np.sqrt(2.0), 1.5 * np.pi, 2.0 * np.pi),
)


def _sector_sample(g: np.random.Generator, n: int, polar: bool, boxes: bool) -> np.ndarray:
    if boxes:
        # uniform on the union of Cartesian boxes x-range times y-range
        weights = np.array([(x1 - x0) * (y1 - y0) for x0, x1, y0, y1 in _SECTORS])
    elif polar:
        # uniform in the (r, angle) rectangle measure
        weights = np.array([(r1 - r0) * (a1 - a0) for r0, r1, a0, a1 in _SECTORS])
    else:
        # uniform in planar area: weight = integral of r dr dangle
        weights = np.array([0.5 * (r1**2 - r0**2) * (a1 - a0) for r0, r1, a0, a1 in _SECTORS])
    cum = np.cumsum(weights / weights.sum())
    piece = np.searchsorted(cum, g.random(n), side="right")
    piece = np.minimum(piece, len(_SECTORS) - 1)
    ur = g.random(n)
    ua = g.random(n)
    r0 = np.array([_SECTORS[k][0] for k in piece])
    r1 = np.array([_SECTORS[k][1] for k in piece])
    a0 = np.array([_SECTORS[k][2] for k in piece])
    a1 = np.array([_SECTORS[k][3] for k in piece])
    if boxes:
        return np.column_stack([r0 + ur * (r1 - r0), a0 + ua * (a1 - a0)])
    if polar:
        r = r0 + ur * (r1 - r0)
    else:
        r = np.sqrt(r0**2 + ur * (r1**2 - r0**2))
    ang = a0 + ua * (a1 - a0)
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def sample_distribution(spec: DistributionSpec, n: int, rng: RngStream) -> np.ndarray:
    """n i.i.d. rows from the law described by ``spec``.

    Pure given the stream: the draw order within each family is fixed, so
    identical (spec, n, stream key) give bit-identical samples.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    g = rng.generator()
    d = spec.dim
    f = spec.family

    if f == "gauss":
        Z = g.standard_normal((n, d))
        rho = spec.param("rho")
        if rho == 0.0:
            return Z
        return Z @ _equicorr_cholesky(d, rho).T
    if f == "cauchy":
        return _mvt(g, n, d, 1.0)
    if f == "mvt":
        return _mvt(g, n, d, spec.param("df"))
    if f == "kotz":
        N, r, s = spec.param("N"), spec.param("r"), spec.param("s")
        W = _unit_rows(g.standard_normal((n, d)))
        G = g.gamma((2.0 * N - 2.0 + d) / (2.0 * s), 1.0, n)
        R = (G / r) ** (1.0 / (2.0 * s))
        return R[:, None] * W
    if f == "pvii":
        N, m = spec.param("N"), spec.param("m")
        Z = g.standard_normal((n, d))
        chi2 = g.chisquare(2.0 * N - d, n)
        return np.sqrt(m) * Z / np.sqrt(chi2)[:, None]
    if f == "gaussmix":
        mu = spec.param("mu")
        signs = 2.0 * g.integers(0, 2, n) - 1.0
        X = g.standard_normal((n, d))
        X[:, 0] += signs * mu
        return X
    if f == "ncg":
        X = g.standard_normal((n, d))
        X[:, 0] += spec.param("mu")
        return X
    if f == "metat":
        df = spec.param("df")
        T = _mvt(g, n, d, df)
        U = sp_special.stdtr(df, T)
        # tail clipping keeps the quantile finite without moving mass visibly
        np.clip(U, 1e-300, 1.0 - 1e-16, out=U)
        return sp_special.ndtri(U)
    if f == "cube":
        return g.uniform(-1.0, 1.0, (n, d))
    if f == "unitcube":
        return g.uniform(0.0, 1.0, (n, d))
    if f == "expthird":
        Z = g.standard_normal((n, 2))
        E = g.standard_exponential(n)
        return np.column_stack([Z, E])
    if f == "triprod":
        XY = _triangle_xy(g, n)
        X3 = g.uniform(-_TRI_SIDE, _TRI_SIDE, n)
        return np.column_stack([XY, X3])
    if f in ("mix2", "mix3"):
        mean = _MIX2_MEAN if f == "mix2" else _MIX3_MEAN
        cov = _MIX2_COV if f == "mix2" else _MIX3_COV
        comp = g.integers(0, 2, n)
        Z = g.standard_normal((n, d))
        L = np.linalg.cholesky(cov)
        X = np.where(comp[:, None] == 1, mean + Z @ L.T, Z)
        return X
    if f == "gammanorm":
        first = g.gamma(2.0, 3.0, n)
        if d == 1:
            return first[:, None]
        rest = g.standard_normal((n, d - 1))
        return np.column_stack([first, rest])
    if f == "burr":
        beta = spec.param("beta")
        Xg = g.gamma(2.0, 3.0, (n, d))
        Y = g.gamma(1.0, beta, n)
        return (1.0 + Xg / Y[:, None]) ** (-beta)
    if f == "sectorA":
        return _sector_sample(
            g, n, polar=bool(spec.param("polar")), boxes=bool(spec.param("boxes"))
        )
    raise InvalidSpec(f"unhandled family {f!r}")  # pragma: no cover
