"""Shared test helpers: reproducible random matrices and small configs."""

import numpy as np
import pytest

from symtest import BootstrapConfig


def random_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-ish orthogonal matrix via QR with sign fixing."""
    A = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))


def rand_spd(rng: np.random.Generator, d: int, cond: float = 50.0) -> np.ndarray:
    """Random SPD matrix with controlled condition number."""
    Q = random_orthogonal(rng, d)
    lam = np.geomspace(1.0, cond, d)
    return (Q * lam) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def fast_cfg(**kw) -> BootstrapConfig:
    """Coarse but honest settings for distribution-level checks."""
    base = dict(B=100, Nu=200, Nc=100, c0=10.0, alpha=0.05, master_seed=0)
    base.update(kw)
    return BootstrapConfig(**base)


def tiny_cfg(**kw) -> BootstrapConfig:
    """Minimal settings for plumbing checks where the law is irrelevant."""
    base = dict(B=12, Nu=30, Nc=20, c0=4.0, alpha=0.05, master_seed=0)
    base.update(kw)
    return BootstrapConfig(**base)
