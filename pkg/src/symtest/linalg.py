"""Dense symmetric linear algebra: eigendecomposition, inverse square root,
empirical moments, and sample standardization (whitening).

All routines operate on plain float64 ndarrays. Matrices handed to
:func:`sym_eigen` must be symmetric; a defensive symmetrization is applied
after a cheap asymmetry check so downstream algebra sees exact symmetry.
"""

from __future__ import annotations

import numpy as np

from .errors import EigenFailure, SingularCovariance

_MAX_SWEEPS = 100


def _as_sample(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"sample matrix must be 2-d, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"sample matrix must be nonempty, got shape {X.shape}")
    return X


def _as_symmetric(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise ValueError("matrix entries must be finite")
    scale = np.abs(A).max()
    asym = np.abs(A - A.T).max()
    if asym > 1e-8 * (1.0 + scale):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    return (A + A.T) / 2.0


def sym_eigen(A, tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, Q)`` with eigenvalues ``w`` in descending order and
    orthonormal eigenvectors in the columns of ``Q``, so that
    ``A == Q @ diag(w) @ Q.T`` up to rounding.

    ``tol`` is the absolute Frobenius-norm threshold on the off-diagonal
    mass at which sweeps stop; default ``1e-12 * ||A||_F``. Raises
    :class:`EigenFailure` if the sweep cap is reached first.
    """
    M = _as_symmetric(A)
    d = M.shape[0]
    if tol is None:
        tol = 1e-12 * np.linalg.norm(M, "fro")
    Q = np.eye(d)
    if d == 1:
        return M.diagonal().copy(), Q

    def offdiag(M):
        return np.sqrt(np.sum(np.tril(M, -1) ** 2) * 2.0)

    converged = offdiag(M) <= tol
    for _ in range(_MAX_SWEEPS):
        if converged:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = M[p, q]
                if apq == 0.0:
                    continue
                app = M[p, p]
                aqq = M[q, q]
                # stable rotation choosing the smaller root of t^2 + 2*tau*t - 1
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                colp = c * M[:, p] - s * M[:, q]
                colq = s * M[:, p] + c * M[:, q]
                M[:, p] = colp
                M[:, q] = colq
                M[p, :] = M[:, p]
                M[q, :] = M[:, q]
                M[p, p] = c * c * app - 2.0 * s * c * apq + s * s * aqq
                M[q, q] = s * s * app + 2.0 * s * c * apq + c * c * aqq
                M[p, q] = M[q, p] = 0.0
                qp = c * Q[:, p] - s * Q[:, q]
                qq = s * Q[:, p] + c * Q[:, q]
                Q[:, p] = qp
                Q[:, q] = qq
        converged = offdiag(M) <= tol
    else:
        if not converged:
            raise EigenFailure(
                f"off-diagonal mass {offdiag(M):.3e} above {tol:.3e} "
                f"after {_MAX_SWEEPS} sweeps"
            )
    w = M.diagonal().copy()
    order = np.argsort(-w, kind="stable")
    return w[order], Q[:, order]


def inv_sqrt(A, eps: float | None = None) -> np.ndarray:
    """Inverse matrix square root of SPD ``A`` via eigendecomposition.

    ``eps`` is the positive-definiteness floor: any eigenvalue <= eps raises
    :class:`SingularCovariance`. Default is relative, ``1e-10 * max(w)``.
    """
    w, Q = sym_eigen(A)
    if eps is None:
        eps = 1e-10 * max(w[0], 0.0)
    if w[-1] <= eps:
        raise SingularCovariance(
            f"eigenvalue {w[-1]:.6e} at or below floor {eps:.6e}"
        )
    B = (Q / np.sqrt(w)) @ Q.T
    return (B + B.T) / 2.0


def empirical_mean(X) -> np.ndarray:
    """Coordinate-wise mean of the sample rows."""
    return _as_sample(X).mean(axis=0)


def empirical_cov(X) -> np.ndarray:
    """Empirical covariance with the 1/n normalizer (not 1/(n-1)).

    The bootstrap re-standardization step depends on this exact choice.
    """
    X = _as_sample(X)
    Xc = X - X.mean(axis=0)
    C = (Xc.T @ Xc) / X.shape[0]
    return (C + C.T) / 2.0


def standardize(X, eps: float | None = None):
    """Whiten the sample: X_hat_i = C^{-1/2} (X_i - mean).

    Returns ``(X_hat, mean, inv_sqrt_cov)``. After the transform the
    empirical mean is ~0 and the empirical 1/n-covariance is ~I. Raises
    :class:`SingularCovariance` when the covariance is not positive
    definite above the floor.
    """
    X = _as_sample(X)
    if not np.isfinite(X).all():
        raise ValueError("sample contains non-finite entries")
    mean = X.mean(axis=0)
    B = inv_sqrt(empirical_cov(X), eps)
    return (X - mean) @ B, mean, B
