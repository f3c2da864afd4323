"""Log-optimal norm weights built from the spectrum of a symmetric W.

For ``b > 0`` the scalar map ``theta_b(z) = 2b (1 + sqrt(1 - z/b))`` sends
``(-inf, b]`` onto ``[2b, inf)`` and satisfies
``z = theta_b(z) - theta_b(z)^2 / (4b)``. Applying it to the eigenvalues of W
gives the firing-rate weight ``Q_F(b)``; dividing by the eigenvalues gives the
Hopfield weight ``Q_H(b) = Q_F(b) W^-1``.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, SingularW
from .linalg_core import EigenDecomposition, NormWeight, WeightKind, sym_eig

RADICAND_CLAMP = 1e-14
DEFAULT_EPS = 1e-3


def _radicand(b, z):
    if not np.all(np.asarray(b) > 0):
        raise DomainError(f"theta_b requires b > 0, got b={b}")
    r = 1.0 - np.asarray(z, dtype=float) / b
    if np.any(r < -RADICAND_CLAMP):
        raise DomainError(f"theta_b is defined for z <= b only (b={b}, max z={np.max(z)})")
    return np.maximum(r, 0.0)


def theta(b: float, z):
    """``theta_b(z) = 2b(1 + sqrt(1 - z/b))``; vectorized over ``z``."""
    out = 2.0 * b * (1.0 + np.sqrt(_radicand(b, z)))
    return float(out) if np.ndim(out) == 0 else out


def g_values(b: float, z):
    """``g_b(z) = theta_b(z) / z`` for nonzero ``z``."""
    z = np.asarray(z, dtype=float)
    if np.any(z == 0):
        raise DomainError("g_b is undefined at z = 0")
    return np.asarray(theta(b, z)) / z


def _eig(W_or_eig) -> EigenDecomposition:
    return W_or_eig if isinstance(W_or_eig, EigenDecomposition) else sym_eig(W_or_eig)


def build_QF(eig, b: float) -> NormWeight:
    """Firing-rate weight ``Q_F(b) = U theta_b(Lambda) U^T`` (requires alpha(W) <= b)."""
    eig = _eig(eig)
    if b <= 0:
        raise DomainError(f"b must be positive, got {b}")
    if eig.alpha > b * (1.0 + RADICAND_CLAMP):
        raise DomainError(f"b={b} is below the spectral abscissa {eig.alpha}")
    Q = eig.apply(lambda lam: theta(b, lam))
    return NormWeight(Q, WeightKind.QF, float(b))


def build_QH(eig, b: float, rank_tol: float | None = None) -> NormWeight:
    """Hopfield weight ``Q_H(b) = U g_b(Lambda) U^T``.

    The result is symmetric and invertible but indefinite whenever W has
    negative eigenvalues; only invertibility matters for the norm.
    """
    eig = _eig(eig)
    tol = eig.rank_tol if rank_tol is None else rank_tol
    if np.any(np.abs(eig.lam) <= tol):
        raise SingularW("W is singular; Q_H needs an invertible W (use the kernel-split certificate)")
    if b <= 0:
        raise DomainError(f"b must be positive, got {b}")
    if eig.alpha > b * (1.0 + RADICAND_CLAMP):
        raise DomainError(f"b={b} is below the spectral abscissa {eig.alpha}")
    Q = eig.apply(lambda lam: g_values(b, lam))
    return NormWeight(Q, WeightKind.QH, float(b))


def neg_sqrt_weight(eig) -> NormWeight:
    """``(-W)^{1/2}`` for negative definite W."""
    eig = _eig(eig)
    if eig.alpha >= 0:
        raise DomainError(f"(-W)^(1/2) needs alpha(W) < 0, got {eig.alpha}")
    return NormWeight(eig.apply(lambda lam: np.sqrt(-lam)), WeightKind.NEG_W_SQRT)


def neg_inv_sqrt_weight(eig) -> NormWeight:
    """``(-W)^{-1/2}`` for negative definite W; the right weight for ``W[d]``."""
    eig = _eig(eig)
    if eig.alpha >= 0:
        raise DomainError(f"(-W)^(-1/2) needs alpha(W) < 0, got {eig.alpha}")
    return NormWeight(eig.apply(lambda lam: 1.0 / np.sqrt(-lam)), WeightKind.NEG_W_INV_SQRT)


def splitting_residual(W, b: float) -> float:
    """Max-abs residual of ``W = Q_F(b) - Q_F(b)^2 / (4b)``."""
    eig = sym_eig(W)
    if eig.alpha > b * (1.0 + RADICAND_CLAMP):
        raise DomainError(f"splitting needs alpha(W) <= b, got alpha={eig.alpha}, b={b}")
    Q = build_QF(eig, b).Q
    W = np.asarray(W, dtype=float)
    return float(np.max(np.abs(W - (Q - Q @ Q / (4.0 * b)))))


verify_splitting = splitting_residual


def default_b(eig, eps: float = DEFAULT_EPS) -> float | None:
    """Bound used for the QF/QH weights, or None when alpha(W) < 0.

    ``alpha(W)`` when positive, ``eps`` when it is zero within the rank
    tolerance.
    """
    eig = _eig(eig)
    if eig.alpha > eig.rank_tol:
        return eig.alpha
    if eig.alpha >= -eig.rank_tol:
        return eps
    return None
