"""Dense symmetric linear algebra: eigendecomposition, weighted norms and
logarithmic norms.

Conventions used throughout the package:

* A norm weight ``Q`` is an invertible symmetric matrix and defines
  ``||x||_Q = ||Q x||_2``. Its Gram matrix ``P = Q^T Q`` (``= Q @ Q``) is
  what enters every quadratic form.
* The log-norm induced by ``Q`` is ``mu_Q(A) = mu_2(Q A Q^-1)``, evaluated as
  half the largest generalized eigenvalue of the pencil ``(P A + A^T P, P)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    NonConvergence,
    NotSymmetric,
    SingularWeight,
    UnsupportedDimension,
)

DEFAULT_EIG_TOL = 1e-12
MAX_SWEEPS = 100


def rank_tolerance(eigenvalues) -> float:
    """Scale-relative threshold below which an eigenvalue counts as zero."""
    lam = np.asarray(eigenvalues, dtype=float)
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    return 1e-10 * max(1.0, scale)


def symmetric(M, atol: float | None = None) -> np.ndarray:
    """Validate a square finite matrix and return its symmetric part.

    If ``atol`` is given, entries may differ from their transpose by at most
    ``atol`` (times ``max(1, max|M|)``); otherwise any asymmetry is silently
    averaged away.
    """
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if atol is not None:
        scale = max(1.0, float(np.max(np.abs(M))))
        gap = float(np.max(np.abs(M - M.T)))
        if gap > atol * scale:
            raise NotSymmetric(f"matrix is not symmetric (max |M - M^T| = {gap:.3e})")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class EigenDecomposition:
    """``W = U diag(lam) U^T`` with ``lam`` sorted in non-increasing order."""

    U: np.ndarray
    lam: np.ndarray
    rank_tol: float

    @property
    def alpha(self) -> float:
        """Spectral abscissa (largest eigenvalue)."""
        return float(self.lam[0])

    @property
    def n(self) -> int:
        return self.lam.shape[0]

    def matrix(self) -> np.ndarray:
        return (self.U * self.lam) @ self.U.T

    def apply(self, fn) -> np.ndarray:
        """Spectral function ``U diag(fn(lam)) U^T``."""
        vals = np.asarray(fn(self.lam), dtype=float)
        M = (self.U * vals) @ self.U.T
        return 0.5 * (M + M.T)

    def kernel_mask(self) -> np.ndarray:
        return np.abs(self.lam) <= self.rank_tol

    @property
    def is_singular(self) -> bool:
        return bool(np.any(self.kernel_mask()))


def _fix_signs(U: np.ndarray) -> np.ndarray:
    U = U.copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            U[:, j] = -col
    return U


def sym_eig(W, tol: float = DEFAULT_EIG_TOL, max_sweeps: int = MAX_SWEEPS) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops to
    ``tol * ||W||_F``. Eigenvectors are normalized so that the first
    nonzero component of each is positive, which makes the output
    reproducible.
    """
    a = symmetric(W)
    n = a.shape[0]
    V = np.eye(n)
    target = tol * float(np.linalg.norm(a))

    offdiag = ~np.eye(n, dtype=bool)

    def off(m):
        return float(np.linalg.norm(m[offdiag]))

    sweeps = 0
    while off(a) > target:
        if sweeps >= max_sweeps:
            raise NonConvergence(
                f"Jacobi iteration did not converge in {max_sweeps} sweeps "
                f"(off-diagonal mass {off(a):.3e} > {target:.3e})"
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :]
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        sweeps += 1

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    U = _fix_signs(V[:, order])
    return EigenDecomposition(U=U, lam=lam, rank_tol=rank_tolerance(lam))


class WeightKind(enum.Enum):
    QF = "QF"
    QH = "QH"
    NEG_W_SQRT = "NegWSqrt"
    NEG_W_INV_SQRT = "NegWInvSqrt"
    IDENTITY = "Identity"
    COMPOSITE = "Composite"
    CUSTOM = "Custom"


@dataclass(frozen=True, eq=False)
class NormWeight:
    """Invertible symmetric weight ``Q`` of the norm ``||Q x||_2``."""

    Q: np.ndarray
    kind: WeightKind = WeightKind.CUSTOM
    b: float | None = None
    P: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        Q = symmetric(self.Q, atol=1e-9)
        svals = np.linalg.svd(Q, compute_uv=False)
        if svals[-1] <= rank_tolerance(svals):
            raise SingularWeight(f"weight matrix is singular (smallest singular value {svals[-1]:.3e})")
        object.__setattr__(self, "Q", Q)
        P = Q.T @ Q
        object.__setattr__(self, "P", 0.5 * (P + P.T))

    @classmethod
    def identity(cls, n: int) -> NormWeight:
        return cls(np.eye(n), WeightKind.IDENTITY)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def label(self) -> str:
        if self.b is not None:
            return f"{self.kind.value}({self.b!r})"
        return self.kind.value

    def sigma_min(self) -> float:
        return float(np.linalg.svd(self.Q, compute_uv=False)[-1])


def _as_weight(Q) -> NormWeight:
    return Q if isinstance(Q, NormWeight) else NormWeight(np.asarray(Q, dtype=float))


def _square(A, n: int | None = None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if n is not None and A.shape[0] != n:
        raise DimensionMismatch(f"matrix is {A.shape[0]}x{A.shape[0]}, weight is {n}x{n}")
    return A


def weighted_vec_norm(x, Q) -> float:
    Q = _as_weight(Q)
    x = np.asarray(x, dtype=float)
    if x.shape != (Q.n,):
        raise DimensionMismatch(f"vector of length {x.shape} vs weight of size {Q.n}")
    return float(np.linalg.norm(Q.Q @ x))


def _whitener(P: np.ndarray) -> np.ndarray:
    """Inverse Cholesky factor ``L^-1`` with ``P = L L^T``."""
    try:
        L = np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:
        raise SingularWeight("weight Gram matrix is not positive definite") from exc
    return np.linalg.solve(L, np.eye(P.shape[0]))


def weighted_matrix_norm(A, Q) -> float:
    """Operator norm of ``A`` in ``||.||_Q``: ``sqrt(lmax(A^T P A, P))``."""
    Q = _as_weight(Q)
    A = _square(A, Q.n)
    Li = _whitener(Q.P)
    M = Li @ (A.T @ Q.P @ A) @ Li.T
    return math.sqrt(max(0.0, float(np.linalg.eigvalsh(0.5 * (M + M.T))[-1])))


def euclidean_lognorm(A) -> float:
    A = _square(A)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[-1])


def weighted_lognorm(A, Q) -> float:
    """``mu_Q(A) = 1/2 lmax(P A + A^T P, P)``."""
    Q = _as_weight(Q)
    A = _square(A, Q.n)
    return float(lognorm_batch(A[None], Q)[0])


def lognorm_batch(As, Q) -> np.ndarray:
    """Weighted log-norms of a stack of matrices of shape ``(k, n, n)``."""
    Q = _as_weight(Q)
    As = np.asarray(As, dtype=float)
    Li = _whitener(Q.P)
    PA = np.matmul(Q.P, As)
    M = PA + np.swapaxes(PA, -1, -2)
    M = np.matmul(np.matmul(Li, M), Li.T)
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    return 0.5 * np.linalg.eigvalsh(M)[..., -1]


def pseudo_inverse(W, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose inverse through the eigendecomposition.

    Eigenvalues with ``|lam| <= tol * max|lam|`` are treated as zero.
    """
    eig = W if isinstance(W, EigenDecomposition) else sym_eig(W)
    scale = float(np.max(np.abs(eig.lam)))
    if scale == 0.0:
        return np.zeros((eig.n, eig.n))
    keep = np.abs(eig.lam) > tol * scale
    inv = np.zeros_like(eig.lam)
    inv[keep] = 1.0 / eig.lam[keep]
    return eig.apply(lambda _: inv)


def spectral_abscissa_2x2(G) -> float:
    G = np.asarray(G, dtype=float)
    if G.shape == (1, 1):
        return float(G[0, 0])
    if G.shape != (2, 2):
        raise UnsupportedDimension(f"closed-form abscissa only for 1x1 and 2x2, got {G.shape}")
    a, b, c, d = G[0, 0], G[0, 1], G[1, 0], G[1, 1]
    if b == 0.0 or c == 0.0:
        return float(max(a, d))
    half_diff = 0.5 * (a - d)
    disc = half_diff * half_diff + b * c
    mid = 0.5 * (a + d)
    if disc >= 0:
        return float(mid + math.sqrt(disc))
    return float(mid)


def is_hurwitz(G, margin: float = 0.0) -> tuple[bool, float]:
    """Return ``(alpha(G) < -margin, alpha(G))`` for 1x1 or 2x2 ``G``."""
    alpha = spectral_abscissa_2x2(G)
    return alpha < -margin, alpha


def inertia(eigenvalues, tol: float | None = None) -> tuple[int, int, int]:
    """Counts of (negative, zero, positive) eigenvalues."""
    lam = np.asarray(eigenvalues, dtype=float)
    if tol is None:
        tol = rank_tolerance(lam)
    return int(np.sum(lam < -tol)), int(np.sum(np.abs(lam) <= tol)), int(np.sum(lam > tol))
