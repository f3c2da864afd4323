"""Weighted log-norms over the diagonal-scaling polytopes of a symmetric W.

``P_F = {diag(d) W : d in [0,1]^n}`` (left) and ``P_H = {W diag(d)}``
(right). Both are convex hulls of their 2^n vertices and the log-norm is
convex, so maxima over the polytopes are maxima over ``d in {0,1}^n``.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite, SingularW, TooManyVertices
from .linalg_core import (
    EigenDecomposition,
    NormWeight,
    inertia,
    lognorm_batch,
    rank_tolerance,
    sym_eig,
    symmetric,
    weighted_lognorm,
    weighted_matrix_norm,
)
from .spectral_weights import DEFAULT_EPS, build_QF, build_QH, neg_inv_sqrt_weight, neg_sqrt_weight

EXHAUSTIVE_LIMIT = 20
SAMPLED_VERTICES = 10_000
VERDICT_TOL = 1e-7
_CHUNK = 4096


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class Verdict(enum.Enum):
    LOG_OPTIMAL = "LogOptimal"
    LOG_EPS_OPTIMAL = "LogEpsOptimal"
    CONTRACTING = "Contracting"
    VIOLATED = "Violated"


@dataclass(frozen=True)
class PolytopeSpec:
    W: np.ndarray
    side: Side = Side.LEFT

    def __post_init__(self):
        object.__setattr__(self, "W", symmetric(self.W))
        object.__setattr__(self, "side", Side(self.side))

    @property
    def n(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True)
class VertexScan:
    max_lognorm: float
    max_abscissa: float
    argmax: tuple[int, ...]
    vertices_checked: int
    sampled: bool


@dataclass(frozen=True)
class OptimalityReport:
    max_vertex_lognorm: float
    max_vertex_abscissa: float
    claimed_bound: float
    epsilon_used: float | None
    vertices_checked: int
    verdict: Verdict
    sampled: bool = False
    weight_label: str = ""

    def to_dict(self) -> dict:
        return {
            "max_vertex_lognorm": self.max_vertex_lognorm,
            "max_vertex_abscissa": self.max_vertex_abscissa,
            "claimed_bound": self.claimed_bound,
            "epsilon_used": self.epsilon_used,
            "vertices_checked": self.vertices_checked,
            "verdict": self.verdict.value,
            "sampled": self.sampled,
            "weight": self.weight_label,
        }


def vertex_matrix(spec: PolytopeSpec, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.n,):
        raise DimensionMismatch(f"vertex of length {v.shape} for n={spec.n}")
    if spec.side is Side.LEFT:
        return v[:, None] * spec.W
    return spec.W * v[None, :]


def _vertex_bits(start: int, stop: int, n: int) -> np.ndarray:
    k = np.arange(start, stop, dtype=np.int64)
    return ((k[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(float)


def _stack(spec: PolytopeSpec, V: np.ndarray, shift: float) -> np.ndarray:
    if spec.side is Side.LEFT:
        M = V[:, :, None] * spec.W[None, :, :]
    else:
        M = spec.W[None, :, :] * V[:, None, :]
    if shift:
        M = M + shift * np.eye(spec.n)
    return M


def _abscissa_batch(spec: PolytopeSpec, V: np.ndarray) -> np.ndarray:
    # diag(v) W and W diag(v) share their nonzero spectrum with the symmetric
    # matrix diag(v) W diag(v); zero rows contribute eigenvalue 0.
    S = V[:, :, None] * spec.W[None, :, :] * V[:, None, :]
    top = np.linalg.eigvalsh(S)[:, -1]
    has_zero = np.any(V == 0, axis=1)
    return np.where(has_zero, np.maximum(top, 0.0), top)


def _scan(spec, Q, V, shift):
    ln = lognorm_batch(_stack(spec, V, shift), Q)
    ab = _abscissa_batch(spec, V) + shift
    i = int(np.argmax(ln))
    return float(ln[i]), float(np.max(ab)), tuple(int(x) for x in V[i])


def worker_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("CONTRACERT_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            value = 0
        if value > 0:
            return value
    return 1


def max_lognorm_over_vertices(
    spec: PolytopeSpec,
    Q: NormWeight,
    exhaustive: bool | None = None,
    seed: int = 0,
    shift: float = 0.0,
    threads: int | None = None,
) -> VertexScan:
    """Maximum of ``mu_Q(shift*I + vertex)`` and of the vertex abscissa.

    Exhaustive enumeration walks ``k = 0 .. 2^n - 1`` with bit ``i`` of ``k``
    giving coordinate ``i``. With ``exhaustive=False`` (the default above
    n = 20), 10,000 random vertices plus the two corners are scanned and the
    result is flagged as sampled, so it is only a lower bound.
    """
    n = spec.n
    if Q.n != n:
        raise DimensionMismatch(f"weight of size {Q.n} for n={n}")
    if exhaustive is None:
        exhaustive = n <= EXHAUSTIVE_LIMIT
    if exhaustive and n > EXHAUSTIVE_LIMIT:
        raise TooManyVertices(f"exhaustive enumeration capped at n={EXHAUSTIVE_LIMIT}, got n={n}")

    if exhaustive:
        total = 1 << n
        ranges = [(s, min(s + _CHUNK, total)) for s in range(0, total, _CHUNK)]

        def job(r):
            return _scan(spec, Q, _vertex_bits(r[0], r[1], n), shift)

        workers = min(worker_count(threads), len(ranges))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(job, ranges))
        else:
            parts = [job(r) for r in ranges]
        checked = total
    else:
        rng = np.random.default_rng(seed)
        V = rng.integers(0, 2, size=(SAMPLED_VERTICES, n)).astype(float)
        V = np.vstack([np.zeros(n), np.ones(n), V])
        parts = [_scan(spec, Q, V[s : s + _CHUNK], shift) for s in range(0, V.shape[0], _CHUNK)]
        checked = V.shape[0]

    # ties resolve to the earliest vertex in enumeration order
    best = max(range(len(parts)), key=lambda i: (parts[i][0], -i))
    return VertexScan(
        max_lognorm=parts[best][0],
        max_abscissa=max(p[1] for p in parts),
        argmax=parts[best][2],
        vertices_checked=checked,
        sampled=not exhaustive,
    )


def abscissa_lower_bound(spec: PolytopeSpec) -> float:
    """``alpha(W)_+``, realized at the corners d = 0 and d = 1."""
    return max(sym_eig(spec.W).alpha, 0.0)


@dataclass(frozen=True)
class WeightPolicy:
    """How ``check_log_optimality`` picks its weight.

    ``negdef_right`` selects the weight for the right polytope when W is
    negative definite: ``"inverse"`` uses ``(-W)^{-1/2}``, ``"sqrt"`` uses
    ``(-W)^{1/2}``. Only the inverse square root bounds ``W diag(d)`` by its
    spectral abscissa; ``"sqrt"`` is kept to expose that difference.
    """

    eps: float = DEFAULT_EPS
    negdef_right: str = "inverse"


def select_weight(eig: EigenDecomposition, side: Side, policy: WeightPolicy = WeightPolicy()):
    """Return ``(weight, epsilon_used)`` for the sign of ``alpha(W)``."""
    side = Side(side)
    alpha, tol = eig.alpha, eig.rank_tol
    if alpha > tol:
        if side is Side.LEFT:
            return build_QF(eig, alpha), None
        return build_QH(eig, alpha), None
    if alpha >= -tol:
        if side is Side.RIGHT:
            raise SingularW("alpha(W) = 0 forces a singular W; the right polytope has no Q_H weight")
        return build_QF(eig, policy.eps), policy.eps
    if side is Side.RIGHT and policy.negdef_right == "inverse":
        return neg_inv_sqrt_weight(eig), None
    return neg_sqrt_weight(eig), None


def check_log_optimality(
    spec: PolytopeSpec,
    policy: WeightPolicy = WeightPolicy(),
    weight: NormWeight | None = None,
    exhaustive: bool | None = None,
    seed: int = 0,
    threads: int | None = None,
) -> OptimalityReport:
    """Brute-force check that the selected weight is log-optimal for the polytope."""
    eig = sym_eig(spec.W)
    if weight is None:
        weight, eps = select_weight(eig, spec.side, policy)
    else:
        eps = policy.eps if abs(eig.alpha) <= eig.rank_tol else None
    scan = max_lognorm_over_vertices(spec, weight, exhaustive=exhaustive, seed=seed, threads=threads)
    bound = max(eig.alpha, 0.0)
    if eps is not None:
        ok = scan.max_abscissa - VERDICT_TOL <= scan.max_lognorm <= eps + VERDICT_TOL
        verdict = Verdict.LOG_EPS_OPTIMAL if ok else Verdict.VIOLATED
    else:
        ok = (
            abs(scan.max_lognorm - scan.max_abscissa) <= VERDICT_TOL
            and abs(scan.max_abscissa - bound) <= VERDICT_TOL
        )
        verdict = Verdict.LOG_OPTIMAL if ok else Verdict.VIOLATED
    return OptimalityReport(
        max_vertex_lognorm=scan.max_lognorm,
        max_vertex_abscissa=scan.max_abscissa,
        claimed_bound=bound if eps is None else eps,
        epsilon_used=eps,
        vertices_checked=scan.vertices_checked,
        verdict=verdict,
        sampled=scan.sampled,
        weight_label=weight.label,
    )


class ProductSide(enum.Enum):
    SQ = "SQ"
    QS = "QS"


@dataclass(frozen=True)
class ProductReport:
    spectrum_real_gap: float
    inertia_product: tuple[int, int, int]
    inertia_S: tuple[int, int, int]
    norm_gap: float
    lognorm_gap: float

    @property
    def inertia_match(self) -> bool:
        return self.inertia_product == self.inertia_S

    def ok(self, tol: float = 1e-8) -> bool:
        return (
            self.inertia_match
            and self.spectrum_real_gap <= tol
            and self.norm_gap <= tol
            and self.lognorm_gap <= tol
        )


def _spd_power(Qm: np.ndarray, power: float) -> np.ndarray:
    eig = sym_eig(Qm)
    if eig.lam[-1] <= rank_tolerance(eig.lam):
        raise NotPositiveDefinite("Q must be positive definite")
    return eig.apply(lambda lam: lam**power)


def product_sym_check(S, Qm, side=ProductSide.SQ, weight: NormWeight | None = None) -> ProductReport:
    """Spectral facts about ``A = S Q`` (or ``Q S``) with ``S`` symmetric, ``Q`` SPD.

    ``A`` is similar to ``Q^{1/2} S Q^{1/2}``, so its spectrum is real with the
    inertia of ``S``. The gaps ``| ||A||_w - rho(A) |`` and
    ``| mu_w(A) - alpha(A) |`` are measured in the weight ``w``, which
    defaults to ``Q^{1/2}``. That default is exact for ``S Q``; for ``Q S`` the
    exact weight is ``Q^{-1/2}``.
    """
    S = symmetric(S)
    Qm = symmetric(Qm)
    side = ProductSide(side)
    Qh = _spd_power(Qm, 0.5)
    A = S @ Qm if side is ProductSide.SQ else Qm @ S
    if weight is None:
        weight = NormWeight(Qh)

    sim = Qh @ S @ Qh
    spec_sym = np.linalg.eigvalsh(0.5 * (sim + sim.T))
    spec_direct = np.linalg.eigvals(A)
    scale = max(1.0, float(np.max(np.abs(spec_sym))))
    real_gap = float(
        max(
            np.max(np.abs(spec_direct.imag)),
            np.max(np.abs(np.sort(spec_direct.real) - spec_sym)),
        )
        / scale
    )
    rho = float(np.max(np.abs(spec_sym)))
    alpha = float(spec_sym[-1])
    return ProductReport(
        spectrum_real_gap=real_gap,
        inertia_product=inertia(spec_sym, rank_tolerance(spec_sym)),
        inertia_S=inertia(np.linalg.eigvalsh(S), rank_tolerance(np.linalg.eigvalsh(S))),
        norm_gap=abs(weighted_matrix_norm(A, weight) - rho),
        lognorm_gap=abs(weighted_lognorm(A, weight) - alpha),
    )
