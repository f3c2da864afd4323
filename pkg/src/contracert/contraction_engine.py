"""Contraction certificates for the firing-rate (FNN) and Hopfield (HNN) models.

FNN: ``x' = -x + Phi(W x + u)``, Jacobian ``-I + diag(d) W``.
HNN: ``x' = -x + W Phi(x) + u``, Jacobian ``-I + W diag(d)``.

With slopes ``d in [0,1]^n`` the one-sided Lipschitz constant in a weighted
Euclidean norm is at most ``-1 + max_v mu(vertex)``; every certificate below
carries the brute-force value of that maximum as its verification record.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRate, NoKernel, NotHurwitz, SingularW, UnsupportedActivation
from .linalg_core import (
    EigenDecomposition,
    NormWeight,
    WeightKind,
    is_hurwitz,
    lognorm_batch,
    sym_eig,
    symmetric,
)
from .polytope_norms import (
    VERDICT_TOL,
    OptimalityReport,
    PolytopeSpec,
    Side,
    Verdict,
    WeightPolicy,
    check_log_optimality,
    max_lognorm_over_vertices,
    select_weight,
)
from .spectral_weights import DEFAULT_EPS, theta

UNIT_TOL = 1e-10


class Model(enum.Enum):
    FNN = "FNN"
    HNN = "HNN"


class Case(enum.Enum):
    ALPHA_NEG = "AlphaNeg"
    ALPHA_ZERO_EPS = "AlphaZeroEps"
    ALPHA_IN_01 = "AlphaIn01"
    ALPHA_ONE = "AlphaOne"
    SINGULAR_KERNEL = "SingularKernel"


@dataclass(frozen=True)
class SubspaceSplit:
    """Eigenbasis split ``U = [U_par U_perp]`` into range and kernel of W.

    ``theta_par`` is the diagonal weight used on the range block: the values
    ``theta_{alpha(W)}(lam)`` when ``alpha(W) > 0``, and ``sqrt(-lam)`` when
    ``alpha(W) = 0`` (W negative semidefinite), where ``theta_0`` is undefined.
    """

    U_par: np.ndarray
    U_perp: np.ndarray
    Lambda_par: np.ndarray
    theta_par: np.ndarray

    @property
    def n_par(self) -> int:
        return self.Lambda_par.shape[0]

    @property
    def n_perp(self) -> int:
        return self.U_perp.shape[1]

    @property
    def Q_Hpar(self) -> np.ndarray:
        return np.diag(self.theta_par / self.Lambda_par)


@dataclass(frozen=True)
class GainMatrix:
    """Gain matrix of the kernel / range interconnection.

    ``Gamma = [[-1, 0], [alpha, -1 + alpha]]``. ``eta`` weights the composite
    norm ``eta_1 ||x_perp||^2 + eta_2 ||Q_Hpar x_par||^2`` and is sized from
    ``lip_weighted``, the cross gain measured in those block norms, so that
    the composite norm contracts at ``1 - alpha - eps``.
    """

    Gamma: np.ndarray
    c_perp: float
    c_par: float
    lip_cross: float
    eta: tuple[float, float]
    lip_weighted: float
    eps: float

    @property
    def alpha_gamma(self) -> float:
        return is_hurwitz(self.Gamma)[1]


@dataclass(frozen=True)
class CertificateCheck:
    """Vertex scan of the Jacobian polytope under the certificate weight."""

    max_vertex_lognorm: float
    vertices_checked: int
    verdict: Verdict
    sampled: bool

    def to_dict(self) -> dict:
        return {
            "max_vertex_lognorm": self.max_vertex_lognorm,
            "vertices_checked": self.vertices_checked,
            "verdict": self.verdict.value,
        }


@dataclass(frozen=True)
class ContractionCertificate:
    model: Model
    case: Case
    weight: NormWeight
    rate: float
    alpha_W: float
    epsilon: float | None
    verification: CertificateCheck
    optimality: OptimalityReport | None = None
    split: SubspaceSplit | None = field(default=None, repr=False)
    gain: GainMatrix | None = field(default=None, repr=False)

    @property
    def osl_bound(self) -> float:
        return -self.rate

    @property
    def weak(self) -> bool:
        return self.rate == 0.0


def _verify(W, model: Model, weight: NormWeight, rate: float, exhaustive=None, seed=0) -> CertificateCheck:
    side = Side.LEFT if model is Model.FNN else Side.RIGHT
    scan = max_lognorm_over_vertices(PolytopeSpec(W, side), weight, exhaustive=exhaustive, seed=seed, shift=-1.0)
    ok = scan.max_lognorm <= -rate + VERDICT_TOL
    return CertificateCheck(
        max_vertex_lognorm=scan.max_lognorm,
        vertices_checked=scan.vertices_checked,
        verdict=Verdict.CONTRACTING if ok else Verdict.VIOLATED,
        sampled=scan.sampled,
    )


def _classify(alpha: float, tol: float, unit_tol: float) -> Case:
    if alpha > 1.0 + unit_tol:
        raise DegenerateRate(f"alpha(W) = {alpha!r} > 1: no contraction claim")
    if abs(alpha - 1.0) <= unit_tol:
        return Case.ALPHA_ONE
    if alpha > tol:
        return Case.ALPHA_IN_01
    if alpha >= -tol:
        return Case.ALPHA_ZERO_EPS
    return Case.ALPHA_NEG


def _rate(case: Case, alpha: float, eps: float | None) -> float:
    if case is Case.ALPHA_NEG:
        return 1.0
    if case is Case.ALPHA_ONE:
        return 0.0
    if case is Case.ALPHA_ZERO_EPS:
        return 1.0 - eps
    return 1.0 - alpha


def certify_fnn(
    W,
    eps: float | None = None,
    zero_tol: float | None = None,
    unit_tol: float = UNIT_TOL,
    exhaustive: bool | None = None,
    seed: int = 0,
) -> ContractionCertificate:
    """Certificate for ``x' = -x + Phi(W x + u)`` with slope-[0,1] activations.

    ``alpha(W) < 0``: rate 1 in ``(-W)^{1/2}``. ``alpha(W) = 0``: rate
    ``1 - eps`` in ``Q_F(eps)``. ``0 < alpha(W) <= 1``: rate ``1 - alpha(W)``
    in ``Q_F(alpha(W))`` (weak contraction at ``alpha(W) = 1``).
    """
    W = symmetric(W)
    eig = sym_eig(W)
    tol = eig.rank_tol if zero_tol is None else zero_tol
    case = _classify(eig.alpha, tol, unit_tol)
    eps_used = None
    if case is Case.ALPHA_ZERO_EPS:
        eps_used = DEFAULT_EPS if eps is None else float(eps)
        if not 0.0 < eps_used < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {eps_used}")
    policy = WeightPolicy(eps=eps_used or DEFAULT_EPS)
    shifted = _shifted(eig, tol)
    weight, _ = select_weight(shifted, Side.LEFT, policy)
    rate = _rate(case, eig.alpha, eps_used)
    optimality = check_log_optimality(PolytopeSpec(W, Side.LEFT), policy, weight=weight, exhaustive=exhaustive, seed=seed)
    return ContractionCertificate(
        model=Model.FNN,
        case=case,
        weight=weight,
        rate=rate,
        alpha_W=eig.alpha,
        epsilon=eps_used,
        verification=_verify(W, Model.FNN, weight, rate, exhaustive, seed),
        optimality=optimality,
    )


def _shifted(eig: EigenDecomposition, zero_tol: float) -> EigenDecomposition:
    # select_weight classifies alpha against eig.rank_tol; honour a caller tolerance
    return EigenDecomposition(U=eig.U, lam=eig.lam, rank_tol=zero_tol)


def build_subspace_split(eig) -> SubspaceSplit:
    """Split the eigenbasis of a singular W into range and kernel parts."""
    if not isinstance(eig, EigenDecomposition):
        eig = sym_eig(eig)
    kernel = eig.kernel_mask()
    if not np.any(kernel):
        raise NoKernel("W is invertible")
    lam_par = eig.lam[~kernel]
    alpha = eig.alpha
    if lam_par.size == 0:
        theta_par = np.zeros(0)
    elif alpha > eig.rank_tol:
        theta_par = np.asarray(theta(alpha, lam_par), dtype=float).reshape(-1)
    else:
        theta_par = np.sqrt(-lam_par)
    return SubspaceSplit(
        U_par=eig.U[:, ~kernel],
        U_perp=eig.U[:, kernel],
        Lambda_par=lam_par,
        theta_par=theta_par,
    )


def build_gain_matrix(alpha_W: float, eps: float | None = None, lip_weighted: float | None = None) -> GainMatrix:
    """Gain matrix and composite-norm weights for ``0 <= alpha_W < 1``.

    ``eta_1 = 1`` and ``eta_2 = 2 eps (alpha + eps) / L^2`` with ``L`` the
    weighted cross gain: half the largest value for which
    ``diag(eta)(Gamma_L + c I) + (.)^T`` stays negative semidefinite at
    ``c = 1 - alpha - eps``.
    """
    alpha = float(alpha_W)
    if alpha >= 1.0:
        raise NotHurwitz(f"gain matrix is not Hurwitz for alpha(W) = {alpha!r} >= 1")
    if alpha < 0.0:
        raise ValueError(f"a nontrivial kernel forces alpha(W) >= 0, got {alpha!r}")
    if eps is None:
        eps = (1.0 - alpha) / 10.0
    if not 0.0 < eps < 1.0 - alpha:
        raise ValueError(f"eps must lie in (0, 1 - alpha(W)) = (0, {1 - alpha}), got {eps}")
    L = alpha if lip_weighted is None else float(lip_weighted)
    # any eta_2 <= 4 eps (alpha + eps) / L^2 works; take half, or 1 when L is negligible
    eta2 = 2.0 * eps * (alpha + eps) / (L * L) if L * L > 0.0 else math.inf
    if not math.isfinite(eta2):
        eta2 = 1.0
    Gamma = np.array([[-1.0, 0.0], [alpha, -1.0 + alpha]])
    return GainMatrix(
        Gamma=Gamma,
        c_perp=1.0,
        c_par=1.0 - alpha,
        lip_cross=alpha,
        eta=(1.0, eta2),
        lip_weighted=L,
        eps=float(eps),
    )


def lyapunov_negative(eta, G) -> bool:
    """``diag(eta) G + G^T diag(eta)`` negative definite, by leading minors of the negation."""
    E = np.diag(eta)
    M = -(E @ G + G.T @ E)
    return bool(M[0, 0] > 0 and np.linalg.det(M) > 0)


def composite_weight(split: SubspaceSplit, eta) -> NormWeight:
    """Weight ``sqrt(eta_1) U_perp U_perp^T + sqrt(eta_2) U_par Q_Hpar U_par^T``."""
    Q = math.sqrt(eta[0]) * split.U_perp @ split.U_perp.T
    if split.n_par:
        Q = Q + math.sqrt(eta[1]) * split.U_par @ split.Q_Hpar @ split.U_par.T
    return NormWeight(0.5 * (Q + Q.T), WeightKind.COMPOSITE)


def block_lognorm_bound(split: SubspaceSplit) -> float:
    """``max_v mu_{theta_par}(-I + U_par^T diag(v) U_par Lambda_par)`` over all vertices."""
    if split.n_par == 0:
        return -1.0
    n = split.U_par.shape[0]
    k = np.arange(1 << n, dtype=np.int64)
    V = ((k[:, None] >> np.arange(n)) & 1).astype(float)
    M = np.einsum("ia,ki,ib->kab", split.U_par, V, split.U_par) * split.Lambda_par[None, None, :]
    M = M - np.eye(split.n_par)
    return float(np.max(lognorm_batch(M, NormWeight(np.diag(split.theta_par)))))


def certify_hnn(
    W,
    eps: float | None = None,
    unit_tol: float = UNIT_TOL,
    exhaustive: bool | None = None,
    seed: int = 0,
) -> ContractionCertificate:
    """Certificate for ``x' = -x + W Phi(x) + u`` with slope-[0,1] activations.

    Invertible W: rate ``1 - alpha(W)`` in ``Q_H(alpha(W))`` for
    ``0 < alpha(W) <= 1``; rate 1 in ``(-W)^{-1/2}`` for ``alpha(W) < 0``.
    Singular W with ``alpha(W) < 1``: rate ``1 - alpha(W) - eps`` in the
    composite kernel / range norm (rate 1 in the identity when ``W = 0``).
    """
    W = symmetric(W)
    eig = sym_eig(W)
    alpha = eig.alpha
    if alpha > 1.0 + unit_tol:
        raise DegenerateRate(f"alpha(W) = {alpha!r} > 1: no contraction claim")

    if eig.is_singular:
        if alpha >= 1.0 - unit_tol:
            raise DegenerateRate(f"singular W with alpha(W) = {alpha!r} >= 1: no contraction claim")
        split = build_subspace_split(eig)
        alpha_c = max(alpha, 0.0) if alpha > eig.rank_tol else 0.0
        if split.n_par == 0:
            weight = NormWeight.identity(eig.n)
            return ContractionCertificate(
                model=Model.HNN,
                case=Case.SINGULAR_KERNEL,
                weight=weight,
                rate=1.0,
                alpha_W=alpha,
                epsilon=None,
                verification=_verify(W, Model.HNN, weight, 1.0, exhaustive, seed),
                split=split,
            )
        lip_w = float(np.max(np.abs(split.theta_par)))
        gain = build_gain_matrix(alpha_c, eps, lip_w)
        weight = composite_weight(split, gain.eta)
        rate = 1.0 - alpha_c - gain.eps
        return ContractionCertificate(
            model=Model.HNN,
            case=Case.SINGULAR_KERNEL,
            weight=weight,
            rate=rate,
            alpha_W=alpha,
            epsilon=gain.eps,
            verification=_verify(W, Model.HNN, weight, rate, exhaustive, seed),
            split=split,
            gain=gain,
        )

    case = _classify(alpha, eig.rank_tol, unit_tol)
    weight, _ = select_weight(eig, Side.RIGHT)
    rate = _rate(case, alpha, None)
    optimality = check_log_optimality(PolytopeSpec(W, Side.RIGHT), weight=weight, exhaustive=exhaustive, seed=seed)
    return ContractionCertificate(
        model=Model.HNN,
        case=case,
        weight=weight,
        rate=rate,
        alpha_W=alpha,
        epsilon=None,
        verification=_verify(W, Model.HNN, weight, rate, exhaustive, seed),
        optimality=optimality,
    )


def certify(W, model, eps: float | None = None, **kwargs) -> ContractionCertificate:
    model = Model(model.upper() if isinstance(model, str) else model)
    if model is Model.FNN:
        return certify_fnn(W, eps, **kwargs)
    return certify_hnn(W, eps, **kwargs)


@dataclass(frozen=True)
class TightnessReport:
    estimated_osl: float
    bound: float
    samples: int

    @property
    def gap(self) -> float:
        """``bound - estimate``; never negative when the bound holds."""
        return self.bound - self.estimated_osl


def tightness_probe(
    W,
    activation,
    model=Model.FNN,
    samples: int = 256,
    seed: int = 0,
    weight: NormWeight | None = None,
) -> TightnessReport:
    """Estimate the one-sided Lipschitz constant from sampled Jacobians.

    Pre-activations are drawn so that every coordinate independently lands in
    the flat or the unit-slope region of the activation; the two corners
    (all flat, all unit slope) are always included. The estimate is the
    largest weighted log-norm of the sampled Jacobians and is compared with
    the certified bound ``-rate``.
    """
    from .network_dynamics import Activation

    if not isinstance(activation, Activation):
        activation = Activation(activation)
    if not activation.slope_spans_unit_interval():
        raise UnsupportedActivation(f"{activation.kind} does not have slopes spanning [0, 1]")
    W = symmetric(W)
    model = Model(model.upper() if isinstance(model, str) else model)
    eig = sym_eig(W)
    if eig.is_singular:
        raise SingularW("tightness probe requires an invertible W")
    cert = certify(W, model)
    if weight is None:
        weight = cert.weight
    n = eig.n
    rng = np.random.default_rng(seed)
    masks = rng.integers(0, 2, size=(samples, n)).astype(bool)
    masks = np.vstack([np.zeros((1, n), bool), np.ones((1, n), bool), masks])
    Z = activation.targeted_points(masks, rng)
    D = activation.slope(Z)
    if model is Model.FNN:
        J = D[:, :, None] * W[None, :, :]
    else:
        J = W[None, :, :] * D[:, None, :]
    J = J - np.eye(n)
    est = float(np.max(lognorm_batch(J, weight)))
    return TightnessReport(estimated_osl=est, bound=-cert.rate, samples=J.shape[0])
