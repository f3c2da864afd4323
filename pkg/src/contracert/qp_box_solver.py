"""Box-constrained convex QP solved by a contracting firing-rate network.

Problem: ``min 1/2 y^T A y - u^T y`` subject to ``mu <= y <= nu`` with
``A`` symmetric positive definite. Its minimizer is the unique equilibrium of
``x' = -x + sat_{mu,nu}((I - A) x + u)``, an FNN with ``W = I - A``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .contraction_engine import ContractionCertificate, certify_fnn
from .errors import DimensionMismatch, HorizonExceeded, NoKktPoint, NotPositiveDefinite, OutOfBox, TooLarge
from .linalg_core import rank_tolerance, symmetric
from .network_dynamics import MAX_STEP, Activation, NetworkModel, rk4_step

KNIFE_EDGE_TOL = 1e-10
KNIFE_EDGE_EPS = 1e-3
BOUNDARY_TOL = 1e-7
ORACLE_MAX_N = 12


@dataclass(frozen=True, eq=False)
class QpProblem:
    A: np.ndarray
    u: np.ndarray
    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        A = symmetric(self.A)
        n = A.shape[0]
        vecs = {}
        for name in ("u", "mu", "nu"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if v.shape != (n,):
                raise DimensionMismatch(f"{name} has length {v.size}, expected {n}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} has non-finite entries")
            vecs[name] = v
        if np.any(vecs["mu"] > vecs["nu"]):
            raise ValueError("box requires mu <= nu elementwise")
        lam = np.linalg.eigvalsh(A)
        if lam[0] <= rank_tolerance(lam):
            raise NotPositiveDefinite(f"A must be positive definite (min eigenvalue {lam[0]:.3e})")
        object.__setattr__(self, "A", A)
        for name, v in vecs.items():
            object.__setattr__(self, name, v)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def objective(self, y) -> float:
        y = np.asarray(y, dtype=float)
        return float(0.5 * y @ self.A @ y - self.u @ y)


@dataclass(frozen=True, eq=False)
class QpSolution:
    x_star: np.ndarray
    kkt_residual: float
    iterations: int
    objective: float
    certificate: ContractionCertificate | None = None
    residuals: np.ndarray | None = field(default=None, repr=False)

    @property
    def rate(self) -> float | None:
        return None if self.certificate is None else self.certificate.rate


def build_network(p: QpProblem, verify: bool = True) -> tuple[NetworkModel, ContractionCertificate]:
    """FNN with ``W = I - A``, saturation activation and its certificate.

    ``lambda_min(A) < 1``: rate ``lambda_min(A)`` in ``Q_F(1 - lambda_min(A))``;
    ``lambda_min(A) = 1``: rate ``1 - eps``; ``lambda_min(A) > 1``: rate 1 in
    ``(A - I)^{1/2}``.
    """
    W = np.eye(p.n) - p.A
    cert = certify_fnn(
        W,
        eps=KNIFE_EDGE_EPS,
        zero_tol=KNIFE_EDGE_TOL,
        exhaustive=None if verify else False,
    )
    model = NetworkModel("FNN", W, p.u, Activation.saturation(p.mu, p.nu))
    return model, cert


def _default_step(p: QpProblem) -> float:
    # keeps h * lambda_max(A) near 1, well inside the RK4 stability region
    lam_max = float(np.linalg.eigvalsh(p.A)[-1])
    return min(MAX_STEP, 1.0 / max(1.0, lam_max))


def solve(
    p: QpProblem,
    tol: float = 1e-8,
    step: float | None = None,
    max_horizon: float | None = None,
    verify: bool = True,
    keep_residuals: bool = False,
) -> QpSolution:
    """Integrate the network from ``sat(u)`` until ``||x - x*||_2 <= tol`` is guaranteed.

    Contraction at rate ``c`` in ``||.||_Q`` gives
    ``||x - x*||_Q <= ||f(x)||_Q / c``, so the loop stops once
    ``||f(x)||_Q / (c sigma_min(Q)) <= tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    model, cert = build_network(p, verify=verify)
    if cert.rate <= 0:
        raise HorizonExceeded("certificate has zero rate; convergence cannot be bounded")
    h = _default_step(p) if step is None else float(step)
    if not 0.0 < h <= MAX_STEP:
        raise ValueError(f"step must lie in (0, {MAX_STEP}], got {h}")
    Q = cert.weight.Q
    scale = 1.0 / (cert.rate * cert.weight.sigma_min())
    f = model.field

    x = model.activation(p.u)
    k1 = f(x)
    r0 = float(np.linalg.norm(Q @ k1)) * scale
    if max_horizon is None:
        max_horizon = math.log(max(r0, tol) / tol) / cert.rate + 10.0
    max_steps = int(math.ceil(max_horizon / h))
    history = [r0] if keep_residuals else None
    steps = 0
    r = r0
    while r > tol:
        if steps >= max_steps:
            raise HorizonExceeded(f"residual {r:.3e} above tol {tol:.1e} after t={steps * h:g}")
        x = rk4_step(f, x, h, k1)
        steps += 1
        k1 = f(x)
        r = float(np.linalg.norm(Q @ k1)) * scale
        if history is not None:
            history.append(r)

    x = np.clip(x, p.mu, p.nu)
    return QpSolution(
        x_star=x,
        kkt_residual=kkt_check(p, x),
        iterations=steps,
        objective=p.objective(x),
        certificate=cert,
        residuals=None if history is None else np.asarray(history),
    )


def kkt_check(p: QpProblem, x, tol: float = BOUNDARY_TOL) -> float:
    """Largest violation of the box-QP KKT sign conditions at ``x``.

    Interior coordinates contribute ``|(Ax - u)_i|``, lower-active ones
    ``((u - Ax)_i)_+`` and upper-active ones ``((Ax - u)_i)_+``. Coordinates
    within ``tol`` of both bounds are fixed and contribute nothing.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise DimensionMismatch(f"point of length {x.shape} for n={p.n}")
    if np.any(x < p.mu - tol) or np.any(x > p.nu + tol):
        raise OutOfBox("point lies outside the box")
    g = p.A @ x - p.u
    lower = np.abs(x - p.mu) <= tol
    upper = np.abs(x - p.nu) <= tol
    fixed = lower & upper
    viol = np.where(lower, np.maximum(-g, 0.0), np.where(upper, np.maximum(g, 0.0), np.abs(g)))
    viol = np.where(fixed, 0.0, viol)
    return float(np.max(viol)) if viol.size else 0.0


def oracle_solve(p: QpProblem) -> QpSolution:
    """Exact minimizer by enumerating all 3^n active-set assignments."""
    n = p.n
    if n > ORACLE_MAX_N:
        raise TooLarge(f"active-set enumeration limited to n <= {ORACLE_MAX_N}, got {n}")
    A, u, mu, nu = p.A, p.u, p.mu, p.nu
    fixed = np.isclose(mu, nu, rtol=0.0, atol=BOUNDARY_TOL)
    scale = max(1.0, float(np.max(np.abs(A))), float(np.max(np.abs(u))), float(np.max(np.abs(mu))), float(np.max(np.abs(nu))))
    feas_tol = 1e-12 * scale
    sign_tol = 1e-9 * scale
    best, best_res = None, math.inf
    choices = [(0,) if fixed[i] else (0, 1, 2) for i in range(n)]
    for assign in itertools.product(*choices):
        assign = np.asarray(assign)
        free = assign == 1
        x = np.where(assign == 2, nu, mu).astype(float)
        if np.any(free):
            rhs = u[free] - A[np.ix_(free, ~free)] @ x[~free]
            x[free] = np.linalg.solve(A[np.ix_(free, free)], rhs)
            if np.any(x[free] < mu[free] - feas_tol) or np.any(x[free] > nu[free] + feas_tol):
                continue
        g = A @ x - u
        lo = (assign == 0) & ~fixed
        hi = assign == 2
        if np.any(g[lo] < -sign_tol) or np.any(g[hi] > sign_tol):
            continue
        x = np.clip(x, mu, nu)
        res = kkt_check(p, x)
        if res < best_res:
            best, best_res = x, res
    if best is None:
        raise NoKktPoint("no assignment satisfies the KKT conditions")
    return QpSolution(x_star=best, kkt_residual=best_res, iterations=0, objective=p.objective(best))
