"""Seeded property checks of the library's own guarantees, used by ``contracert selftest``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contraction_engine import certify_fnn, certify_hnn
from .errors import ContracertError
from .linalg_core import NormWeight, euclidean_lognorm, sym_eig, weighted_lognorm
from .polytope_norms import PolytopeSpec, ProductSide, Side, Verdict, check_log_optimality, product_sym_check
from .qp_box_solver import QpProblem, oracle_solve, solve
from .spectral_weights import splitting_residual


@dataclass
class SelftestResult:
    passed: int = 0
    failed: int = 0
    failures: list[str] = field(default_factory=list)

    def record(self, name: str, ok: bool, detail: str = "") -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            self.failures.append(f"{name}: {detail}" if detail else name)


def random_symmetric(rng, n: int, scale: float = 1.0) -> np.ndarray:
    G = rng.standard_normal((n, n))
    return scale * 0.5 * (G + G.T)


def _with_alpha(rng, n: int, alpha: float) -> np.ndarray:
    """Random symmetric matrix with prescribed largest eigenvalue, kept invertible."""
    W = random_symmetric(rng, n)
    lam = np.linalg.eigvalsh(W)
    W = W + (alpha - lam[-1]) * np.eye(n)
    return W


def _check_eig(rng, res, count):
    for k in range(count):
        n = int(rng.integers(2, 9))
        W = random_symmetric(rng, n)
        e = sym_eig(W)
        err = float(np.max(np.abs(e.matrix() - W)))
        ref = np.linalg.eigvalsh(W)[::-1]
        gap = float(np.max(np.abs(e.lam - ref)))
        res.record(f"sym_eig[{k}]", err <= 1e-10 and gap <= 1e-10, f"recon {err:.2e}, eig gap {gap:.2e}")


def _check_lognorm(rng, res, count):
    for k in range(count):
        n = int(rng.integers(2, 7))
        A = rng.standard_normal((n, n))
        Qm = random_symmetric(rng, n) + 3 * n * np.eye(n)
        direct = euclidean_lognorm(Qm @ A @ np.linalg.inv(Qm))
        gap = abs(weighted_lognorm(A, NormWeight(Qm)) - direct)
        res.record(f"lognorm[{k}]", gap <= 1e-9, f"gap {gap:.2e}")


def _check_polytopes(rng, res, count):
    for k in range(count):
        n = int(rng.integers(2, 7))
        for sign, sides in ((1.0, (Side.LEFT, Side.RIGHT)), (-1.0, (Side.LEFT, Side.RIGHT))):
            W = _with_alpha(rng, n, sign * float(rng.uniform(0.1, 1.0)))
            for side in sides:
                rep = check_log_optimality(PolytopeSpec(W, side), exhaustive=True)
                res.record(f"polytope[{k},{side.value},{sign:+.0f}]", rep.verdict is Verdict.LOG_OPTIMAL,
                           f"max {rep.max_vertex_lognorm:.3e} vs {rep.claimed_bound:.3e}")
        W = _with_alpha(rng, n, 0.0)
        W = W - (np.linalg.eigvalsh(W)[-1]) * np.eye(n)
        rep = check_log_optimality(PolytopeSpec(W, Side.LEFT), exhaustive=True)
        res.record(f"polytope[{k},left,0]", rep.verdict is Verdict.LOG_EPS_OPTIMAL, f"max {rep.max_vertex_lognorm:.3e}")


def _check_splitting(rng, res, count):
    for k in range(count):
        n = int(rng.integers(2, 9))
        W = random_symmetric(rng, n)
        b = max(float(np.linalg.eigvalsh(W)[-1]), 0.0) + float(rng.uniform(0.0, 1.0)) + 1e-3
        r = splitting_residual(W, b)
        res.record(f"splitting[{k}]", r <= 1e-10 * max(1.0, float(np.max(np.abs(W)))), f"residual {r:.2e}")


def _check_products(rng, res, count):
    for k in range(count):
        n = int(rng.integers(2, 7))
        S = random_symmetric(rng, n)
        G = rng.standard_normal((n, n))
        Qm = G @ G.T + 0.5 * np.eye(n)
        rep = product_sym_check(S, Qm, ProductSide.SQ)
        res.record(f"product[{k}]", rep.ok(1e-8), f"norm gap {rep.norm_gap:.2e}, lognorm gap {rep.lognorm_gap:.2e}")


def _check_certificates(rng, res, count):
    for k in range(count):
        n = int(rng.integers(2, 7))
        W = _with_alpha(rng, n, float(rng.uniform(-0.9, 0.9)))
        for certify in (certify_fnn, certify_hnn):
            try:
                cert = certify(W, exhaustive=True)
            except ContracertError as exc:
                res.record(f"{certify.__name__}[{k}]", False, str(exc))
                continue
            res.record(f"{certify.__name__}[{k}]", cert.verification.verdict is Verdict.CONTRACTING,
                       f"max {cert.verification.max_vertex_lognorm:.3e} vs -{cert.rate:.3e}")


def _check_qp(rng, res, count):
    for k in range(count):
        n = int(rng.integers(2, 6))
        G = rng.standard_normal((n, n))
        A = G.T @ G + 0.1 * np.eye(n)
        u = rng.standard_normal(n) * 2
        mu = -rng.uniform(0.1, 1.5, n)
        nu = rng.uniform(0.1, 1.5, n)
        p = QpProblem(A, u, mu, nu)
        err = float(np.max(np.abs(solve(p).x_star - oracle_solve(p).x_star)))
        res.record(f"qp[{k}]", err <= 1e-6, f"error {err:.2e}")


CHECKS = (_check_eig, _check_lognorm, _check_polytopes, _check_splitting, _check_products, _check_certificates, _check_qp)


def run_selftest(seed: int = 0, full: bool = False) -> SelftestResult:
    """Run every check with instances drawn from independent child streams of ``seed``."""
    count = 25 if full else 5
    res = SelftestResult()
    streams = np.random.SeedSequence(seed).spawn(len(CHECKS))
    for check, ss in zip(CHECKS, streams):
        check(np.random.default_rng(ss), res, count)
    return res
