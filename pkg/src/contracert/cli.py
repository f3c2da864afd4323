"""``contracert`` command-line interface.

Exit codes: 0 success, 1 domain or usage error, 2 numerical verification
violation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import io
from .contraction_engine import certify
from .errors import ContracertError, VerificationError
from .network_dynamics import DEFAULT_STEP, KINDS, Activation, NetworkModel, integrate
from .polytope_norms import PolytopeSpec, Side, Verdict, WeightPolicy, check_log_optimality
from .qp_box_solver import solve
from .selftest import run_selftest
from .spectral_weights import DEFAULT_EPS

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_VIOLATION = 2
COMMANDS = ("certify", "verify-polytope", "simulate", "solve-qp", "selftest")


class UsageError(ContracertError):
    pass


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    model: str | None = None
    side: str | None = None
    eps: float | None = None
    step: float | None = None
    horizon: float | None = None
    tol: float | None = None
    seed: int = 0
    output_path: str | None = None
    exhaustive: bool = False
    sqrt_weight: bool = False
    activation: str = "tanh"
    full: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        needs_input = self.command != "selftest"
        if needs_input and not self.input_path:
            raise UsageError(f"{self.command} requires an input file")
        if self.command in ("certify", "simulate") and self.model not in ("fnn", "hnn"):
            raise UsageError(f"{self.command} requires --model fnn|hnn")
        if self.command == "verify-polytope" and self.side not in ("left", "right"):
            raise UsageError("verify-polytope requires --side left|right")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="contracert", description="Contraction certificates for FNN/HNN networks with symmetric weights.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("certify", help="emit a contraction certificate as JSON")
    c.add_argument("--model", choices=("fnn", "hnn"), required=True)
    c.add_argument("--eps", type=float)
    c.add_argument("--exhaustive", action="store_true", help="force exhaustive vertex verification")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output", dest="output_path")
    c.add_argument("input_path", metavar="INPUT")

    v = sub.add_parser("verify-polytope", help="check log-optimality over a matrix polytope")
    v.add_argument("--side", choices=("left", "right"), required=True)
    v.add_argument("--exhaustive", action="store_true")
    v.add_argument("--eps", type=float)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--sqrt-weight", action="store_true",
                   help="use (-W)^{1/2} on the right polytope for negative definite W")
    v.add_argument("--output", dest="output_path")
    v.add_argument("input_path", metavar="INPUT")

    s = sub.add_parser("simulate", help="integrate the network and write a CSV trajectory")
    s.add_argument("--model", choices=("fnn", "hnn"), required=True)
    s.add_argument("--activation", choices=KINDS, default="tanh")
    s.add_argument("--step", type=float)
    s.add_argument("--horizon", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", dest="output_path")
    s.add_argument("input_path", metavar="INPUT")

    q = sub.add_parser("solve-qp", help="solve a box-constrained QP with a contracting network")
    q.add_argument("--tol", type=float)
    q.add_argument("--step", type=float)
    q.add_argument("--output", dest="output_path")
    q.add_argument("input_path", metavar="INPUT")

    t = sub.add_parser("selftest", help="run seeded property checks")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--full", action="store_true")
    return p


def parse_config(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    ns = {k: v for k, v in ns.items() if v is not None}
    return RunConfig(**ns)


def _certify(cfg: RunConfig) -> int:
    W = io.parse_matrix_json(cfg.input_path)
    cert = certify(W, cfg.model, cfg.eps, exhaustive=True if cfg.exhaustive else None, seed=cfg.seed)
    io.write_text(io.dumps(io.certificate_to_dict(cert)), cfg.output_path)
    if cert.verification.verdict is Verdict.VIOLATED:
        raise VerificationError(
            f"certificate check failed: max vertex log-norm {cert.verification.max_vertex_lognorm!r} > {-cert.rate!r}"
        )
    return EXIT_OK


def _verify_polytope(cfg: RunConfig) -> int:
    W = io.parse_matrix_json(cfg.input_path)
    policy = WeightPolicy(
        eps=DEFAULT_EPS if cfg.eps is None else cfg.eps,
        negdef_right="sqrt" if cfg.sqrt_weight else "inverse",
    )
    rep = check_log_optimality(
        PolytopeSpec(W, Side(cfg.side)), policy, exhaustive=True if cfg.exhaustive else None, seed=cfg.seed
    )
    io.write_text(io.dumps(rep.to_dict()), cfg.output_path)
    if rep.verdict is Verdict.VIOLATED:
        raise VerificationError(
            f"log-optimality violated: max vertex log-norm {rep.max_vertex_lognorm!r}, bound {rep.claimed_bound!r}"
        )
    return EXIT_OK


def _simulate(cfg: RunConfig) -> int:
    data = io.load_json(cfg.input_path)
    W = io.matrix_from_dict(data, cfg.input_path)
    n = W.shape[0]
    u = io.real_list(data, "u", n, cfg.input_path) if "u" in data else np.zeros(n)
    if "x0" in data:
        x0 = io.real_list(data, "x0", n, cfg.input_path)
    else:
        x0 = np.random.default_rng(cfg.seed).standard_normal(n)
    if cfg.activation == "saturation":
        act = Activation.saturation(-np.ones(n), np.ones(n))
    else:
        act = Activation(cfg.activation)
    model = NetworkModel(cfg.model.upper(), W, u, act)
    traj = integrate(model, x0, cfg.step or DEFAULT_STEP, cfg.horizon or 10.0)
    io.write_trajectory_csv(traj, sys.stdout if cfg.output_path is None else cfg.output_path)
    return EXIT_OK


def _solve_qp(cfg: RunConfig) -> int:
    p = io.parse_qp_json(cfg.input_path)
    sol = solve(p, tol=cfg.tol or 1e-8, step=cfg.step)
    io.write_text(io.dumps(io.solution_to_dict(sol)), cfg.output_path)
    if sol.certificate is not None and sol.certificate.verification.verdict is Verdict.VIOLATED:
        raise VerificationError("network certificate failed its vertex check")
    return EXIT_OK


def _selftest(cfg: RunConfig) -> int:
    res = run_selftest(cfg.seed, cfg.full)
    for line in res.failures:
        print(f"FAIL {line}")
    print(f"selftest seed={cfg.seed}: {res.passed} passed, {res.failed} failed")
    return EXIT_OK if res.failed == 0 else EXIT_VIOLATION


HANDLERS = {
    "certify": _certify,
    "verify-polytope": _verify_polytope,
    "simulate": _simulate,
    "solve-qp": _solve_qp,
    "selftest": _selftest,
}


def run(cfg: RunConfig) -> int:
    try:
        return HANDLERS[cfg.command](cfg)
    except VerificationError as exc:
        print(f"contracert {cfg.command}: verification violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ContracertError, ValueError, ArithmeticError) as exc:
        print(f"contracert {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"contracert: usage error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
