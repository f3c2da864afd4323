"""Activations, FNN/HNN vector fields, fixed-step RK4 and contraction measurement."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteState, UnsupportedActivation
from .linalg_core import NormWeight, symmetric

KINDS = ("relu", "logistic", "tanh", "saturation")
MAX_STEP = 0.1
DEFAULT_STEP = 1e-2
TOL_DYN = 1e-3


@dataclass(frozen=True, eq=False)
class Activation:
    """Elementwise slope-restricted nonlinearity.

    Slopes at kinks (ReLU at 0, saturation at its bounds) are taken as 0.
    """

    kind: str
    mu: np.ndarray | None = None
    nu: np.ndarray | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in KINDS:
            raise UnsupportedActivation(f"unknown activation {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "saturation":
            if self.mu is None or self.nu is None:
                raise ValueError("saturation needs mu and nu")
            mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
            nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
            if mu.shape != nu.shape:
                raise DimensionMismatch("mu and nu must have the same length")
            if np.any(mu > nu):
                raise ValueError("saturation requires mu <= nu elementwise")
            object.__setattr__(self, "mu", mu)
            object.__setattr__(self, "nu", nu)

    @classmethod
    def saturation(cls, mu, nu) -> Activation:
        return cls("saturation", mu, nu)

    def _check(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "saturation" and z.shape[-1] != self.mu.shape[0]:
            raise DimensionMismatch(f"input of length {z.shape[-1]} for saturation of size {self.mu.shape[0]}")
        return z

    def __call__(self, z):
        z = self._check(z)
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        if self.kind == "logistic":
            return 0.5 * (1.0 + np.tanh(0.5 * z))
        if self.kind == "tanh":
            return np.tanh(z)
        return np.minimum(np.maximum(z, self.mu), self.nu)

    def slope(self, z):
        z = self._check(z)
        if self.kind == "relu":
            return (z > 0).astype(float)
        if self.kind == "logistic":
            s = 0.5 * (1.0 + np.tanh(0.5 * z))
            return s * (1.0 - s)
        if self.kind == "tanh":
            return 1.0 - np.tanh(z) ** 2
        return ((z > self.mu) & (z < self.nu)).astype(float)

    def slope_spans_unit_interval(self) -> bool:
        """True when inf slope = 0 and sup slope = 1."""
        if self.kind == "logistic":
            return False
        if self.kind == "saturation":
            return bool(np.all(self.mu < self.nu))
        return True

    def targeted_points(self, masks, rng) -> np.ndarray:
        """Inputs with unit slope where ``masks`` is True and zero slope elsewhere."""
        masks = np.asarray(masks, dtype=bool)
        u = rng.uniform(0.25, 0.75, size=masks.shape)
        if self.kind == "relu":
            return np.where(masks, u, -u)
        if self.kind == "tanh":
            return np.where(masks, 0.0, np.where(rng.random(masks.shape) < 0.5, -40.0, 40.0))
        if self.kind == "saturation":
            width = self.nu - self.mu
            inside = self.mu + u * width
            below = rng.random(masks.shape) < 0.5
            outside = np.where(below, self.mu - 1.0 - u, self.nu + 1.0 + u)
            return np.where(masks, inside, outside)
        raise UnsupportedActivation(f"{self.kind} has no unit-slope region")


def activation_apply(a: Activation, z):
    return a(z)


def activation_slope(a: Activation, z):
    return a.slope(z)


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """FNN ``x' = -x + Phi(W x + u)`` or HNN ``x' = -x + W Phi(x) + u``."""

    model: str
    W: np.ndarray
    u: np.ndarray
    activation: Activation = field(default_factory=lambda: Activation("relu"))

    def __post_init__(self):
        model = getattr(self.model, "value", self.model).upper()
        if model not in ("FNN", "HNN"):
            raise ValueError(f"model must be FNN or HNN, got {self.model!r}")
        object.__setattr__(self, "model", model)
        W = symmetric(self.W)
        u = np.asarray(self.u, dtype=float)
        if u.shape != (W.shape[0],):
            raise DimensionMismatch(f"stimulus of shape {u.shape} for n={W.shape[0]}")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    def field(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionMismatch(f"state of length {x.shape[-1]} for n={self.n}")
        if self.model == "FNN":
            return -x + self.activation(x @ self.W.T + self.u)
        return -x + self.activation(x) @ self.W.T + self.u

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self.model == "FNN":
            d = self.activation.slope(self.W @ x + self.u)
            return -np.eye(self.n) + d[:, None] * self.W
        d = self.activation.slope(x)
        return -np.eye(self.n) + self.W * d[None, :]


def vector_field(m: NetworkModel, x):
    return m.field(x)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    step: float
    method: str = "rk4"

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def rk4_step(f, x, h, k1=None):
    if k1 is None:
        k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _num_steps(step: float, horizon: float) -> int:
    if not 0.0 < step <= MAX_STEP:
        raise ValueError(f"step must lie in (0, {MAX_STEP}], got {step}")
    if horizon < step:
        raise ValueError(f"horizon {horizon} is shorter than one step {step}")
    return int(math.ceil(horizon / step - 1e-9))


def integrate(m: NetworkModel, x0, step: float = DEFAULT_STEP, horizon: float = 10.0) -> Trajectory:
    """Classical fourth-order Runge-Kutta with a fixed step.

    ``x0`` may also be a stack of initial states of shape ``(k, n)``; they are
    advanced together and ``states`` then has shape ``(steps + 1, k, n)``.
    """
    x = np.array(x0, dtype=float)
    if x.shape[-1] != m.n:
        raise DimensionMismatch(f"initial state of length {x.shape[-1]} for n={m.n}")
    steps = _num_steps(step, horizon)
    states = np.empty((steps + 1,) + x.shape)
    states[0] = x
    for k in range(steps):
        with np.errstate(over="ignore", invalid="ignore"):
            x = rk4_step(m.field, x, step)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"state became non-finite at t={(k + 1) * step:g}")
        states[k + 1] = x
    return Trajectory(times=step * np.arange(steps + 1), states=states, step=step)


@dataclass(frozen=True)
class ContractionMeasurement:
    empirical_rate: float
    max_ratio: float
    certified_rate: float
    violation: bool
    distances: np.ndarray = field(repr=False)


def measure_contraction(
    m: NetworkModel,
    cert,
    x0,
    y0,
    step: float = DEFAULT_STEP,
    horizon: float = 10.0,
    tol_dyn: float = TOL_DYN,
) -> ContractionMeasurement:
    """Compare two trajectories against the certified rate in the certificate norm.

    ``empirical_rate`` is ``sup_t (1/t) ln(delta(t)/delta(0))``; ``max_ratio``
    is ``sup_t delta(t) / (delta(0) exp(-c t))``. A violation is flagged when
    either exceeds its allowance (``-c + tol_dyn`` and ``1 + tol_dyn``).
    """
    weight: NormWeight = getattr(cert, "weight", cert)
    rate = float(getattr(cert, "rate", 0.0))
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if np.array_equal(x0, y0):
        raise ValueError("initial states must differ")
    traj = integrate(m, np.stack([x0, y0]), step, horizon)
    diff = traj.states[:, 0, :] - traj.states[:, 1, :]
    delta = np.linalg.norm(diff @ weight.Q.T, axis=1)
    t = traj.times
    ratios = delta / (delta[0] * np.exp(-rate * t))
    pos = (t > 0) & (delta > 0)
    emp = float(np.max(np.log(delta[pos] / delta[0]) / t[pos])) if np.any(pos) else -math.inf
    max_ratio = float(np.max(ratios))
    violation = emp > -rate + tol_dyn or max_ratio > 1.0 + tol_dyn
    return ContractionMeasurement(
        empirical_rate=emp,
        max_ratio=max_ratio,
        certified_rate=rate,
        violation=bool(violation),
        distances=delta,
    )
