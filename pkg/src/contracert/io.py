"""File formats: matrix / QP JSON in, certificate / report / solution JSON and
trajectory CSV out. Reals are written with 17 significant digits so that
re-parsing reproduces them bit for bit."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import NotSymmetric, ParseError
from .linalg_core import symmetric

SYMMETRY_TOL = 1e-9


def fmt_real(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float rendered by :func:`fmt_real`."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_real(obj)
    return json.dumps(str(obj))


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top-level JSON value must be an object")
    return data


def real_list(data: dict, key: str, length: int, where: str) -> np.ndarray:
    if key not in data:
        raise ParseError(f"{where}: missing field '{key}'")
    raw = data[key]
    if not isinstance(raw, list) or len(raw) != length:
        raise ParseError(f"{where}: field '{key}' must be an array of {length} numbers")
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: field '{key}' contains a non-numeric entry") from exc
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{where}: field '{key}' contains a non-finite entry")
    return arr


def _dimension(data: dict, where: str) -> int:
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError(f"{where}: field 'n' must be a positive integer")
    return n


def matrix_from_dict(data: dict, where: str = "<matrix>", key: str = "data") -> np.ndarray:
    n = _dimension(data, where)
    M = real_list(data, key, n * n, where).reshape(n, n)
    scale = max(1.0, float(np.max(np.abs(M))))
    gap = float(np.max(np.abs(M - M.T)))
    # a few ulps of slack: decimal inputs one tolerance apart round to just above it
    if gap > (SYMMETRY_TOL + 8 * np.finfo(float).eps) * scale:
        raise NotSymmetric(f"{where}: matrix is not symmetric (max |M - M^T| = {gap:.3e})")
    return symmetric(M)


def parse_matrix_json(path) -> np.ndarray:
    """Read ``{"n": n, "data": [n*n reals, row-major]}`` into a symmetric matrix."""
    return matrix_from_dict(load_json(path), str(path))


def parse_qp_json(path):
    """Read ``{"n", "A" (row-major), "u", "mu", "nu"}`` into a :class:`QpProblem`."""
    from .qp_box_solver import QpProblem

    data = load_json(path)
    where = str(path)
    n = _dimension(data, where)
    A = matrix_from_dict(data, where, key="A")
    vecs = [real_list(data, k, n, where) for k in ("u", "mu", "nu")]
    return QpProblem(A, *vecs)


def weight_to_dict(weight) -> dict:
    return {"label": weight.label, "n": weight.n, "entries": weight.Q.reshape(-1).tolist()}


def certificate_to_dict(cert) -> dict:
    return {
        "model": cert.model.value,
        "case": cert.case.value,
        "rate": cert.rate,
        "alpha_W": cert.alpha_W,
        "epsilon": cert.epsilon,
        "weight": weight_to_dict(cert.weight),
        "verification": cert.verification.to_dict(),
    }


def weight_from_certificate(data: dict) -> np.ndarray:
    w = data["weight"]
    n = int(w["n"])
    return np.array(w["entries"], dtype=float).reshape(n, n)


def solution_to_dict(sol) -> dict:
    return {
        "x": sol.x_star.tolist(),
        "objective": sol.objective,
        "kkt_residual": sol.kkt_residual,
        "rate": sol.rate,
        "steps": sol.iterations,
    }


def write_text(text: str, path=None) -> None:
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def write_trajectory_csv(traj, path) -> None:
    """CSV with header ``t,x1,...,xn`` and one row per step."""
    if hasattr(path, "write"):
        _write_rows(traj, path)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(traj, fh)


def _write_rows(traj, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(traj.states.shape[-1])])
    for t, x in zip(traj.times, traj.states):
        w.writerow([fmt_real(t)] + [fmt_real(v) for v in x])


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    body = np.array(rows[1:], dtype=float)
    return body[:, 0], body[:, 1:]
