import sys

import numpy as np
import pytest


def random_symmetric(rng, n, scale=1.0):
    G = rng.standard_normal((n, n))
    return scale * 0.5 * (G + G.T)


def with_spectrum(rng, lam):
    """Symmetric matrix with the given eigenvalues and a random eigenbasis."""
    lam = np.asarray(lam, dtype=float)
    U, _ = np.linalg.qr(rng.standard_normal((lam.size, lam.size)))
    W = (U * lam) @ U.T
    return 0.5 * (W + W.T)


def random_spd(rng, n, floor=0.5):
    G = rng.standard_normal((n, n))
    return G @ G.T + floor * np.eye(n)


def random_spectrum(rng, n, top, low=-2.0):
    """``n`` eigenvalues with maximum exactly ``top``, all bounded away from 0."""
    rest = rng.uniform(low, top, size=n - 1)
    rest = np.where(np.abs(rest) < 0.05, np.sign(rest + 1e-300) * 0.05 + rest, rest)
    rest = np.minimum(rest, top)
    return np.concatenate([[top], rest])


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def pytest_terminal_summary(terminalreporter):
    # echo the one-line verdicts of the acceptance gate after the run
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
