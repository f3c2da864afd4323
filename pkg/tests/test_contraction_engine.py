import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import random_spectrum, with_spectrum
from contracert.contraction_engine import (
    Case,
    Model,
    block_lognorm_bound,
    build_gain_matrix,
    build_subspace_split,
    certify,
    certify_fnn,
    certify_hnn,
    composite_weight,
    lyapunov_negative,
    tightness_probe,
)
from contracert.errors import DegenerateRate, NoKernel, NotHurwitz, SingularW, UnsupportedActivation
from contracert.linalg_core import NormWeight, WeightKind, is_hurwitz, lognorm_batch, sym_eig
from contracert.network_dynamics import Activation
from contracert.polytope_norms import Verdict

SQRT3 = math.sqrt(3.0)


def singular_W(rng, n, k, alpha):
    """Random W with a k-dimensional kernel and top eigenvalue ``alpha``."""
    lam = np.zeros(n)
    if n - k:
        lam[: n - k] = np.concatenate([[alpha], rng.uniform(-2.0, alpha, n - k - 1)]) if alpha > 0 else -rng.uniform(0.2, 2.0, n - k)
    return with_spectrum(rng, lam)


def jacobian_stack(W, model, D):
    n = W.shape[0]
    if model is Model.FNN:
        return D[:, :, None] * W[None] - np.eye(n)
    return W[None] * D[:, None, :] - np.eye(n)


class TestCertifyFnn:
    def test_alpha_in_unit_interval(self):
        c = certify_fnn(np.diag([0.5, -1.0]))
        assert c.case is Case.ALPHA_IN_01
        assert c.rate == 0.5
        assert c.weight.label == "QF(0.5)"
        assert_allclose(c.weight.Q, np.diag([1.0, 1 + SQRT3]), atol=1e-14)
        assert c.verification.verdict is Verdict.CONTRACTING
        assert c.verification.max_vertex_lognorm == pytest.approx(-0.5, abs=1e-12)
        assert c.optimality.verdict is Verdict.LOG_OPTIMAL

    def test_negative_identity(self):
        c = certify_fnn(-np.eye(3))
        assert c.case is Case.ALPHA_NEG and c.rate == 1.0
        assert_allclose(c.weight.Q, np.eye(3), atol=1e-15)

    def test_weak(self):
        c = certify_fnn(np.diag([1.0, 0.2]))
        assert c.case is Case.ALPHA_ONE and c.rate == 0.0 and c.weak
        assert c.verification.verdict is Verdict.CONTRACTING

    def test_zero_abscissa(self):
        c = certify_fnn(np.diag([0.0, -1.0]), eps=0.05)
        assert c.case is Case.ALPHA_ZERO_EPS
        assert c.rate == pytest.approx(0.95) and c.epsilon == 0.05
        assert c.weight.b == 0.05

    def test_default_eps(self):
        assert certify_fnn(np.zeros((2, 2))).rate == pytest.approx(0.999)

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            certify_fnn(np.zeros((2, 2)), eps=1.5)

    def test_expansive(self):
        with pytest.raises(DegenerateRate):
            certify_fnn(np.diag([1.5, 0.0]))

    def test_osl_bound(self):
        assert certify_fnn(np.diag([0.25, -1.0])).osl_bound == -0.75

    @pytest.mark.parametrize("top", [-1.3, -0.2, 0.1, 0.6, 0.95])
    def test_random_cases_verify(self, rng, top):
        for n in range(2, 7):
            W = with_spectrum(rng, random_spectrum(rng, n, top, low=-3.0))
            c = certify_fnn(W)
            assert c.verification.verdict is Verdict.CONTRACTING
            assert c.rate == pytest.approx(min(1.0, 1.0 - top), abs=1e-10)


class TestCertifyHnn:
    def test_scalar(self):
        c = certify_hnn(np.diag([0.5]))
        assert c.rate == 0.5 and c.case is Case.ALPHA_IN_01
        assert_allclose(c.weight.Q, [[2.0]])

    def test_indefinite_weight(self):
        c = certify_hnn(np.diag([0.5, -1.0]))
        assert_allclose(c.weight.Q, np.diag([2.0, -(1 + SQRT3)]), atol=1e-14)
        assert c.verification.verdict is Verdict.CONTRACTING

    def test_scaled_negative_identity(self):
        # any multiple of I is an equally good weight here
        c = certify_hnn(-2.0 * np.eye(2))
        assert c.case is Case.ALPHA_NEG and c.rate == 1.0
        assert_allclose(c.weight.Q, np.eye(2) / math.sqrt(2.0), atol=1e-15)
        assert c.weight.kind is WeightKind.NEG_W_INV_SQRT

    def test_negative_definite_random(self, rng):
        for n in range(2, 7):
            W = with_spectrum(rng, -rng.uniform(0.1, 3.0, n))
            c = certify_hnn(W)
            assert c.verification.verdict is Verdict.CONTRACTING
            assert c.verification.max_vertex_lognorm <= -1.0 + 1e-9

    def test_singular_kernel(self):
        c = certify_hnn(np.diag([0.5, 0.0]))
        assert c.case is Case.SINGULAR_KERNEL
        assert_allclose(c.gain.Gamma, [[-1.0, 0.0], [0.5, -0.5]])
        assert c.rate == pytest.approx(0.5 - c.epsilon)
        assert c.epsilon == pytest.approx(0.05)
        assert c.verification.verdict is Verdict.CONTRACTING

    def test_zero_matrix(self):
        c = certify_hnn(np.zeros((3, 3)))
        assert c.case is Case.SINGULAR_KERNEL and c.rate == 1.0
        assert c.weight.kind is WeightKind.IDENTITY

    def test_singular_negative_semidefinite(self, rng):
        W = singular_W(rng, 4, 1, 0.0)
        c = certify_hnn(W, eps=0.1)
        assert c.case is Case.SINGULAR_KERNEL
        assert c.rate == pytest.approx(0.9)
        assert c.verification.verdict is Verdict.CONTRACTING

    @pytest.mark.parametrize("k", [1, 2])
    def test_singular_random(self, rng, k):
        for n in range(k + 1, 7):
            alpha = float(rng.uniform(0.05, 0.95))
            W = singular_W(rng, n, k, alpha)
            c = certify_hnn(W)
            assert c.verification.verdict is Verdict.CONTRACTING
            assert c.rate == pytest.approx(1 - alpha - c.epsilon, abs=1e-10)

    def test_singular_at_unit_abscissa(self):
        with pytest.raises(DegenerateRate):
            certify_hnn(np.diag([1.0, 0.0]))

    def test_invertible_weak(self):
        c = certify_hnn(np.diag([1.0, -0.5]))
        assert c.case is Case.ALPHA_ONE and c.weak

    def test_dispatch(self):
        assert certify(np.diag([0.5, -1.0]), "fnn").model is Model.FNN
        assert certify(np.diag([0.5, -1.0]), Model.HNN).model is Model.HNN


class TestSubspaceSplit:
    def test_diag(self):
        s = build_subspace_split(sym_eig(np.diag([0.5, 0.0])))
        assert (s.n_par, s.n_perp) == (1, 1)
        assert_allclose(s.Lambda_par, [0.5])
        assert_allclose(s.theta_par, [1.0])

    def test_zero(self):
        s = build_subspace_split(np.zeros((3, 3)))
        assert (s.n_par, s.n_perp) == (0, 3)

    def test_rank_one_projector(self, rng):
        u = rng.standard_normal(4)
        u /= np.linalg.norm(u)
        s = build_subspace_split(np.outer(u, u))
        assert s.n_par == 1
        assert_allclose(s.Lambda_par, [1.0], atol=1e-12)
        assert_allclose(np.abs(s.U_par[:, 0]), np.abs(u), atol=1e-10)

    def test_invertible(self):
        with pytest.raises(NoKernel):
            build_subspace_split(np.eye(2))

    def test_orthogonality(self, rng):
        s = build_subspace_split(singular_W(rng, 5, 2, 0.4))
        U = np.hstack([s.U_par, s.U_perp])
        assert_allclose(U.T @ U, np.eye(5), atol=1e-12)


class TestGainMatrix:
    def test_eigenvalues(self):
        g = build_gain_matrix(0.5)
        assert_allclose(np.sort(np.linalg.eigvals(g.Gamma).real), [-1.0, -0.5])
        assert g.alpha_gamma == -0.5
        assert_allclose(np.linalg.eigvals(build_gain_matrix(0.0).Gamma).real, [-1.0, -1.0])

    def test_closed_form_abscissa(self, rng):
        for a in rng.uniform(0.0, 0.99, 50):
            ok, ab = is_hurwitz(build_gain_matrix(a).Gamma)
            assert ok and ab == -1.0 + a

    def test_lyapunov_weights(self):
        g = build_gain_matrix(0.9)
        assert lyapunov_negative(g.eta, g.Gamma)
        assert not lyapunov_negative(g.eta, np.array([[0.0, 0.0], [1.0, -1.0]]))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.0, 0.99), st.floats(0.01, 0.99), st.floats(0.0, 5.0))
    def test_shifted_lyapunov(self, alpha, frac, L):
        # diag(eta)(Gamma_L + c I) + (.)^T stays negative semidefinite at c = 1 - alpha - eps
        eps = frac * (1 - alpha)
        g = build_gain_matrix(alpha, eps, L)
        G = np.array([[-1.0, 0.0], [L, -1.0 + alpha]]) + (1 - alpha - eps) * np.eye(2)
        E = np.diag(g.eta)
        M = E @ G + G.T @ E
        assert np.linalg.eigvalsh(M)[-1] <= 1e-12 * max(1.0, np.abs(M).max())

    def test_not_hurwitz(self):
        with pytest.raises(NotHurwitz):
            build_gain_matrix(1.0)

    def test_eps_range(self):
        with pytest.raises(ValueError):
            build_gain_matrix(0.5, eps=0.6)


class TestBlockBound:
    @pytest.mark.parametrize("alpha", [0.0, 0.3, 0.8])
    def test_bound(self, rng, alpha):
        for n in range(2, 7):
            s = build_subspace_split(singular_W(rng, n, 1, alpha))
            assert block_lognorm_bound(s) <= -1.0 + alpha + 1e-7

    def test_composite_weight_matches_blocks(self, rng):
        W = singular_W(rng, 4, 1, 0.5)
        s = build_subspace_split(W)
        eta = (1.0, 0.3)
        Q = composite_weight(s, eta).Q
        x = rng.standard_normal(4)
        xp, xk = s.U_par.T @ x, s.U_perp.T @ x
        expected = eta[0] * xk @ xk + eta[1] * np.sum((s.Q_Hpar @ xp) ** 2)
        assert np.sum((Q @ x) ** 2) == pytest.approx(expected, rel=1e-12)


class TestVerificationOracle:
    """Certificates against a dense grid of interior slopes, not only vertices."""

    @pytest.mark.parametrize("model", list(Model))
    def test_interior_slopes(self, rng, model):
        for top in (-0.7, 0.0, 0.5):
            n = 4
            if model is Model.HNN and top == 0.0:
                W = singular_W(rng, n, 1, 0.0)
            else:
                W = with_spectrum(rng, random_spectrum(rng, n, top))
            c = certify(W, model)
            D = rng.uniform(0, 1, size=(500, n))
            mu = lognorm_batch(jacobian_stack(W, model, D), c.weight)
            assert np.max(mu) <= -c.rate + 1e-9


class TestTightness:
    def test_mixed_relu(self):
        r = tightness_probe(np.diag([0.5, -1.0]), "relu")
        assert r.gap <= 0.05 and r.gap >= -1e-7
        assert r.bound == -0.5

    def test_negative_identity_relu(self):
        r = tightness_probe(-np.eye(3), Activation("relu"))
        assert abs(r.estimated_osl + 1.0) <= 0.05

    def test_hnn(self, rng):
        W = with_spectrum(rng, [0.4, -0.3, -1.2])
        r = tightness_probe(W, "tanh", model="hnn", seed=3)
        assert -1e-7 <= r.gap <= 0.05

    def test_rejects_logistic(self):
        with pytest.raises(UnsupportedActivation):
            tightness_probe(np.diag([0.5, -1.0]), "logistic")

    def test_rejects_singular(self):
        with pytest.raises(SingularW):
            tightness_probe(np.diag([0.5, 0.0]), "relu")

    def test_weaker_weight_gives_gap(self):
        r = tightness_probe(np.diag([0.5, -1.0]), "relu", weight=NormWeight.identity(2))
        assert r.estimated_osl >= -0.5 - 1e-12
