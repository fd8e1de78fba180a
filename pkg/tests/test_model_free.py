import json
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import multivariate_normal, norm

from fxip.errors import DomainError, InconsistentSmilesError
from fxip.gk_closed_form import gk_call, gk_put
from fxip.market_data import anchor_strikes, forward_rate
from fxip.model_free import (SmileCurve, TriangleMarket, U, U_fd, U_inf1, U_inf2,
                             basket_put_c1, basket_put_c3, best_of_value,
                             scaled_joint_density, single_pair_density)

S1, S2, RHO = 0.10, 0.09, 0.4
S3 = math.sqrt(S1 ** 2 + S2 ** 2 - 2 * RHO * S1 * S2)


def flat(sigma, T=1.0, lo=1e-3, hi=1e3):
    return SmileCurve(0.0, 0.0, math.exp(sigma * sigma), lo, hi, T)


@pytest.fixture(scope="module")
def flat_tri():
    return TriangleMarket(flat(S1), flat(S2), flat(S3), 1.29, 0.8946, 0.0025, 0.0025, 0.0,
                          1.0, ("GBP", "USD", "EUR"), 1.2935)


@pytest.fixture(scope="module")
def market_tri(snapshot):
    return TriangleMarket.from_snapshot(snapshot, "GBP", "USD", "EUR")


def log_params(t):
    """Mean vector and covariance of (log S1, log S2) for flat smiles."""
    s1, s2 = float(t.smile1.vol(1.0)), float(t.smile2.vol(1.0))
    r12 = t.correlations(s1, s2, float(t.smile3.vol(1.0)))[0]
    mu = np.array([math.log(t.F1) - 0.5 * s1 * s1 * t.T, math.log(t.F2) - 0.5 * s2 * s2 * t.T])
    cov = t.T * np.array([[s1 * s1, r12 * s1 * s2], [r12 * s1 * s2, s2 * s2]])
    return mu, cov


def conditional_put_c3(t, w1, w2, K):
    """E[(K - w1 S1 - w2 S2)+] e^{-r3 T} by conditioning on S2 in closed form."""
    mu, cov = log_params(t)
    s2 = math.sqrt(cov[1, 1])
    b = cov[0, 1] / cov[1, 1]
    sc = math.sqrt(cov[0, 0] - b * cov[0, 1])

    def f(y):
        k = K - w2 * math.exp(y)
        if k <= 0:
            return 0.0
        m = mu[0] + b * (y - mu[1])
        fwd = math.exp(m + 0.5 * sc * sc)
        return w1 * float(gk_put(fwd, k / w1, 1.0, sc, 0.0, 0.0)) * norm.pdf(y, mu[1], s2)

    y_hi = math.log(K / w2)
    return math.exp(-t.r3 * t.T) * quad(f, mu[1] - 12 * s2, y_hi, epsabs=1e-15,
                                        epsrel=1e-13, limit=400)[0]


def conditional_put_c1(t, w1, w2, K):
    """s E[(K S1 - w1 - w2 S2)+] e^{-r3 T} by conditioning on S2 in closed form."""
    mu, cov = log_params(t)
    s2 = math.sqrt(cov[1, 1])
    b = cov[0, 1] / cov[1, 1]
    sc = math.sqrt(cov[0, 0] - b * cov[0, 1])

    def f(y):
        m = mu[0] + b * (y - mu[1])
        fwd = math.exp(m + 0.5 * sc * sc)
        strike = (w1 + w2 * math.exp(y)) / K
        return K * float(gk_call(fwd, strike, 1.0, sc, 0.0, 0.0)) * norm.pdf(y, mu[1], s2)

    val = quad(f, mu[1] - 12 * s2, mu[1] + 12 * s2, epsabs=1e-15, epsrel=1e-13, limit=400)[0]
    return math.exp(-t.r3 * t.T) * val / t.spot1


class TestSmileCurve:
    def test_fit_reproduces_anchors(self, snapshot):
        for q in snapshot.pairs:
            c = SmileCurve.from_quote(q)
            np.testing.assert_allclose(c.vol(anchor_strikes(q)), q.vols(), atol=1e-12)

    def test_domain_contains_anchors(self, snapshot):
        for q in snapshot.pairs:
            c = SmileCurve.from_quote(q)
            K = anchor_strikes(q)
            assert c.K_min < K[0] and K[2] < c.K_max

    def test_flat_extrapolation_growth(self, snapshot):
        for q in snapshot.pairs:
            c = SmileCurve.from_quote(q)
            for K in (1e-6, 1e6):
                ratio = float(c.vol(K)) ** 2 * q.T / abs(math.log(K))
                assert ratio < 2.0
            assert float(c.dvol(1e-6)) == 0.0 and float(c.dvol(1e6)) == 0.0

    def test_dvol_matches_fd(self, usdeur):
        c = SmileCurve.from_quote(usdeur)
        K = np.linspace(c.K_min * 1.01, c.K_max * 0.99, 25)
        h = 1e-6
        np.testing.assert_allclose(c.dvol(K), (c.vol(K + h) - c.vol(K - h)) / (2 * h),
                                   rtol=1e-6, atol=1e-8)

    def test_rejects_inadmissible(self):
        with pytest.raises(DomainError):
            SmileCurve(0.0, 0.0, 1.0, 0.5, 2.0, 1.0)
        with pytest.raises(DomainError):
            SmileCurve(0.0, 0.0, 1.1, 2.0, 0.5, 1.0)


class TestSinglePairDensity:
    def test_flat_is_lognormal(self):
        F, rq, T, s = 1.29, 0.01, 1.0, 0.1
        K = np.linspace(0.9, 1.8, 19)
        d = single_pair_density(flat(s), F, rq, T, K)
        pdf = norm.pdf(np.log(K), math.log(F) - 0.5 * s * s, s) / K
        # second-difference roundoff floor is ~eps * price / h^2
        np.testing.assert_allclose(d, math.exp(-rq * T) * pdf, rtol=1e-6, atol=1e-7)

    def test_market_legs_nonnegative(self, usdeur, gbpeur):
        for q in (usdeur, gbpeur):
            c = SmileCurve.from_quote(q)
            K = np.linspace(c.K_min * 1.001, c.K_max * 0.999, 400)
            assert np.all(single_pair_density(c, forward_rate(q), q.r_quote, q.T, K) >= 0)

    def test_stencil_outside_domain(self, usdeur):
        c = SmileCurve.from_quote(usdeur)
        with pytest.raises(DomainError):
            single_pair_density(c, 0.9, 0.0, 1.0, c.K_max)


class TestTriangle:
    def test_cross_forward(self, market_tri, snapshot):
        assert market_tri.F3 == pytest.approx(market_tri.F1 / market_tri.F2, rel=1e-15)
        assert market_tri.spot1 == snapshot.pair("GBP/EUR").spot

    def test_correlations_recover_flat(self, flat_tri):
        r12, r13, r23 = flat_tri.correlations(S1, S2, S3)
        assert r12 == pytest.approx(RHO, rel=1e-13)
        assert -1 < r13 < 1 and -1 < r23 < 1

    def test_correlation_violation(self, flat_tri):
        with pytest.raises(InconsistentSmilesError):
            flat_tri.correlations(0.1, 0.1, 0.25)

    def test_margins_sign(self, market_tri):
        s = market_tri.triangle_margins(market_tri.F1, market_tri.F2)
        assert s > 0


class TestBestOfAndU:
    def test_best_of_vs_monte_carlo(self, flat_tri):
        mu, cov = log_params(flat_tri)
        x = np.exp(np.random.default_rng(17).multivariate_normal(mu, cov, 1_000_000))
        K1, K2 = 1.33, 0.91
        pay = np.maximum(np.maximum(x[:, 0] - K1, 0) / K1, np.maximum(x[:, 1] - K2, 0) / K2)
        se = pay.std() / math.sqrt(pay.size)
        assert abs(pay.mean() - best_of_value(flat_tri, K1, K2)) < 4 * se

    def test_best_of_large_k1(self, flat_tri):
        K2 = 0.9
        lim = float(gk_call(flat_tri.F2, K2, 1.0, S2, 0.0, 0.0)) / K2
        assert best_of_value(flat_tri, 50.0, K2) == pytest.approx(lim, rel=1e-12)

    def test_flat_u_is_joint_cdf(self, flat_tri):
        mu, cov = log_params(flat_tri)
        mvn = multivariate_normal(mu, cov)
        for K1, K2 in ((1.2, 0.85), (1.29, 0.9), (1.4, 0.95)):
            cdf = mvn.cdf([math.log(K1), math.log(K2)])
            assert U(flat_tri, K1, K2) == pytest.approx(cdf - 1.0, abs=1e-7)

    def test_u_marginal_limits(self, flat_tri):
        t = flat_tri
        K2 = np.linspace(0.86, 0.93, 5)
        np.testing.assert_allclose(U(t, 200.0, K2), U_inf1(t, K2), atol=1e-12)
        K1 = np.linspace(1.25, 1.33, 5)
        np.testing.assert_allclose(U(t, K1, 100.0), U_inf2(t, K1), atol=1e-12)

    def test_u_vs_fd_order(self, market_tri):
        t = market_tri
        K1, K2 = t.F1, t.F2
        exact = U(t, K1, K2)
        err = [abs(U_fd(t, K1, K2, h) - exact) for h in (1e-2, 5e-3, 2.5e-3)]
        orders = np.log2(np.array(err[:-1]) / np.array(err[1:]))
        assert np.all(orders >= 1.9)

    def test_swap_symmetry(self):
        tri = TriangleMarket(flat(0.1), flat(0.1), flat(0.08), 1.0, 1.0, 0.0, 0.0, 0.01, 1.0)
        assert U(tri, 1.05, 0.97) == pytest.approx(U(tri, 0.97, 1.05), abs=1e-15)


class TestDensity:
    def test_flat_matches_bivariate_lognormal(self, flat_tri):
        g = scaled_joint_density(flat_tri, n=200)
        mu, cov = log_params(flat_tri)
        G1, G2 = np.meshgrid(g.K1, g.K2, indexing="ij")
        pdf = multivariate_normal(mu, cov).pdf(np.dstack([np.log(G1), np.log(G2)])) / (G1 * G2)
        D = math.exp(flat_tri.r3 * flat_tri.T) * g.D
        assert np.max(np.abs(D - pdf)) < 2e-3 * pdf.max()
        assert g.total_mass() == pytest.approx(1.0, abs=1e-3)
        assert g.negative_count == 0 and g.finite_fraction == 1.0

    def test_qx_density_normalised(self, flat_tri):
        g = scaled_joint_density(flat_tri, n=80)
        q = g.qx_density()
        assert np.trapezoid(np.trapezoid(q, g.K2, axis=1), g.K1) == pytest.approx(1.0, rel=1e-12)

    def test_market_inadmissible_points_masked(self, market_tri):
        g = scaled_joint_density(market_tri, n=50)
        G1, G2 = np.meshgrid(g.K1, g.K2, indexing="ij")
        bad = market_tri.triangle_margins(G1, G2) <= 0
        assert np.all(np.isnan(g.U[bad]))
        assert g.meta["inadmissible_count"] == int(np.sum(~np.isfinite(g.U)))

    def test_csv_and_metadata(self, flat_tri, tmp_path):
        g = scaled_joint_density(flat_tri, n=12)
        g.write_csv(tmp_path / "d.csv")
        g.write_metadata(tmp_path / "d.json")
        raw = np.loadtxt(tmp_path / "d.csv", delimiter=",", skiprows=1)
        np.testing.assert_array_equal(raw[:, 0], g.K1)
        np.testing.assert_array_equal(raw[:, 1:], g.D)
        header = (tmp_path / "d.csv").read_text().splitlines()[0].split(",")
        np.testing.assert_array_equal(np.array(header[1:], dtype=float), g.K2)
        meta = json.loads((tmp_path / "d.json").read_text())
        assert meta["names"] == ["GBP", "USD", "EUR"] and meta["negative_count"] == 0


class TestBaskets:
    @pytest.mark.parametrize("K", [0.9, 1.29, 1.6])
    def test_one_zero_weight_is_vanilla(self, snapshot, market_tri, K):
        t = market_tri
        q1 = snapshot.pair("GBP/EUR")
        for w1 in (1.0, 0.7):
            k = K / w1
            vanilla = w1 * float(gk_put(q1.spot, k, 1.0, float(t.smile1.vol(k)), 0.0, 0.0025))
            assert abs(basket_put_c3(t, w1, 0.0, K) - vanilla) < 1e-8
        k = K * 0.7
        q2 = snapshot.pair("USD/EUR")
        vanilla = float(gk_put(q2.spot, k, 1.0, float(t.smile2.vol(k)), 0.0, 0.0025))
        assert abs(basket_put_c3(t, 0.0, 1 / 0.7, K) - vanilla / 0.7) < 1e-8

    def test_flat_basket_c3(self, flat_tri):
        for w1, w2, K in ((0.5, 0.5, 1.1), (1.0, 0.3, 1.6), (0.2, 1.1, 1.2)):
            ref = conditional_put_c3(flat_tri, w1, w2, K)
            assert basket_put_c3(flat_tri, w1, w2, K) == pytest.approx(ref, rel=1e-8, abs=1e-12)

    def test_flat_basket_c1(self, flat_tri):
        for w1, w2, K in ((0.5, 0.5, 1.0), (0.8, 0.3, 1.2)):
            ref = conditional_put_c1(flat_tri, w1, w2, K)
            assert basket_put_c1(flat_tri, w1, w2, K) == pytest.approx(ref, rel=1e-8)

    def test_c1_small_weight_continuity(self, flat_tri):
        a = basket_put_c1(flat_tri, 0.6, 0.0, 1.0)
        b = basket_put_c1(flat_tri, 0.6, 1e-9, 1.0)
        assert b == pytest.approx(a, rel=1e-6)

    def test_degenerate(self, flat_tri):
        assert basket_put_c3(flat_tri, 0.5, 0.5, 0.0) == 0.0
        assert basket_put_c3(flat_tri, 0.5, 0.5, 1e-6) < 1e-12
        with pytest.raises(DomainError):
            basket_put_c3(flat_tri, 0.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            basket_put_c1(flat_tri, -1.0, 0.5, 1.0)

    def test_monotone_in_strike(self, flat_tri):
        v = [basket_put_c3(flat_tri, 0.5, 0.5, K) for K in (0.9, 1.0, 1.1, 1.2)]
        assert np.all(np.diff(v) > 0)
