"""Heston stochastic volatility for a pair under the pseudo-currency measures.

Under Q^X: d log sqrt(f) = (r_q - r_b)/2 dt + sqrt(v)/2 (sqrt(1-rho^2) dW1 + rho dW2),
dv = kappa (theta - v) dt + delta sqrt(v) dW2, r_X = (r_q + r_b)/2 + v/8.
Options are priced by simulating the two pseudo-forwards under the T-forward
measure whose numeraire is the pseudo-bond P_X(t, T).
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels, threads
from .errors import DomainError
from .gk_closed_form import implied_vol, vega
from .numeraire import check_no_arbitrage_ratio


@dataclass(frozen=True)
class HestonParams:
    v0: float
    kappa: float
    theta: float
    delta: float
    rho: float
    f0: float
    r_quote: float
    r_base: float
    T: float

    def __post_init__(self):
        if not (self.v0 > 0 and self.kappa > 0 and self.theta > 0 and self.delta > 0):
            raise DomainError("v0, kappa, theta and delta must be positive")
        if not -1.0 < self.rho < 1.0:
            raise DomainError("rho must lie in (-1, 1)")
        if not (self.f0 > 0 and self.T > 0):
            raise DomainError("spot and maturity must be positive")
        _, c = affine_AC(self, self.T)
        if not self.kappa / self.delta ** 2 > c:
            raise DomainError("kappa / delta^2 must exceed C(t) on [0, T]")

    @property
    def beta(self):
        return math.sqrt(self.kappa ** 2 + self.delta ** 2 / 4.0)

    @property
    def forward(self):
        return self.f0 * math.exp((self.r_quote - self.r_base) * self.T)

    def feller(self):
        return 2.0 * self.kappa * self.theta >= self.delta ** 2


@dataclass(frozen=True)
class McControls:
    n_paths: int
    h: float
    seed: int = 12345
    antithetic: bool = True

    def __post_init__(self):
        if self.n_paths < 2 or (self.antithetic and self.n_paths % 2):
            raise DomainError("n_paths must be >= 2 (and even with antithetic pairs)")
        if not self.h > 0:
            raise DomainError("step must be positive")

    def grid(self, T):
        """(n_steps, step) of the uniform grid with step at most h."""
        if self.h > T * (1 + 1e-12):
            raise DomainError("step exceeds maturity")
        n = max(1, math.ceil(T / self.h - 1e-9))
        return n, T / n


def affine_AC(p, tau):
    """(A(tau), C(tau)) of the pseudo-bond, in cancellation-free form."""
    tau = np.asarray(tau, dtype=np.float64)
    k, d2 = p.kappa, p.delta ** 2
    b = math.sqrt(k * k + d2 / 4.0)
    eps = (d2 / 4.0) / (b + k)
    one_m_e = -np.expm1(-b * tau)
    e = 1.0 - one_m_e
    C = 0.25 * one_m_e / ((b + k) + eps * e)
    A = (2.0 * k * p.theta / d2) * (-0.5 * eps * tau - np.log1p(-eps * one_m_e / (2.0 * b)))
    if A.ndim == 0:
        return float(A), float(C)
    return A, C


def c_limit(p):
    """sup over tau of C(tau)."""
    return 0.25 / (p.beta + p.kappa)


def bond_price(p, t, v_t):
    """P_X(t, T)."""
    tau = p.T - t
    A, C = affine_AC(p, tau)
    return np.exp(-0.5 * (p.r_quote + p.r_base) * tau + A - C * v_t)


def initial_forwards(p):
    """(F_base/X(0, T), F_quote/X(0, T))."""
    P0 = float(bond_price(p, 0.0, p.v0))
    sf = math.sqrt(p.f0)
    return math.exp(-p.r_base * p.T) * sf / P0, math.exp(-p.r_quote * p.T) / (P0 * sf)


def _step_coefficients(p, n, h, kappa, theta_fn):
    k = np.asarray(kappa, dtype=np.float64)
    emr = np.exp(-k * h)
    tt = theta_fn(k)
    d2 = p.delta ** 2
    va = d2 * emr * (1.0 - emr) / k
    vb = tt * d2 * (1.0 - emr) ** 2 / (2.0 * k)
    return emr, tt, va, vb


@dataclass
class ForwardEnsemble:
    """Terminal pseudo-forwards; at maturity F_base/X = sqrt f(T), F_quote/X = 1/sqrt f(T)."""

    fb: np.ndarray
    fq: np.ndarray
    v_T: np.ndarray
    v_min: np.ndarray
    fb0: float
    fq0: float
    antithetic: bool

    def units(self, x):
        """Per-unit iid samples; antithetic pairs are averaged."""
        x = np.asarray(x)
        return 0.5 * (x[0::2] + x[1::2]) if self.antithetic else x


def simulate_forwards(p, mc):
    """Log-Euler forwards with moment-matched lognormal variance steps."""
    n, h = mc.grid(p.T)
    t = h * np.arange(n)
    _, C = affine_AC(p, p.T - t)
    C = np.atleast_1d(C)
    k = p.kappa + C * p.delta ** 2
    emr, tt, va, vb = _step_coefficients(p, n, h, k, lambda k: p.kappa * p.theta / k)
    kb2 = np.ascontiguousarray(0.5 * p.rho + p.delta * C)
    kq2 = np.ascontiguousarray(-0.5 * p.rho + p.delta * C)
    ab1 = 0.5 * math.sqrt(1.0 - p.rho ** 2)
    xb, xq, vT, vmin = kernels.heston_qt_paths(
        p.v0, kb2, kq2, ab1, emr, tt, va, vb, h, mc.n_paths, mc.seed, mc.antithetic, threads())
    fb0, fq0 = initial_forwards(p)
    return ForwardEnsemble(fb0 * np.exp(xb), fq0 * np.exp(xq), np.asarray(vT),
                           np.asarray(vmin), fb0, fq0, mc.antithetic)


@dataclass
class QxEnsemble:
    sqrt_f: np.ndarray
    discount: np.ndarray
    v_T: np.ndarray
    v_min: np.ndarray
    antithetic: bool

    def units(self, x):
        x = np.asarray(x)
        return 0.5 * (x[0::2] + x[1::2]) if self.antithetic else x


def simulate_qx(p, mc):
    """Paths under Q^X with pathwise discount D_X = exp(-int r_X), trapezoid in v."""
    n, h = mc.grid(p.T)
    emr, tt, va, vb = _step_coefficients(p, n, h, np.full(n, p.kappa), lambda k: np.full(n, p.theta))
    y, integ, vT, vmin = kernels.heston_qx_paths(
        p.v0, 0.5 * (p.r_quote - p.r_base), 0.5 * math.sqrt(1.0 - p.rho ** 2), 0.5 * p.rho,
        emr, tt, va, vb, h, 0.5 * (p.r_quote + p.r_base), mc.n_paths, mc.seed,
        mc.antithetic, threads())
    return QxEnsemble(math.sqrt(p.f0) * np.exp(y), np.exp(-np.asarray(integ)),
                      np.asarray(vT), np.asarray(vmin), mc.antithetic)


def mean_se(x):
    x = np.asarray(x)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.shape[0]))


def ratio_se(a, b):
    """mean(a) / mean(b) with its delta-method standard error."""
    a = np.asarray(a)
    b = np.asarray(b)
    ma, mb = a.mean(), b.mean()
    r = ma / mb
    n = a.shape[0]
    resid = a - r * b
    return float(r), float(resid.std(ddof=1) / (math.sqrt(n) * abs(mb)))


def _strikes(K):
    return np.atleast_1d(np.asarray(K, dtype=np.float64))


def price_call_quote(p, K, mc=None, ens=None):
    """Quote-currency call prices and standard errors, shared paths across strikes."""
    ens = simulate_forwards(p, mc) if ens is None else ens
    disc = math.exp(-p.r_quote * p.T)
    den = ens.units(ens.fq)
    out = [ratio_se(ens.units(np.maximum(ens.fb - k * ens.fq, 0.0)), den) for k in _strikes(K)]
    pr = disc * np.array([o[0] for o in out])
    se = disc * np.array([o[1] for o in out])
    return (pr[0], se[0]) if np.ndim(K) == 0 else (pr, se)


def price_put_quote(p, K, mc=None, ens=None):
    ens = simulate_forwards(p, mc) if ens is None else ens
    disc = math.exp(-p.r_quote * p.T)
    den = ens.units(ens.fq)
    out = [ratio_se(ens.units(np.maximum(k * ens.fq - ens.fb, 0.0)), den) for k in _strikes(K)]
    pr = disc * np.array([o[0] for o in out])
    se = disc * np.array([o[1] for o in out])
    return (pr[0], se[0]) if np.ndim(K) == 0 else (pr, se)


def price_call_base(p, K, mc=None, ens=None):
    """Call on the inverse pair with strike 1/K, priced in base currency."""
    ens = simulate_forwards(p, mc) if ens is None else ens
    disc = math.exp(-p.r_base * p.T)
    den = ens.units(ens.fb)
    out = [ratio_se(ens.units(np.maximum(ens.fq - ens.fb / k, 0.0)), den) for k in _strikes(K)]
    pr = disc * np.array([o[0] for o in out])
    se = disc * np.array([o[1] for o in out])
    return (pr[0], se[0]) if np.ndim(K) == 0 else (pr, se)


def price_put_base(p, K, mc=None, ens=None):
    """Put on the inverse pair with strike 1/K, priced in base currency."""
    ens = simulate_forwards(p, mc) if ens is None else ens
    disc = math.exp(-p.r_base * p.T)
    den = ens.units(ens.fb)
    out = [ratio_se(ens.units(np.maximum(ens.fb / k - ens.fq, 0.0)), den) for k in _strikes(K)]
    pr = disc * np.array([o[0] for o in out])
    se = disc * np.array([o[1] for o in out])
    return (pr[0], se[0]) if np.ndim(K) == 0 else (pr, se)


def price_call_quote_qx(p, K, mc=None, ens=None):
    """Quote-currency call from Q^X paths with pathwise discounting."""
    ens = simulate_qx(p, mc) if ens is None else ens
    sf = math.sqrt(p.f0)
    pr, se = [], []
    for k in _strikes(K):
        m, s = mean_se(ens.units(ens.discount * np.maximum(ens.sqrt_f - k / ens.sqrt_f, 0.0)))
        pr.append(sf * m)
        se.append(sf * s)
    pr, se = np.array(pr), np.array(se)
    return (pr[0], se[0]) if np.ndim(K) == 0 else (pr, se)


def _otm_vols(f0, K, T, r_quote, r_base, calls, puts, se_c, se_p, F):
    vols, ses = [], []
    for k, c, pu, sc, sp in zip(K, calls, puts, se_c, se_p):
        kind, price, se = ("call", c, sc) if k >= F else ("put", pu, sp)
        s = implied_vol(price, f0, k, T, r_quote, r_base, kind)
        vols.append(s)
        ses.append(se / float(vega(f0, k, T, s, r_quote, r_base)))
    return np.array(vols), np.array(ses)


def implied_vols_quote(p, K, mc=None, ens=None):
    """Implied vols on the quote market at strikes K, with MC standard errors."""
    ens = simulate_forwards(p, mc) if ens is None else ens
    K = _strikes(K)
    c, sc = price_call_quote(p, K, ens=ens)
    pu, sp = price_put_quote(p, K, ens=ens)
    return _otm_vols(p.f0, K, p.T, p.r_quote, p.r_base, c, pu, sc, sp, p.forward)


def implied_vols_base(p, K, mc=None, ens=None):
    """Implied vols of the inverse pair at strikes 1/K, priced on the base market."""
    ens = simulate_forwards(p, mc) if ens is None else ens
    K = _strikes(K)
    c, sc = price_call_base(p, K, ens=ens)
    pu, sp = price_put_base(p, K, ens=ens)
    return _otm_vols(1.0 / p.f0, 1.0 / K, p.T, p.r_base, p.r_quote, c, pu, sc, sp, 1.0 / p.forward)


def no_arbitrage_check(p, ens):
    """Deviation of E[sqrt f(T)] / E[1/sqrt f(T)] from the forward, and its SE."""
    ratio, se = ratio_se(ens.units(ens.fb), ens.units(ens.fq))
    diag = check_no_arbitrage_ratio(ratio, 1.0, p.f0, p.r_quote, p.r_base, p.T)
    return diag, se / diag.target
