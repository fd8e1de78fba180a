"""SABR with beta = 1 under Q^X, priced with pathwise pseudo-currency discounting."""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels, threads
from .errors import DomainError
from .heston_qxt import McControls, mean_se, ratio_se
from .numeraire import check_no_arbitrage_ratio

__all__ = ["SabrParams", "McControls", "simulate_sabr", "sabr_call_quote", "sabr_put_base"]


@dataclass(frozen=True)
class SabrParams:
    alpha0: float
    nu: float
    rho: float
    f0: float
    r_quote: float
    r_base: float
    T: float

    def __post_init__(self):
        if not (self.alpha0 > 0 and self.nu > 0):
            raise DomainError("alpha0 and nu must be positive")
        if not -1.0 < self.rho <= 0.0:
            raise DomainError("rho must lie in (-1, 0]")
        if not (self.f0 > 0 and self.T > 0):
            raise DomainError("spot and maturity must be positive")

    @property
    def forward(self):
        return self.f0 * math.exp((self.r_quote - self.r_base) * self.T)


@dataclass
class SabrEnsemble:
    """sqrt f(T), its reciprocal, D_X(0, T) and log sigma(T) per path."""

    sqrt_f: np.ndarray
    inv_sqrt_f: np.ndarray
    discount: np.ndarray
    log_sigma: np.ndarray
    antithetic: bool

    def units(self, x):
        x = np.asarray(x)
        return 0.5 * (x[0::2] + x[1::2]) if self.antithetic else x


def simulate_sabr(p, mc):
    n, h = mc.grid(p.T)
    y, integ, ls = kernels.sabr_qx_paths(
        p.alpha0, p.nu, p.rho, 0.5 * (p.r_quote - p.r_base), 0.5 * (p.r_quote + p.r_base),
        h, n, mc.n_paths, mc.seed, mc.antithetic, threads())
    y = np.asarray(y)
    sf0 = math.sqrt(p.f0)
    return SabrEnsemble(sf0 * np.exp(y), np.exp(-y) / sf0, np.exp(-np.asarray(integ)),
                        np.asarray(ls), mc.antithetic)


def _strikes(K):
    return np.atleast_1d(np.asarray(K, dtype=np.float64))


def _collect(values, scale, K):
    pr = scale * np.array([v[0] for v in values])
    se = scale * np.array([v[1] for v in values])
    return (pr[0], se[0]) if np.ndim(K) == 0 else (pr, se)


def sabr_call_quote(p, K, mc=None, ens=None):
    """Quote-currency call prices with standard errors."""
    ens = simulate_sabr(p, mc) if ens is None else ens
    vals = [mean_se(ens.units(ens.discount * np.maximum(ens.sqrt_f - k * ens.inv_sqrt_f, 0.0)))
            for k in _strikes(K)]
    return _collect(vals, math.sqrt(p.f0), K)


def sabr_put_quote(p, K, mc=None, ens=None):
    ens = simulate_sabr(p, mc) if ens is None else ens
    vals = [mean_se(ens.units(ens.discount * np.maximum(k * ens.inv_sqrt_f - ens.sqrt_f, 0.0)))
            for k in _strikes(K)]
    return _collect(vals, math.sqrt(p.f0), K)


def sabr_put_base(p, K, mc=None, ens=None):
    """Put on the inverse pair with strike 1/K, priced in base currency."""
    ens = simulate_sabr(p, mc) if ens is None else ens
    vals = [mean_se(ens.units(ens.discount * np.maximum(ens.sqrt_f / k - ens.inv_sqrt_f, 0.0)))
            for k in _strikes(K)]
    return _collect(vals, 1.0 / math.sqrt(p.f0), K)


def sabr_call_base(p, K, mc=None, ens=None):
    ens = simulate_sabr(p, mc) if ens is None else ens
    vals = [mean_se(ens.units(ens.discount * np.maximum(ens.inv_sqrt_f - ens.sqrt_f / k, 0.0)))
            for k in _strikes(K)]
    return _collect(vals, 1.0 / math.sqrt(p.f0), K)


def martingale_check(p, ens):
    """Discounted pseudo-assets against their initial values: (mean, se, target) pairs."""
    base = ens.units(ens.discount * ens.sqrt_f * math.exp(p.r_base * p.T))
    quote = ens.units(ens.discount * ens.inv_sqrt_f * math.exp(p.r_quote * p.T))
    return ((*mean_se(base), math.sqrt(p.f0)), (*mean_se(quote), 1.0 / math.sqrt(p.f0)))


def no_arbitrage_check(p, ens):
    """T-forward ratio E[D sqrt f] / E[D / sqrt f] against the forward, with SE."""
    ratio, se = ratio_se(ens.units(ens.discount * ens.sqrt_f), ens.units(ens.discount * ens.inv_sqrt_f))
    diag = check_no_arbitrage_ratio(ratio, 1.0, p.f0, p.r_quote, p.r_base, p.T)
    return diag, se / diag.target
