"""Garman-Kohlhagen prices, their pseudo-currency analogues and implied vols.

Orientation: ``f0`` is quote units per base unit, so the call buys one unit
of base for ``K`` units of quote and is priced in the quote currency.
"""

import math
from typing import NamedTuple

import numpy as np

from .errors import NoSolutionError
from .normal import norm_cdf, norm_pdf

SIGMA_MIN, SIGMA_MAX = 1e-6, 5.0


class GkInputs(NamedTuple):
    f0: float
    K: float
    T: float
    sigma: float
    r_quote: float
    r_base: float


def _d(F, K, T, sigma):
    s = sigma * np.sqrt(T)
    dp = (np.log(F / K) + 0.5 * s * s) / s
    return dp, dp - s


def gk_call(f0, K, T, sigma, r_quote, r_base):
    """Price in quote currency of a call on one unit of base currency."""
    F = f0 * np.exp((r_quote - r_base) * T)
    dp, dm = _d(F, K, T, sigma)
    return np.exp(-r_quote * T) * (F * norm_cdf(dp) - K * norm_cdf(dm))


def gk_put(f0, K, T, sigma, r_quote, r_base):
    F = f0 * np.exp((r_quote - r_base) * T)
    dp, dm = _d(F, K, T, sigma)
    return np.exp(-r_quote * T) * (K * norm_cdf(-dm) - F * norm_cdf(-dp))


def gk_price(kind, f0, K, T, sigma, r_quote, r_base):
    fn = gk_call if kind == "call" else gk_put
    return fn(f0, K, T, sigma, r_quote, r_base)


def vega(f0, K, T, sigma, r_quote, r_base):
    F = f0 * np.exp((r_quote - r_base) * T)
    dp, _ = _d(F, K, T, sigma)
    return np.exp(-r_quote * T) * F * norm_pdf(dp) * np.sqrt(T)


def _dx(f0, K, T, sigma, r_quote, r_base):
    s = sigma * np.sqrt(T)
    m = np.log(f0 / K) + (r_quote - r_base) * T
    return (m + 0.5 * s * s) / s, (m - 0.5 * s * s) / s


def intermediate_call(f0, K, T, sigma, r_quote, r_base):
    """Price in X of the call paying (sqrt f(T) - K / sqrt f(T))+ units of X."""
    dp, dm = _dx(f0, K, T, sigma, r_quote, r_base)
    sf = np.sqrt(f0)
    return (sf * np.exp(-r_base * T) * norm_cdf(dp)
            - K / sf * np.exp(-r_quote * T) * norm_cdf(dm))


def intermediate_put(f0, K, T, sigma, r_quote, r_base):
    """Price in X of the put paying (sqrt f(T) / K - 1 / sqrt f(T))+ units of X.

    Divided by sqrt(f0) it is the base-currency price of a put on the inverse
    pair with strike 1/K.
    """
    dp, dm = _dx(f0, K, T, sigma, r_quote, r_base)
    sf = np.sqrt(f0)
    return (sf / K * np.exp(-r_base * T) * norm_cdf(dp)
            - 1.0 / sf * np.exp(-r_quote * T) * norm_cdf(dm))


def price_bounds(kind, f0, K, T, r_quote, r_base):
    """(lower, upper) no-arbitrage bounds of a European price."""
    F = f0 * math.exp((r_quote - r_base) * T)
    dq = math.exp(-r_quote * T)
    if kind == "call":
        return dq * max(F - K, 0.0), dq * F
    return dq * max(K - F, 0.0), dq * K


def implied_vol(price, f0, K, T, r_quote, r_base, kind="call", tol=1e-10, max_iter=100):
    """Volatility reproducing ``price``: safeguarded Newton inside a bisection bracket."""
    lo_p, hi_p = price_bounds(kind, f0, K, T, r_quote, r_base)
    if not (lo_p < price < hi_p):
        raise NoSolutionError(f"price {price!r} outside bounds ({lo_p!r}, {hi_p!r})")
    lo, hi = SIGMA_MIN, SIGMA_MAX
    if not (gk_price(kind, f0, K, T, lo, r_quote, r_base) <= price
            <= gk_price(kind, f0, K, T, hi, r_quote, r_base)):
        raise NoSolutionError("price not attainable for sigma in [1e-6, 5]")
    F = f0 * math.exp((r_quote - r_base) * T)
    s = max(math.sqrt(2.0 * abs(math.log(F / K)) / T), 0.2)
    s = min(max(s, lo), hi)
    best = None
    for _ in range(max_iter):
        diff = float(gk_price(kind, f0, K, T, s, r_quote, r_base)) - price
        if best is None or abs(diff) < abs(best[1]):
            best = (s, diff)
        if diff > 0:
            hi = s
        else:
            lo = s
        v = float(vega(f0, K, T, s, r_quote, r_base))
        step = diff / v if v > 0 else math.inf
        s_new = s - step
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= 4e-16 * s or diff == 0.0:
            s = s_new
            break
        s = s_new
    diff = float(gk_price(kind, f0, K, T, s, r_quote, r_base)) - price
    if abs(diff) > abs(best[1]):
        s, diff = best
    if abs(diff) > tol:
        raise NoSolutionError(f"implied vol did not converge (residual {diff:.3e})")
    return s


def implied_vols(prices, f0, K, T, r_quote, r_base, kind="call"):
    """Element-wise implied_vol over strikes (and prices)."""
    prices, K = np.broadcast_arrays(np.asarray(prices, float), np.asarray(K, float))
    return np.array([implied_vol(p, f0, k, T, r_quote, r_base, kind)
                     for p, k in zip(prices.ravel(), K.ravel())]).reshape(K.shape)
