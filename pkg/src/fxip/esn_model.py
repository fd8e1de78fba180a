"""Extended skew normal terminal law for the log exchange rate.

f(T) = Fbar * exp(Z), Z = a * V, V = X + alpha1*(beta1 - Y)+ + alpha2*(Y - beta2)+
with X, Y independent standard normals, under the T-forward measure of X.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import comb

from .errors import DomainError
from .normal import bvn_cdf, norm_cdf, norm_pdf


@dataclass(frozen=True)
class EsnParams:
    a: float
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    F: float
    r_quote: float
    r_base: float
    T: float

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("a must be positive")
        if not self.beta1 <= self.beta2:
            raise DomainError("beta1 must not exceed beta2")
        if not (self.F > 0 and self.T > 0):
            raise DomainError("forward and maturity must be positive")

    @property
    def f0(self):
        return self.F * math.exp(-(self.r_quote - self.r_base) * self.T)

    def flipped(self):
        """Law of -Z: (alpha1, beta1) <-> (-alpha2, -beta2)."""
        return replace(self, alpha1=-self.alpha2, beta1=-self.beta2,
                       alpha2=-self.alpha1, beta2=-self.beta1)

    def inverse(self):
        """Parameters of the inverse pair 1/f with the same law up to Z -> -Z."""
        return replace(self.flipped(), F=1.0 / self.F, r_quote=self.r_base,
                       r_base=self.r_quote)


def _wing_exponent(p, t, alpha, sign):
    return 0.5 * t * (t * p.a * p.a * (1.0 + alpha * alpha)
                      + sign * 2.0 * p.a * alpha * (p.beta1 if sign > 0 else p.beta2))


def mgf(p, t):
    """M(t) = E[exp(t Z)]."""
    t = np.asarray(t, dtype=np.float64)
    a = p.a
    mid = np.exp(0.5 * (a * t) ** 2) * (norm_cdf(p.beta2) - norm_cdf(p.beta1))
    w2 = np.exp(_wing_exponent(p, t, p.alpha2, -1)) * norm_cdf(t * a * p.alpha2 - p.beta2)
    w1 = np.exp(_wing_exponent(p, t, p.alpha1, +1)) * norm_cdf(t * a * p.alpha1 + p.beta1)
    return mid + w2 + w1


def restricted_mgf(p, t, z0):
    """M(t, z0) = E[exp(t Z) 1{Z > z0}]."""
    t, z0 = np.broadcast_arrays(np.asarray(t, dtype=np.float64),
                                np.asarray(z0, dtype=np.float64))
    a = p.a
    x0 = z0 / a
    mid = (np.exp(0.5 * (a * t) ** 2) * norm_cdf(t * a - x0)
           * (norm_cdf(p.beta2) - norm_cdf(p.beta1)))
    s2 = math.sqrt(1.0 + p.alpha2 ** 2)
    u2 = (x0 - a * t + p.alpha2 * (p.beta2 - t * a * p.alpha2)) / s2
    w2 = (np.exp(_wing_exponent(p, t, p.alpha2, -1))
          * bvn_cdf(-u2, t * a * p.alpha2 - p.beta2, p.alpha2 / s2))
    s1 = math.sqrt(1.0 + p.alpha1 ** 2)
    u1 = (x0 - a * t - p.alpha1 * (p.beta1 + t * a * p.alpha1)) / s1
    w1 = (np.exp(_wing_exponent(p, t, p.alpha1, +1))
          * bvn_cdf(-u1, t * a * p.alpha1 + p.beta1, p.alpha1 / s1))
    out = mid + w2 + w1
    return float(out) if np.ndim(out) == 0 else out


def complementary_restricted_mgf(p, t, z0):
    """M*(t, z0) = E[exp(t Z) 1{Z < z0}] = M(t) - M(t, z0)."""
    return mgf(p, t) - restricted_mgf(p, t, z0)


def fbar(p):
    """Scale making E[sqrt f] / E[1/sqrt f] equal the forward."""
    return p.F * float(mgf(p, -0.5) / mgf(p, 0.5))


def _z0(p, K):
    return np.log(np.asarray(K, dtype=np.float64) / fbar(p))


def _pieces(p, K):
    z0 = _z0(p, K)
    mp, mm = float(mgf(p, 0.5)), float(mgf(p, -0.5))
    rp = restricted_mgf(p, 0.5, z0)
    rm = restricted_mgf(p, -0.5, z0)
    return mp, mm, rp, rm


def esn_call_quote(p, K):
    """Call on base currency, priced in quote currency."""
    mp, mm, rp, rm = _pieces(p, K)
    return math.exp(-p.r_quote * p.T) * (p.F * rp / mp - K * rm / mm)


def esn_put_quote(p, K):
    mp, mm, rp, rm = _pieces(p, K)
    return math.exp(-p.r_quote * p.T) * (K * (mm - rm) / mm - p.F * (mp - rp) / mp)


def esn_call_base(p, K):
    """Call on the inverse pair with strike 1/K, priced in base currency."""
    mp, mm, rp, rm = _pieces(p, K)
    return math.exp(-p.r_base * p.T) * ((mm - rm) / (p.F * mm) - (mp - rp) / (K * mp))


def esn_put_base(p, K):
    """Put on the inverse pair with strike 1/K, priced in base currency."""
    mp, mm, rp, rm = _pieces(p, K)
    return math.exp(-p.r_base * p.T) * (rp / (K * mp) - rm / (p.F * mm))


def _tail_moments(b, kmax):
    """E[(Y - b)+^k] for k = 0..kmax, Y standard normal."""
    I = np.zeros(kmax + 1)
    I[0] = norm_cdf(-b)
    if kmax >= 1:
        I[1] = norm_pdf(b)
    for j in range(2, kmax + 1):
        I[j] = b ** (j - 1) * norm_pdf(b) + (j - 1) * I[j - 2]
    return np.array([sum(comb(k, j, exact=True) * I[j] * (-b) ** (k - j) for j in range(k + 1))
                     for k in range(kmax + 1)])


def v_moments(p, kmax=4):
    """Raw moments E[V^k], k = 0..kmax, equal to the derivatives M_V^(k)(0)."""
    m1 = _tail_moments(-p.beta1, kmax)
    m2 = _tail_moments(p.beta2, kmax)
    ks = np.arange(kmax + 1)
    w = p.alpha1 ** ks * m1 + p.alpha2 ** ks * m2
    w[0] = 1.0
    g = np.array([0.0 if k % 2 else float(np.prod(np.arange(k - 1, 0, -2))) for k in ks])
    return np.array([sum(comb(n, i, exact=True) * g[i] * w[n - i] for i in range(n + 1))
                     for n in ks])


def _skew_kurt(m):
    m1, m2, m3, m4 = m[1], m[2], m[3], m[4]
    var = m2 - m1 * m1
    skew = (m3 - 3 * m1 * m2 + 2 * m1 ** 3) / var ** 1.5
    kurt = (m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1 ** 4) / var ** 2
    return skew, kurt


def esn_moments(p):
    """(skew, kurtosis) of Z; both are scale free, so those of V."""
    return _skew_kurt(v_moments(p))


def v_moments_fd(p, h=1e-2):
    """M_V^(k)(0), k = 0..4, by Richardson-extrapolated central differences."""
    unit = replace(p, a=1.0)

    def derivs(h):
        s = np.array([-2, -1, 0, 1, 2]) * h
        M = mgf(unit, s)
        d1 = (M[3] - M[1]) / (2 * h)
        d2 = (M[3] - 2 * M[2] + M[1]) / h ** 2
        d3 = (M[4] - 2 * M[3] + 2 * M[1] - M[0]) / (2 * h ** 3)
        d4 = (M[4] - 4 * M[3] + 6 * M[2] - 4 * M[1] + M[0]) / h ** 4
        return np.array([M[2], d1, d2, d3, d4])

    return (4 * derivs(h / 2) - derivs(h)) / 3


def esn_moments_fd(p, h=1e-2):
    return _skew_kurt(v_moments_fd(p, h))


def sample_v(p, n, rng):
    """Draws of V for Monte Carlo checks."""
    x = rng.standard_normal(n)
    y = rng.standard_normal(n)
    return (x + p.alpha1 * np.maximum(p.beta1 - y, 0.0)
            + p.alpha2 * np.maximum(y - p.beta2, 0.0))
