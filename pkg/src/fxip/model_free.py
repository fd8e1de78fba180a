"""Model-free joint law of a currency triangle built from three vanilla smiles.

Currencies c1, c2, c3 with S1 = S_{c1/c3}, S2 = S_{c2/c3} and the cross
S3 = S1 / S2. ``U(K1, K2) + exp(-r3 T)`` is the discounted joint distribution
function of (S1, S2) under the c3 T-forward measure.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, InconsistentSmilesError
from .gk_closed_form import gk_call
from .market_data import PairQuote, anchor_strikes, forward_rate
from .normal import bvn_cdf, norm_cdf, norm_pdf


@dataclass(frozen=True)
class SmileCurve:
    """sigma(K) = sqrt(log(p1 K^2 + p2 K + p3)) on [K_min, K_max], flat outside."""

    p1: float
    p2: float
    p3: float
    K_min: float
    K_max: float
    T: float

    def __post_init__(self):
        if not 0 < self.K_min < self.K_max:
            raise DomainError("smile domain must satisfy 0 < K_min < K_max")
        ends = self._q(np.array([self.K_min, self.K_max]))
        lo = self._q_min()
        if min(ends.min(), lo) <= 1.0:
            raise DomainError("exp-quadratic smile is not admissible on its domain")

    def _q(self, K):
        return (self.p1 * K + self.p2) * K + self.p3

    def _q_min(self):
        if self.p1 > 0:
            kv = -self.p2 / (2 * self.p1)
            if self.K_min < kv < self.K_max:
                return float(self._q(kv))
        return math.inf

    @classmethod
    def fit(cls, strikes, vols, T, domain=None):
        """Exact interpolation of three (K, sigma) anchors."""
        K = np.asarray(strikes, dtype=np.float64)
        A = np.column_stack([K * K, K, np.ones(3)])
        p1, p2, p3 = np.linalg.solve(A, np.exp(np.asarray(vols, dtype=np.float64) ** 2))
        if domain is None:
            domain = (K.min(), K.max())
        return cls(float(p1), float(p2), float(p3), float(domain[0]), float(domain[1]), T)

    @classmethod
    def from_quote(cls, q, convention="spot", n_sd=6.0, floor=1.0 + 1e-4):
        """Fit the three anchors of a quote.

        The domain spans ``n_sd`` ATM deviations of log-moneyness around the
        forward, cut back to the interval around the anchors where the
        quadratic stays above ``floor``.
        """
        K = anchor_strikes(q, convention)
        curve = cls.fit(K, q.vols(), q.T)
        F = forward_rate(q)
        w = n_sd * q.smile["ATM"] * math.sqrt(q.T)
        lo, hi = F * math.exp(-w), F * math.exp(w)
        roots = np.roots([curve.p1, curve.p2, curve.p3 - floor])
        roots = roots[np.abs(roots.imag) < 1e-14].real
        k_lo, k_hi = min(K), max(K)
        below = roots[roots < k_lo]
        above = roots[roots > k_hi]
        if below.size:
            lo = max(lo, k_lo + 0.999 * (below.max() - k_lo))
        if above.size:
            hi = min(hi, k_hi + 0.999 * (above.min() - k_hi))
        return cls(curve.p1, curve.p2, curve.p3, lo, hi, q.T)

    def _clip(self, K):
        return np.clip(K, self.K_min, self.K_max)

    def vol(self, K):
        return np.sqrt(np.log(self._q(self._clip(np.asarray(K, dtype=np.float64)))))

    def dvol(self, K):
        """Analytic derivative; zero in the flat wings."""
        K = np.asarray(K, dtype=np.float64)
        Kc = self._clip(K)
        s = np.sqrt(np.log(self._q(Kc)))
        d = (2 * self.p1 * Kc + self.p2) / (2 * self._q(Kc) * s)
        return np.where((K < self.K_min) | (K > self.K_max), 0.0, d)


def single_pair_density(smile, F, r_quote, T, K, rel_step=1e-4):
    """Second strike derivative of the smile-implied call price.

    Equals exp(-r_q T) rho(K) / (sqrt(K) E[sqrt f(T)]) with rho the density of
    f(T) under the pseudo-currency T-forward measure.
    """
    K = np.asarray(K, dtype=np.float64)
    h = rel_step * K
    if np.any(K - h <= smile.K_min) or np.any(K + h >= smile.K_max):
        raise DomainError("strike stencil leaves the smile domain")
    f0 = F * math.exp(-r_quote * T)

    def c(k):
        return gk_call(f0, k, T, smile.vol(k), r_quote, 0.0)

    return (c(K + h) - 2.0 * c(K) + c(K - h)) / (h * h)


@dataclass(frozen=True)
class TriangleMarket:
    """Smiles of S1 = c1/c3, S2 = c2/c3 and the cross S3 = c1/c2 at one maturity."""

    smile1: SmileCurve
    smile2: SmileCurve
    smile3: SmileCurve
    F1: float
    F2: float
    r1: float
    r2: float
    r3: float
    T: float
    names: tuple = ("C1", "C2", "C3")
    spot1: float = math.nan

    @property
    def F3(self):
        return self.F1 / self.F2

    @classmethod
    def from_snapshot(cls, snap, c1, c2, c3, convention="spot", n_sd=6.0):
        q1 = snap.pair(f"{c1}/{c3}")
        q2 = snap.pair(f"{c2}/{c3}")
        q3 = snap.pair(f"{c1}/{c2}")
        if not (q1.T == q2.T == q3.T):
            raise DomainError("triangle quotes must share one maturity")
        if abs(q1.r_base - q3.r_base) > 1e-15 or abs(q2.r_base - q3.r_quote) > 1e-15 \
                or abs(q1.r_quote - q2.r_quote) > 1e-15:
            raise DomainError("triangle quotes disagree on currency rates")
        # cross spot taken from the two legs so that F3 = F1 / F2 holds exactly
        q3 = PairQuote(q3.base, q3.quote_ccy, q1.spot / q2.spot, q3.T, q3.r_base,
                       q3.r_quote, q3.smile)
        s1 = SmileCurve.from_quote(q1, convention, n_sd)
        s2 = SmileCurve.from_quote(q2, convention, n_sd)
        s3 = SmileCurve.from_quote(q3, convention, n_sd)
        return cls(s1, s2, s3, forward_rate(q1), forward_rate(q2), q1.r_base, q2.r_base,
                   q1.r_quote, q1.T, (c1, c2, c3), q1.spot)

    def vols(self, K1, K2):
        K1 = np.asarray(K1, dtype=np.float64)
        K2 = np.asarray(K2, dtype=np.float64)
        return self.smile1.vol(K1), self.smile2.vol(K2), self.smile3.vol(K1 / K2)

    def correlations(self, s1, s2, s3, check=True):
        """(rho12, rho13, rho23) implied by the three vols."""
        r12 = (s1 * s1 + s2 * s2 - s3 * s3) / (2 * s1 * s2)
        r13 = (s1 * s1 + s3 * s3 - s2 * s2) / (2 * s1 * s3)
        r23 = (s2 * s2 + s3 * s3 - s1 * s1) / (2 * s2 * s3)
        if check and np.any(np.abs(np.stack(np.broadcast_arrays(r12, r13, r23))) >= 1.0):
            raise InconsistentSmilesError("smiles violate the triangle inequalities")
        return r12, r13, r23

    def triangle_margins(self, K1, K2):
        """Smallest slack of the three triangle inequalities (positive when admissible)."""
        s1, s2, s3 = self.vols(K1, K2)
        return np.minimum(np.minimum(s1 + s2 - s3, s2 + s3 - s1), s1 + s3 - s2)


def _d(F, K, s, T):
    sd = s * math.sqrt(T)
    dp = (np.log(F / K) + 0.5 * sd * sd) / sd
    return dp, dp - sd


def best_of_parts(t, K1, K2, s1, s2, s3):
    """Best-of value for given vols (no smile lookup)."""
    K1 = np.asarray(K1, dtype=np.float64)
    K2 = np.asarray(K2, dtype=np.float64)
    r12, r13, r23 = t.correlations(s1, s2, s3)
    d1p, d1m = _d(t.F1, K1, s1, t.T)
    d2p, d2m = _d(t.F2, K2, s2, t.T)
    d3p, d3m = _d(t.F3, K1 / K2, s3, t.T)
    v = (t.F1 / K1 * bvn_cdf(d1p, d3p, r13)
         + t.F2 / K2 * bvn_cdf(d2p, -d3m, r23)
         + bvn_cdf(-d1m, -d2m, r12) - 1.0)
    return math.exp(-t.r3 * t.T) * v


def best_of_value(t, K1, K2):
    """Price in c3 of max((S1 - K1)+ / K1, (S2 - K2)+ / K2) with smile vols."""
    return best_of_parts(t, K1, K2, *t.vols(K1, K2))


def _u_bracket(t, K1, K2, check):
    s1, s2, s3 = t.vols(K1, K2)
    r12, _, _ = t.correlations(s1, s2, s3, check)
    ok = np.abs(r12) < 1.0
    r12 = np.where(ok, r12, 0.0)
    _, d1m = _d(t.F1, K1, s1, t.T)
    _, d2m = _d(t.F2, K2, s2, t.T)
    c = np.sqrt(1.0 - r12 * r12)
    rt = math.sqrt(t.T)
    u = (bvn_cdf(-d1m, -d2m, r12)
         + K1 * rt * t.smile1.dvol(K1) * norm_pdf(d1m) * norm_cdf((d1m * r12 - d2m) / c)
         + K2 * rt * t.smile2.dvol(K2) * norm_pdf(d2m) * norm_cdf((d2m * r12 - d1m) / c)
         - 1.0)
    return math.exp(-t.r3 * t.T) * np.where(ok, u, np.nan)


def U(t, K1, K2):
    """[1 + K1 d/dK1 + K2 d/dK2] applied to the smile best-of value, closed form."""
    K1 = np.asarray(K1, dtype=np.float64)
    K2 = np.asarray(K2, dtype=np.float64)
    out = _u_bracket(t, K1, K2, True)
    return float(out) if out.ndim == 0 else out


def U_inf1(t, K2):
    """U(infinity, K2): marginal of S2."""
    K2 = np.asarray(K2, dtype=np.float64)
    s2 = t.smile2.vol(K2)
    _, d2m = _d(t.F2, K2, s2, t.T)
    return math.exp(-t.r3 * t.T) * (norm_cdf(-d2m) + K2 * math.sqrt(t.T) * t.smile2.dvol(K2)
                                    * norm_pdf(d2m) - 1.0)


def U_inf2(t, K1):
    """U(K1, infinity): marginal of S1."""
    K1 = np.asarray(K1, dtype=np.float64)
    s1 = t.smile1.vol(K1)
    _, d1m = _d(t.F1, K1, s1, t.T)
    return math.exp(-t.r3 * t.T) * (norm_cdf(-d1m) + K1 * math.sqrt(t.T) * t.smile1.dvol(K1)
                                    * norm_pdf(d1m) - 1.0)


def U_fd(t, K1, K2, rel_step=1e-4):
    """Finite-difference route to U through the best-of value (central differences)."""
    K1 = np.asarray(K1, dtype=np.float64)
    K2 = np.asarray(K2, dtype=np.float64)
    h1, h2 = rel_step * K1, rel_step * K2
    v = best_of_value(t, K1, K2)
    dv1 = (best_of_value(t, K1 + h1, K2) - best_of_value(t, K1 - h1, K2)) / (2 * h1)
    dv2 = (best_of_value(t, K1, K2 + h2) - best_of_value(t, K1, K2 - h2)) / (2 * h2)
    return v + K1 * dv1 + K2 * dv2


@dataclass
class DensityGrid:
    """D[i, j] = d2U / dK1 dK2 on K1[i] x K2[j]."""

    K1: np.ndarray
    K2: np.ndarray
    U: np.ndarray
    D: np.ndarray
    r3: float
    T: float
    names: tuple = ("C1", "C2", "C3")
    meta: dict = field(default_factory=dict)

    @property
    def negative_count(self):
        return int(np.sum(np.isfinite(self.D) & (self.D < 0)))

    @property
    def finite_fraction(self):
        return float(np.mean(np.isfinite(self.D)))

    def total_mass(self):
        """Integral of exp(r3 T) D over the rectangle (trapezoid)."""
        return math.exp(self.r3 * self.T) * np.trapezoid(np.trapezoid(self.D, self.K2, axis=1), self.K1)

    def qx_density(self):
        """Joint density of (S1, S2) under the T-forward measure of X on the grid.

        The c3 T-forward density is reweighted by K1^(1/3) K2^(1/3) and renormalised
        over the grid.
        """
        q = math.exp(self.r3 * self.T) * self.D
        w = np.cbrt(self.K1)[:, None] * np.cbrt(self.K2)[None, :] * q
        return w / np.trapezoid(np.trapezoid(w, self.K2, axis=1), self.K1)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("K1\\K2," + ",".join(f"{k:.17g}" for k in self.K2) + "\n")
            for k1, row in zip(self.K1, self.D):
                fh.write(f"{k1:.17g}," + ",".join(f"{x:.17g}" for x in row) + "\n")

    def metadata(self):
        return {"names": list(self.names), "r3": self.r3, "T": self.T,
                "rows": "K1", "cols": "K2",
                "scaling": "D = exp(-r3 T) / E[S_c3/X] * K1^(-1/3) K2^(-1/3) rho_X(K1, K2)",
                "negative_count": self.negative_count, **self.meta}

    def write_metadata(self, path):
        with open(path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2)
            fh.write("\n")


def default_grid(t, n=200, n_sd=4.0):
    """Strike grids over forward +/- ``n_sd`` ATM deviations in log-moneyness."""
    def grid(F, smile):
        w = n_sd * float(smile.vol(F)) * math.sqrt(t.T)
        return np.linspace(F * math.exp(-w), F * math.exp(w), n)

    return grid(t.F1, t.smile1), grid(t.F2, t.smile2)


def scaled_joint_density(t, K1=None, K2=None, n=200):
    """Mixed second differences of the closed-form U on a strike grid."""
    if K1 is None or K2 is None:
        K1, K2 = default_grid(t, n)
    K1 = np.asarray(K1, dtype=np.float64)
    K2 = np.asarray(K2, dtype=np.float64)
    G1, G2 = np.meshgrid(K1, K2, indexing="ij")
    # points violating the triangle inequalities are left as NaN; first-order
    # edges keep D >= 0 whenever U is a distribution function
    Ug = _u_bracket(t, G1, G2, False)
    D = np.gradient(np.gradient(Ug, K1, axis=0), K2, axis=1)
    meta = {"inadmissible_count": int(np.sum(~np.isfinite(Ug)))}
    return DensityGrid(K1, K2, Ug, D, t.r3, t.T, t.names, meta)


def _breaks(lo, hi, pts):
    return sorted({p for p in pts if lo < p < hi})


def basket_put_c3(t, w1, w2, K, epsabs=1e-12, epsrel=1e-10):
    """Price in c3 of (K - w1 S1 - w2 S2)+."""
    if w1 < 0 or w2 < 0 or (w1 == 0 and w2 == 0):
        raise DomainError("weights must be non-negative and not both zero")
    if K <= 0:
        return 0.0
    disc = math.exp(-t.r3 * t.T)
    if w2 == 0:
        f = lambda z: float(U_inf2(t, z / w1))
        pts = [w1 * t.smile1.K_min, w1 * t.smile1.K_max]
    elif w1 == 0:
        f = lambda z: float(U_inf1(t, z / w2))
        pts = [w2 * t.smile2.K_min, w2 * t.smile2.K_max]
    else:
        f = lambda z: float(U(t, z / w1, (K - z) / w2))
        pts = [w1 * t.smile1.K_min, w1 * t.smile1.K_max,
               K - w2 * t.smile2.K_min, K - w2 * t.smile2.K_max]
        for k3 in (t.smile3.K_min, t.smile3.K_max):
            pts.append(k3 * w1 * K / (w2 + k3 * w1))
    val, err = integrate.quad(f, 0.0, K, points=_breaks(0.0, K, pts) or None,
                              epsabs=epsabs, epsrel=epsrel, limit=500)
    return val + K * disc


def basket_put_c1(t, w1, w2, K, spot_c3_per_c1=None, epsabs=1e-12, epsrel=1e-10):
    """Price in c1 of (K - w1 S_{c3/c1} - w2 S_{c2/c1})+."""
    if w1 < 0 or w2 < 0 or (w1 == 0 and w2 == 0):
        raise DomainError("weights must be non-negative and not both zero")
    s = spot_c3_per_c1 if spot_c3_per_c1 is not None else 1.0 / t.spot1
    if not math.isfinite(s):
        raise DomainError("c3/c1 spot rate is required")
    if K <= 0:
        return 0.0
    if w2 == 0:
        x = w1 / K
        f0 = t.F1 * math.exp(-t.r3 * t.T)
        return s * K * float(gk_call(f0, x, t.T, t.smile1.vol(x), t.r3, 0.0))
    # the integrand is bounded by P(S1 > (z + w1) / K)
    sig = float(np.max(t.smile1.vol(np.array([t.smile1.K_min, t.F1, t.smile1.K_max]))))
    z_hi = K * t.F1 * math.exp(12.0 * sig * math.sqrt(t.T))
    f = lambda z: float(U_inf1(t, z / w2) - U(t, (z + w1) / K, z / w2))
    pts = [w2 * t.smile2.K_min, w2 * t.smile2.K_max,
           K * t.smile1.K_min - w1, K * t.smile1.K_max - w1]
    val, err = integrate.quad(f, 0.0, z_hi, points=_breaks(0.0, z_hi, pts) or None,
                              epsabs=epsabs, epsrel=epsrel, limit=500)
    return s * val
