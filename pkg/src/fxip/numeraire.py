"""The intermediate pseudo-currency X for one pair and for N currencies.

For a pair with exchange rate f (quote units per base unit), S_base/X = f**alpha
and S_quote/X = f**(alpha - 1). For N currencies with f_j = S_{c_j/c_N} the
exponent matrix b gives S_{c_i/X} = prod_j f_j**b_ij.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class PseudoPair:
    f0: float
    r_quote: float
    r_base: float
    alpha: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError("alpha must lie in (0, 1)")
        if not self.f0 > 0:
            raise DomainError("f0 must be positive")


def pseudo_rates(p):
    """(S_base/X(0), S_quote/X(0))."""
    return p.f0 ** p.alpha, p.f0 ** (p.alpha - 1.0)


def rx_two_currency(r_quote, r_base, sigma):
    return 0.5 * (r_quote + r_base) + sigma * sigma / 8.0


def cholesky_lower(R, tol=1e-12):
    """Lower-triangular L with R = L L^T.

    Raises DomainError on asymmetry or a squared pivot below ``tol``.
    """
    R = np.asarray(R, dtype=np.float64)
    n = R.shape[0]
    if R.shape != (n, n) or not np.allclose(R, R.T, rtol=0, atol=1e-14):
        raise DomainError("correlation matrix must be square and symmetric")
    if not np.allclose(np.diag(R), 1.0, rtol=0, atol=1e-14):
        raise DomainError("correlation matrix must have unit diagonal")
    try:
        L = np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise DomainError("correlation matrix is not positive definite") from None
    if np.min(np.diag(L)) ** 2 <= tol:
        raise DomainError("correlation matrix is not positive definite")
    return L


@dataclass
class MultiPseudoMarket:
    """N currencies; the last one is the reference c_N of the spot rates f_j."""

    rates: np.ndarray
    f0: np.ndarray
    sigmas: np.ndarray
    corr: np.ndarray
    alphas: np.ndarray = None

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=np.float64)
        self.f0 = np.asarray(self.f0, dtype=np.float64)
        self.sigmas = np.asarray(self.sigmas, dtype=np.float64)
        self.corr = np.asarray(self.corr, dtype=np.float64)
        n = self.rates.shape[0]
        if n < 2:
            raise DomainError("need at least two currencies")
        m = n - 1
        if self.alphas is None:
            self.alphas = np.full(m, 1.0 / n)
        self.alphas = np.asarray(self.alphas, dtype=np.float64)
        for name in ("f0", "sigmas", "alphas"):
            if getattr(self, name).shape != (m,):
                raise DomainError(f"{name} must have length N-1 = {m}")
        if self.corr.shape != (m, m):
            raise DomainError("correlation matrix must be (N-1)x(N-1)")
        if np.any(self.f0 <= 0):
            raise DomainError("spot rates must be positive")
        if np.any((self.alphas <= 0) | (self.alphas >= 1)):
            raise DomainError("alphas must lie in (0, 1)")
        self.chol = cholesky_lower(self.corr)

    @property
    def n(self):
        return self.rates.shape[0]

    def exponents(self):
        """b_ii = 1 - alpha_i, b_ij = -alpha_j; the last row is currency c_N."""
        m = self.n - 1
        b = np.tile(-self.alphas, (self.n, 1))
        b[np.arange(m), np.arange(m)] += 1.0
        return b

    def pseudo_spots(self):
        """S_{c_i/X}(0) for i = 1..N."""
        return np.exp(self.exponents() @ np.log(self.f0))


def _check_dims(m, sigmas, rho):
    sigmas = np.asarray(sigmas, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    k = m.n - 1
    if sigmas.shape != (k,) or rho.shape != (k, k):
        raise DomainError("dimension mismatch between market, sigmas and rho")
    return sigmas, rho


def rx_multi_equal(m, sigmas=None, rho=None):
    """Pseudo short rate for equal exponents 1/N."""
    sigmas, rho = _check_dims(m, m.sigmas if sigmas is None else sigmas,
                              m.corr if rho is None else rho)
    n = m.n
    cross = 0.0
    for k in range(n - 1):
        for j in range(k):
            cross += sigmas[j] * sigmas[k] * rho[j, k]
    return (m.rates.sum() / n + (1.0 - 1.0 / n) * np.dot(sigmas, sigmas) / (2.0 * n)
            - cross / (n * n))


def rx_multi_general(m, sigmas=None, rho=None, alphas=None):
    """Pseudo short rate for arbitrary exponents alpha_j in (0, 1)."""
    sigmas, rho = _check_dims(m, m.sigmas if sigmas is None else sigmas,
                              m.corr if rho is None else rho)
    a = m.alphas if alphas is None else np.asarray(alphas, dtype=np.float64)
    r = m.rates
    cross = 0.0
    for j in range(m.n - 1):
        for k in range(j):
            cross += sigmas[j] * a[j] * a[k] * sigmas[k] * rho[j, k]
    return ((1.0 - a.sum()) * r[-1] + np.dot(a, r[:-1])
            + np.dot(a * (1.0 - a), sigmas * sigmas) / 2.0 - cross)


def rx_multi(m, sigmas=None, rho=None):
    """Dispatch to the equal-exponent form when every alpha is 1/N."""
    if np.all(m.alphas == 1.0 / m.n):
        return rx_multi_equal(m, sigmas, rho)
    return rx_multi_general(m, sigmas, rho)


def _check_vols(sigmas):
    if np.any(sigmas <= 0):
        raise DomainError("market prices of risk need strictly positive vols")


def market_prices_of_risk(m, mus, sigmas=None, rho=None):
    """gamma_1..gamma_{N-1} by forward substitution in the triangular system

    r_i - r_N + mu_i - sigma_i/N * sum_k sigma_k rho_ik = sigma_i * sum_{k<=i} L_ik gamma_k.
    """
    sigmas, rho = _check_dims(m, m.sigmas if sigmas is None else sigmas,
                              m.corr if rho is None else rho)
    _check_vols(sigmas)
    L = m.chol if rho is m.corr else cholesky_lower(rho)
    mus = np.asarray(mus, dtype=np.float64)
    n = m.n
    r = m.rates
    g = np.zeros(n - 1)
    for i in range(n - 1):
        lhs = r[i] - r[-1] + mus[i] - sigmas[i] * np.dot(sigmas, rho[i]) / n
        g[i] = (lhs - sigmas[i] * np.dot(L[i, :i], g[:i])) / (sigmas[i] * L[i, i])
    return g


def market_price_residuals(m, mus, gammas, sigmas=None, rho=None):
    """Left minus right side of the triangular system for given gammas."""
    sigmas, rho = _check_dims(m, m.sigmas if sigmas is None else sigmas,
                              m.corr if rho is None else rho)
    L = cholesky_lower(rho)
    n = m.n
    lhs = (m.rates[:-1] - m.rates[-1] + np.asarray(mus)
           - sigmas * (rho @ sigmas) / n)
    return lhs - sigmas * (L @ np.asarray(gammas))


def gamma_two_currency(mu, sigma, r_base, r_quote):
    """Market price of risk for a single pair f = base/quote."""
    return (mu - 0.5 * sigma * sigma + r_base - r_quote) / sigma


@dataclass(frozen=True)
class ArbitrageDiagnostic:
    ratio: float
    target: float
    deviation: float


def check_no_arbitrage_ratio(e_sqrt_f, e_inv_sqrt_f, f0, r_quote, r_base, T):
    """Compare E[sqrt f(T)] / E[1/sqrt f(T)] with the forward f0*exp((r_q - r_b) T)."""
    if not (e_sqrt_f > 0 and e_inv_sqrt_f > 0):
        raise DomainError("expectations must be positive")
    ratio = e_sqrt_f / e_inv_sqrt_f
    target = f0 * math.exp((r_quote - r_base) * T)
    return ArbitrageDiagnostic(ratio, target, ratio / target - 1.0)


def check_no_arbitrage_multi(e_pseudo, forwards):
    """Per-currency check E[S_{c_i/X}] / E[S_{c_N/X}] = F_{c_i/c_N}(0, T).

    ``e_pseudo`` has N entries (last is c_N), ``forwards`` has N-1.
    """
    e = np.asarray(e_pseudo, dtype=np.float64)
    if np.any(e <= 0):
        raise DomainError("expectations must be positive")
    fw = np.asarray(forwards, dtype=np.float64)
    ratio = e[:-1] / e[-1]
    return ArbitrageDiagnostic(ratio, fw, ratio / fw - 1.0)
