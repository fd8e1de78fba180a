"""Three-point smile calibration of the ESN and Heston models, and the
inverse-pair consistency check."""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError
from .esn_model import (EsnParams, esn_call_base, esn_call_quote, esn_put_base,
                        esn_put_quote)
from .gk_closed_form import implied_vol
from .heston_qxt import (HestonParams, McControls, implied_vols_base, implied_vols_quote,
                         simulate_forwards)
from .market_data import TAGS, PairQuote, anchor_strikes, forward_rate


@dataclass(frozen=True)
class CalibrationTarget:
    pair: PairQuote
    strikes: tuple
    target_vols: tuple

    def __post_init__(self):
        K = np.asarray(self.strikes, dtype=np.float64)
        if K.shape != (3,) or len(self.target_vols) != 3:
            raise DomainError("a target has exactly three strikes and vols")
        if not (np.all(K > 0) and np.all(np.diff(K) > 0)):
            raise DomainError("target strikes must be positive and strictly increasing")
        if not all(v > 0 for v in self.target_vols):
            raise DomainError("target vols must be positive")

    @classmethod
    def from_quote(cls, q, convention="spot"):
        return cls(q, tuple(anchor_strikes(q, convention)), tuple(q.vols()))


@dataclass
class SolverResult:
    x: np.ndarray
    fval: np.ndarray
    iterations: int
    nfev: int
    converged: bool


def _jacobian(fun, x, f, rel_step, abs_step):
    J = np.empty((f.size, x.size))
    for j in range(x.size):
        h = max(rel_step * abs(x[j]), abs_step)
        xp = x.copy()
        xp[j] += h
        try:
            J[:, j] = (fun(xp) - f) / h
        except DomainError:
            xp[j] = x[j] - h
            J[:, j] = (f - fun(xp)) / h
    return J


def _dogleg_step(J, f, radius):
    g = J.T @ f
    gn = np.linalg.lstsq(J, -f, rcond=None)[0]
    if np.linalg.norm(gn) <= radius:
        return gn
    Jg = J @ g
    gg = g @ g
    pc = -(gg / (Jg @ Jg)) * g
    npc = np.linalg.norm(pc)
    if npc >= radius:
        return -radius * g / math.sqrt(gg)
    d = gn - pc
    a, b, c = d @ d, 2.0 * (pc @ d), pc @ pc - radius * radius
    tau = (-b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    return pc + tau * d


def solve_dogleg(fun, x0, tol=1e-8, max_iter=200, rel_step=1e-6, abs_step=1e-8,
                 radius=None):
    """Powell dogleg for a square system with a forward-difference Jacobian.

    ``fun`` may raise DomainError for inadmissible points; such trial steps are
    rejected and the trust radius shrinks.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    f = np.asarray(fun(x), dtype=np.float64)
    nfev = 1
    radius = 0.1 * max(1.0, np.linalg.norm(x)) if radius is None else radius
    it = 0
    J = None
    while it < max_iter:
        if np.max(np.abs(f)) < tol:
            return SolverResult(x, f, it, nfev, True)
        it += 1
        if J is None:
            J = _jacobian(fun, x, f, rel_step, abs_step)
            nfev += x.size
        p = _dogleg_step(J, f, radius)
        try:
            fn = np.asarray(fun(x + p), dtype=np.float64)
            nfev += 1
        except DomainError:
            nfev += 1
            radius = 0.25 * np.linalg.norm(p)
            continue
        pred = f @ f - np.sum((f + J @ p) ** 2)
        actual = f @ f - fn @ fn
        ratio = actual / pred if pred > 0 else -1.0
        if ratio < 0.25:
            radius = 0.25 * np.linalg.norm(p)
        elif ratio > 0.75 and np.linalg.norm(p) > 0.99 * radius:
            radius *= 2.0
        if ratio > 1e-4:
            x, f, J = x + p, fn, None
        if radius < 1e-15 * (1.0 + np.linalg.norm(x)):
            break
    return SolverResult(x, f, it, nfev, bool(np.max(np.abs(f)) < tol))


def _otm_kind(K, F):
    return "call" if K >= F else "put"


@dataclass
class CalibrationResult:
    model: str
    params: object
    residuals: np.ndarray
    iterations: int
    converged: bool
    pair: str
    strikes: tuple
    target_vols: tuple
    seed: int = None
    mc: dict = field(default=None)

    def to_dict(self):
        return {
            "model": self.model,
            "pair": self.pair,
            "params": asdict(self.params),
            "residuals": [float(r) for r in self.residuals],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "strikes": [float(k) for k in self.strikes],
            "target_vols": [float(v) for v in self.target_vols],
            "seed": self.seed,
            "mc": self.mc,
        }

    @classmethod
    def from_dict(cls, d):
        kinds = {"esn": EsnParams, "heston": HestonParams}
        try:
            params = kinds[d["model"]](**d["params"])
            return cls(d["model"], params, np.asarray(d["residuals"], dtype=np.float64),
                       int(d["iterations"]), bool(d["converged"]), d["pair"],
                       tuple(d["strikes"]), tuple(d["target_vols"]), d.get("seed"),
                       d.get("mc"))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed calibration result: {exc}") from exc

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise DomainError(f"invalid JSON: {exc}") from exc


def esn_smile(p, K):
    """Quote-market implied vols of the ESN law at strikes K (OTM options)."""
    out = []
    for k in np.atleast_1d(K):
        kind = _otm_kind(k, p.F)
        price = esn_call_quote(p, k) if kind == "call" else esn_put_quote(p, k)
        out.append(implied_vol(float(price), p.f0, k, p.T, p.r_quote, p.r_base, kind))
    return np.array(out)


def esn_inverse_smile(p, K):
    """Implied vols of the inverse pair at strikes 1/K, priced on the base market."""
    out = []
    for k in np.atleast_1d(K):
        kind = _otm_kind(1.0 / k, 1.0 / p.F)
        price = esn_call_base(p, k) if kind == "call" else esn_put_base(p, k)
        out.append(implied_vol(float(price), 1.0 / p.f0, 1.0 / k, p.T, p.r_base,
                               p.r_quote, kind))
    return np.array(out)


def _esn_params(x, beta, q):
    return EsnParams(float(x[0]), float(x[1]), float(x[2]), beta[0], beta[1],
                     forward_rate(q), q.r_quote, q.r_base, q.T)


def calibrate_esn(target, init=None, fixed=(-0.5, 0.5), tol=1e-8, max_iter=200):
    """Solve for (a, alpha1, alpha2) matching the three target vols."""
    q = target.pair
    if init is None:
        init = (q.smile["ATM"], -3.0, 1.0)
    if not np.all(np.isfinite(init)):
        raise DomainError("initial values must be finite")
    if not fixed[0] <= fixed[1]:
        raise DomainError("beta1 must not exceed beta2")
    K = np.asarray(target.strikes)
    vols = np.asarray(target.target_vols)

    def fun(x):
        return esn_smile(_esn_params(x, fixed, q), K) - vols

    sol = solve_dogleg(fun, init, tol=tol, max_iter=max_iter)
    res = CalibrationResult("esn", _esn_params(sol.x, fixed, q), sol.fval, sol.iterations,
                            sol.converged, q.name, tuple(K), tuple(vols))
    if not sol.converged:
        raise ConvergenceError("ESN calibration did not converge", res)
    return res


def _heston_params(x, fixed, q):
    return HestonParams(fixed[0], fixed[1], float(x[1]), float(x[0]), float(x[2]), q.spot,
                        q.r_quote, q.r_base, q.T)


def calibrate_heston(target, init=(0.5, 0.02, -0.3), fixed=(0.0086, 1.5), mc=None,
                     tol=5e-4, max_iter=100):
    """Solve for (delta, theta, rho) with fixed (v0, kappa).

    Every evaluation reuses the same seed, so the Monte Carlo objective is a
    deterministic function of the parameters.
    """
    q = target.pair
    if not (fixed[0] > 0 and fixed[1] > 0):
        raise DomainError("fixed v0 and kappa must be positive")
    mc = McControls(1_000_000, 0.05) if mc is None else mc
    K = np.asarray(target.strikes)
    vols = np.asarray(target.target_vols)

    def fun(x):
        p = _heston_params(x, fixed, q)
        return implied_vols_quote(p, K, mc)[0] - vols

    sol = solve_dogleg(fun, init, tol=tol, max_iter=max_iter, abs_step=1e-6)
    res = CalibrationResult("heston", _heston_params(sol.x, fixed, q), sol.fval,
                            sol.iterations, sol.converged, q.name, tuple(K), tuple(vols),
                            mc.seed, asdict(mc))
    if not sol.converged:
        raise ConvergenceError("Heston calibration did not converge", res)
    return res


@dataclass
class InverseReport:
    """Inverse-pair smile at strikes 1/K against the tag-swapped targets."""

    pair: str
    tags: tuple
    strikes: np.ndarray
    model_vols: np.ndarray
    target_vols: np.ndarray
    direct_vols: np.ndarray
    standard_errors: np.ndarray = None

    @property
    def deviation(self):
        """Largest |inverse vol - target vol|."""
        return float(np.max(np.abs(self.model_vols - self.target_vols)))

    @property
    def symmetry_deviation(self):
        """Largest |inverse vol - quote-market model vol| at the same anchor."""
        return float(np.max(np.abs(self.model_vols - self.direct_vols)))

    def to_dict(self):
        d = {"pair": self.pair, "tags": list(self.tags),
             "strikes": self.strikes.tolist(), "model_vols": self.model_vols.tolist(),
             "target_vols": self.target_vols.tolist(),
             "direct_vols": self.direct_vols.tolist(),
             "deviation": self.deviation, "symmetry_deviation": self.symmetry_deviation}
        if self.standard_errors is not None:
            d["standard_errors"] = self.standard_errors.tolist()
        return d


_SWAP = {"Put25": "Call25", "ATM": "ATM", "Call25": "Put25"}


def verify_inverse_consistency(result, mc=None):
    """Price the inverse pair with the same parameters on the base market."""
    p = result.params
    K = np.asarray(result.strikes, dtype=np.float64)
    base, quote = result.pair.split("/")
    tags = tuple(_SWAP[t] for t in TAGS)
    targets = np.asarray(result.target_vols, dtype=np.float64)
    if result.model == "esn":
        inv = esn_inverse_smile(p, K)
        direct = esn_smile(p, K)
        return InverseReport(f"{quote}/{base}", tags, 1.0 / K, inv, targets, direct)
    if result.model == "heston":
        if mc is None:
            mc = McControls(**result.mc) if result.mc else McControls(1_000_000, 0.05)
        ens = simulate_forwards(p, mc)
        inv, se = implied_vols_base(p, K, ens=ens)
        direct, _ = implied_vols_quote(p, K, ens=ens)
        return InverseReport(f"{quote}/{base}", tags, 1.0 / K, inv, targets, direct, se)
    raise DomainError(f"unknown model {result.model!r}")
