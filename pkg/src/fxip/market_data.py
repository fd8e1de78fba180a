"""Market quotes: spots, flat rates and three-point delta-quoted smiles."""

import json
import math
from dataclasses import dataclass, field

from .errors import DomainError, QuoteNotFoundError
from .normal import norm_ppf

TAGS = ("Put25", "ATM", "Call25")
_JSON_TAGS = {"Put25": "put25", "ATM": "atm", "Call25": "call25"}
CONVENTIONS = ("spot", "forward")


@dataclass(frozen=True)
class Currency:
    code: str

    def __post_init__(self):
        c = self.code
        if not (isinstance(c, str) and len(c) == 3 and c.isalpha() and c.isupper()):
            raise DomainError(f"invalid currency code {c!r}")

    def __str__(self):
        return self.code


def _ccy(c):
    return c if isinstance(c, Currency) else Currency(c)


@dataclass(frozen=True)
class PairQuote:
    """One currency pair: ``spot`` is units of quote currency per unit of base."""

    base: Currency
    quote_ccy: Currency
    spot: float
    T: float
    r_base: float
    r_quote: float
    smile: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "base", _ccy(self.base))
        object.__setattr__(self, "quote_ccy", _ccy(self.quote_ccy))
        if self.base == self.quote_ccy:
            raise DomainError("base and quote currency coincide")
        if not (self.spot > 0 and self.T > 0):
            raise DomainError("spot and maturity must be positive")
        if set(self.smile) != set(TAGS):
            raise DomainError(f"smile must carry exactly the tags {TAGS}")
        if not all(v > 0 for v in self.smile.values()):
            raise DomainError("implied vols must be positive")
        object.__setattr__(self, "smile", {t: float(self.smile[t]) for t in TAGS})

    @property
    def name(self):
        return f"{self.base}/{self.quote_ccy}"

    def vols(self):
        """Vols ordered (Put25, ATM, Call25)."""
        return tuple(self.smile[t] for t in TAGS)


def forward_rate(q):
    return q.spot * math.exp((q.r_quote - q.r_base) * q.T)


def strike_from_delta(q, tag, convention="spot"):
    """Strike of a delta-quoted option, no premium adjustment.

    ``convention="spot"`` uses spot deltas exp(-r_base T) N(d1) with ATM the
    50-delta call; ``"forward"`` uses forward deltas N(d1) with ATM = forward.
    """
    if tag not in q.smile:
        raise QuoteNotFoundError(tag)
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown delta convention {convention!r}")
    F = forward_rate(q)
    s = q.smile[tag] * math.sqrt(q.T)
    scale = math.exp(q.r_base * q.T) if convention == "spot" else 1.0
    if tag == "ATM":
        if convention == "forward":
            return F
        d1 = norm_ppf(0.5 * scale)
    elif tag == "Call25":
        d1 = norm_ppf(0.25 * scale)
    else:
        d1 = -norm_ppf(0.25 * scale)
    if not math.isfinite(d1):
        raise DomainError("delta level unreachable under the spot convention")
    return F * math.exp(-s * d1 + 0.5 * s * s)


def anchor_strikes(q, convention="spot"):
    """Strikes for (Put25, ATM, Call25)."""
    return tuple(strike_from_delta(q, t, convention) for t in TAGS)


def invert_pair(q):
    """The same quote seen from the other currency; Put25 and Call25 swap."""
    sm = {"Put25": q.smile["Call25"], "ATM": q.smile["ATM"], "Call25": q.smile["Put25"]}
    return PairQuote(q.quote_ccy, q.base, 1.0 / q.spot, q.T, q.r_quote, q.r_base, sm)


def parse_pair(name):
    """'GBP/EUR' -> ('GBP', 'EUR')."""
    parts = name.split("/")
    if len(parts) != 2:
        raise DomainError(f"pair must look like AAA/BBB, got {name!r}")
    return Currency(parts[0].strip()).code, Currency(parts[1].strip()).code


@dataclass(frozen=True)
class MarketSnapshot:
    asof: str
    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        seen = {}
        for p in self.pairs:
            key = (p.base.code, p.quote_ccy.code)
            if key in seen:
                raise DomainError(f"duplicate pair {p.name}")
            seen[key] = p
        for (b, c), p in seen.items():
            inv = seen.get((c, b))
            if inv is not None and abs(p.spot * inv.spot - 1.0) > 1e-10:
                raise DomainError(f"spots of {p.name} and its inverse are inconsistent")

    def pair(self, name):
        """Look up ``AAA/BBB``; an inverse-only entry is inverted on the fly."""
        b, c = parse_pair(name)
        for p in self.pairs:
            if (p.base.code, p.quote_ccy.code) == (b, c):
                return p
        for p in self.pairs:
            if (p.base.code, p.quote_ccy.code) == (c, b):
                return invert_pair(p)
        raise QuoteNotFoundError(name)

    def to_dict(self):
        return {
            "asof": self.asof,
            "pairs": [
                {
                    "base": p.base.code,
                    "quote": p.quote_ccy.code,
                    "spot": p.spot,
                    "T": p.T,
                    "r_base": p.r_base,
                    "r_quote": p.r_quote,
                    "smile": {_JSON_TAGS[t]: p.smile[t] for t in TAGS},
                }
                for p in self.pairs
            ],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            pairs = [
                PairQuote(
                    e["base"], e["quote"], float(e["spot"]), float(e["T"]),
                    float(e["r_base"]), float(e["r_quote"]),
                    {t: float(e["smile"][_JSON_TAGS[t]]) for t in TAGS},
                )
                for e in d["pairs"]
            ]
            return cls(str(d["asof"]), pairs)
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed market snapshot: {exc}") from exc

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid JSON: {exc}") from exc

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())
