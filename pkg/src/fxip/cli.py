"""Command-line front end.

Exit codes: 0 success, 1 domain error (JSON on stderr), 2 usage error.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import model_free as mf
from .calibration import (CalibrationResult, CalibrationTarget, calibrate_esn,
                          calibrate_heston, esn_inverse_smile, esn_smile,
                          verify_inverse_consistency)
from .errors import DomainError
from .esn_model import esn_call_quote, esn_put_quote
from .gk_closed_form import gk_call, gk_put, implied_vol
from .heston_qxt import (McControls, implied_vols_base, implied_vols_quote,
                         price_call_quote, price_put_quote, simulate_forwards)
from .market_data import MarketSnapshot, parse_pair
from .normal import norm_cdf
from .sabr_qx import (SabrParams, sabr_call_quote, sabr_put_base, sabr_put_quote,
                      simulate_sabr)

VERBS = ("calibrate-esn", "calibrate-heston", "price", "smile", "density", "basket",
         "verify-symmetry")
MODELS = ("gk", "esn", "heston", "sabr", "modelfree")


def _num(x):
    return repr(float(x))


def _triangle(text):
    parts = [p.strip().upper() for p in text.split(",")]
    if len(parts) != 3 or len(set(parts)) != 3:
        raise argparse.ArgumentTypeError("expected three distinct currencies A,B,C")
    return tuple(parts)


def _weights(text):
    try:
        w = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected W1,W2") from None
    if len(w) != 2:
        raise argparse.ArgumentTypeError("expected W1,W2")
    return w


def _pair(text):
    try:
        parse_pair(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text.upper()


def build_parser():
    ap = argparse.ArgumentParser(prog="fxip", description=__doc__.splitlines()[0])
    ap.add_argument("verb", choices=VERBS)
    ap.add_argument("--input", help="market snapshot JSON")
    ap.add_argument("--out", help="output path (stdout when omitted)")
    ap.add_argument("--pair", type=_pair, help="currency pair BASE/QUOTE")
    ap.add_argument("--triangle", type=_triangle, help="currencies C1,C2,C3")
    ap.add_argument("--model", choices=MODELS)
    ap.add_argument("--params", help="parameter JSON (calibration result or SABR params)")
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--paths", type=int, default=1_000_000)
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--grid", type=int)
    ap.add_argument("--strike", type=float)
    ap.add_argument("--maturity", type=float)
    ap.add_argument("--weights", type=_weights, help="basket weights W1,W2")
    return ap


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise _Usage(f"{args.verb} requires --{', --'.join(missing)}")


class _Usage(Exception):
    pass


def _emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _mc(args):
    return McControls(args.paths, args.step, args.seed)


def _snapshot(args):
    _require(args, "input")
    return MarketSnapshot.load(args.input)


def _load_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid JSON: {exc}") from exc


def _sabr_params(args):
    _require(args, "params")
    d = _load_json(args.params)
    if "f0" not in d:
        q = _snapshot(args).pair(args.pair)
        d = {**d, "f0": q.spot, "r_quote": q.r_quote, "r_base": q.r_base, "T": q.T}
    try:
        return SabrParams(**{k: float(d[k]) for k in
                             ("alpha0", "nu", "rho", "f0", "r_quote", "r_base", "T")})
    except KeyError as exc:
        raise DomainError(f"missing SABR parameter {exc}") from exc


def cmd_calibrate_esn(args):
    _require(args, "pair")
    q = _snapshot(args).pair(args.pair)
    res = calibrate_esn(CalibrationTarget.from_quote(q))
    _emit(args, res.dumps())


def cmd_calibrate_heston(args):
    _require(args, "pair")
    q = _snapshot(args).pair(args.pair)
    res = calibrate_heston(CalibrationTarget.from_quote(q), mc=_mc(args))
    _emit(args, res.dumps())


def _result(args):
    _require(args, "params")
    return CalibrationResult.load(args.params)


def _orientation(res, pair):
    """True when ``pair`` is the inverse of the calibrated pair."""
    if pair is None or pair == res.pair:
        return False
    b, q = res.pair.split("/")
    if pair == f"{q}/{b}":
        return True
    raise DomainError(f"parameters were calibrated on {res.pair}, not {pair}")


def cmd_price(args):
    _require(args, "model", "strike")
    K = args.strike
    out = {"model": args.model, "strike": K}
    if args.model in ("gk", "modelfree"):
        _require(args, "pair")
        q = _snapshot(args).pair(args.pair)
        T = args.maturity if args.maturity is not None else q.T
        if args.model == "gk":
            sigma = q.smile["ATM"]
        else:
            sigma = float(mf.SmileCurve.from_quote(q).vol(K))
        out.update(pair=q.name, vol=sigma,
                   call=float(gk_call(q.spot, K, T, sigma, q.r_quote, q.r_base)),
                   put=float(gk_put(q.spot, K, T, sigma, q.r_quote, q.r_base)))
    elif args.model == "esn":
        res = _result(args)
        if res.model != "esn":
            raise DomainError("parameters are not an ESN calibration")
        p = res.params
        out.update(pair=res.pair, call=float(esn_call_quote(p, K)), put=float(esn_put_quote(p, K)))
    elif args.model == "heston":
        res = _result(args)
        if res.model != "heston":
            raise DomainError("parameters are not a Heston calibration")
        p = res.params
        ens = simulate_forwards(p, _mc(args))
        c, cs = price_call_quote(p, K, ens=ens)
        pu, ps = price_put_quote(p, K, ens=ens)
        out.update(pair=res.pair, call=c, call_se=cs, put=pu, put_se=ps, seed=args.seed)
    else:
        p = _sabr_params(args)
        ens = simulate_sabr(p, _mc(args))
        c, cs = sabr_call_quote(p, K, ens=ens)
        pu, ps = sabr_put_quote(p, K, ens=ens)
        out.update(call=c, call_se=cs, put=pu, put_se=ps, seed=args.seed)
    _emit(args, json.dumps(out, indent=2) + "\n")


def _spot_delta(f0, K, T, sigma, r_quote, r_base):
    F = f0 * math.exp((r_quote - r_base) * T)
    s = sigma * math.sqrt(T)
    return math.exp(-r_base * T) * float(norm_cdf((math.log(F / K) + 0.5 * s * s) / s))


def emit_smile_grid(model, params, pair=None, n=50, mc=None):
    """Rows (K, spot delta of the call, implied vol) on [K_put25 0.9, K_call25 1.1]."""
    if n < 2:
        raise DomainError("grid needs at least two strikes")
    p = params.params if isinstance(params, CalibrationResult) else params
    inverse = _orientation(params, pair) if isinstance(params, CalibrationResult) else False
    anchors = np.asarray(params.strikes if isinstance(params, CalibrationResult) else
                         (p.f0 * 0.9, p.f0 * 1.1))
    if inverse:
        anchors = 1.0 / anchors
    K = np.linspace(anchors.min() * 0.9, anchors.max() * 1.1, n)
    f0, rq, rb = p.f0, p.r_quote, p.r_base
    if inverse:
        f0, rq, rb = 1.0 / f0, p.r_base, p.r_quote
    if model == "esn":
        vols = esn_inverse_smile(p, 1.0 / K) if inverse else esn_smile(p, K)
    elif model == "heston":
        mc = mc or McControls(1_000_000, 0.05)
        ens = simulate_forwards(p, mc)
        vols = (implied_vols_base(p, 1.0 / K, ens=ens) if inverse
                else implied_vols_quote(p, K, ens=ens))[0]
    elif model == "sabr":
        vols = _sabr_smile(p, K, mc or McControls(1_000_000, 0.05))
    else:
        raise DomainError(f"smile not available for model {model!r}")
    return [(float(k), _spot_delta(f0, k, p.T, v, rq, rb), float(v)) for k, v in zip(K, vols)]


def _sabr_smile(p, K, mc):
    ens = simulate_sabr(p, mc)
    c, _ = sabr_call_quote(p, K, ens=ens)
    pu, _ = sabr_put_quote(p, K, ens=ens)
    F = p.forward
    out = []
    for k, ci, pi in zip(K, c, pu):
        kind, price = ("call", ci) if k >= F else ("put", pi)
        out.append(implied_vol(float(price), p.f0, k, p.T, p.r_quote, p.r_base, kind))
    return out


def cmd_smile(args):
    _require(args, "model", "params")
    n = args.grid or 50
    if args.model == "sabr":
        rows = emit_smile_grid("sabr", _sabr_params(args), n=n, mc=_mc(args))
    elif args.model in ("esn", "heston"):
        res = _result(args)
        if res.model != args.model:
            raise DomainError(f"parameters are a {res.model} calibration")
        rows = emit_smile_grid(args.model, res, args.pair, n, _mc(args))
    else:
        raise _Usage("smile supports --model esn, heston or sabr")
    text = "K,delta,vol\n" + "".join(f"{_num(k)},{_num(d)},{_num(v)}\n" for k, d, v in rows)
    _emit(args, text)


def _triangle_market(args):
    _require(args, "triangle")
    return mf.TriangleMarket.from_snapshot(_snapshot(args), *args.triangle)


def cmd_density(args):
    t = _triangle_market(args)
    g = mf.scaled_joint_density(t, n=args.grid or 200)
    if args.out:
        g.write_csv(args.out)
        side = args.out.rsplit(".", 1)[0] + ".json"
        g.write_metadata(side)
    else:
        sys.stdout.write(json.dumps(g.metadata(), indent=2) + "\n")


def cmd_basket(args):
    _require(args, "weights", "strike")
    t = _triangle_market(args)
    w1, w2 = args.weights
    c1, c2, c3 = args.triangle
    out = {"triangle": list(args.triangle), "weights": [w1, w2], "strike": args.strike,
           f"price_{c3}": mf.basket_put_c3(t, w1, w2, args.strike),
           f"price_{c1}": mf.basket_put_c1(t, w1, w2, args.strike),
           "payoff_" + c3: f"(K - {w1!r} S_{c1}/{c3} - {w2!r} S_{c2}/{c3})+",
           "payoff_" + c1: f"(K - {w1!r} S_{c3}/{c1} - {w2!r} S_{c2}/{c1})+"}
    _emit(args, json.dumps(out, indent=2) + "\n")


def cmd_verify_symmetry(args):
    _require(args, "params")
    if args.model == "sabr":
        p = _sabr_params(args)
        _require(args, "strike")
        ens = simulate_sabr(p, _mc(args))
        c, cs = sabr_call_quote(p, args.strike, ens=ens)
        pb, _ = sabr_put_base(p, args.strike, ens=ens)
        out = {"model": "sabr", "call": c, "f0_K_put_inverse": p.f0 * args.strike * pb,
               "se": cs, "deviation": c - p.f0 * args.strike * pb}
    else:
        res = _result(args)
        out = verify_inverse_consistency(res, _mc(args) if res.model == "heston" else None).to_dict()
        out["model"] = res.model
    _emit(args, json.dumps(out, indent=2) + "\n")


COMMANDS = {
    "calibrate-esn": cmd_calibrate_esn,
    "calibrate-heston": cmd_calibrate_heston,
    "price": cmd_price,
    "smile": cmd_smile,
    "density": cmd_density,
    "basket": cmd_basket,
    "verify-symmetry": cmd_verify_symmetry,
}


def run(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.verb](args)
    except _Usage as exc:
        ap.print_usage(sys.stderr)
        sys.stderr.write(f"fxip: error: {exc}\n")
        return 2
    except (DomainError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "verb": args.verb}
        sys.stderr.write(json.dumps(err) + "\n")
        return 1
    return 0


def main():
    sys.exit(run())
