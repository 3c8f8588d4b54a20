"""Command line entry point: ``privsignal <command> ...``.

Every command accepts ``--config FILE`` with a JSON object of option values;
options given on the command line win.  The exit status is 0 exactly when
every check performed by the command passes.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import generators, io
from .auctions import MultiBidderInstance, audit_multi_mechanism, lift_two_bidders, lookahead_auction
from .core import Mode, SignalPricingInstance, erd_grid, example1_instance, example2_instance, build_instance
from .duality import lagrangian_bound
from .errors import InvalidConfig, PrivSignalError, SolverFailure
from .experiments import EXPERIMENTS, run_experiment
from .lp_engine import DEFAULT_CELL_CAP, solve_multi_bidder, solve_single_buyer
from .mechanisms import audit_mechanism, example1_mechanism, example2_mechanism
from .modes import ConstraintMode
from .pricing import drev

log = logging.getLogger("privsignal")

FALLBACKS = {
    "mode": "mass", "H": 1e9, "eps": 1e-4, "n_points": 400, "m_levels": 4, "seed": 0, "n_signals": None,
    "spacing": "geometric", "lift_eps": 1e-3, "ir": "expost", "payments": "nonneg", "ic": "bic",
    "backend": "highs", "cap": DEFAULT_CELL_CAP, "tol": 1e-7, "delta": 0.05, "relative": False,
}


def _add_mode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ir", choices=["expost", "interim"], default=None)
    p.add_argument("--payments", choices=["free", "nonneg"], default=None)
    p.add_argument("--ic", choices=["bic", "dsic"], default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="privsignal", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON file with option defaults")
        p.add_argument("-o", "--output", type=Path, help="write the JSON result here")
        return p

    g = common(sub.add_parser("gen", help="generate an instance"))
    g.add_argument("family", choices=["example1", "example2", "erd", "random-regular", "mixture",
                                      "regular-profile", "random-profile", "generic", "lift-example1"])
    g.add_argument("--mode", choices=["mass", "quadrature"])
    g.add_argument("--H", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--n-points", type=int, dest="n_points")
    g.add_argument("--m-levels", type=int, dest="m_levels")
    g.add_argument("--seed", type=int)
    g.add_argument("--n-signals", type=int, dest="n_signals")
    g.add_argument("--spacing", choices=["geometric", "linear"])
    g.add_argument("--lift-eps", type=float, dest="lift_eps")

    d = common(sub.add_parser("drev", help="optimal revenue with the signal made public"))
    d.add_argument("instance", type=Path)

    s = common(sub.add_parser("solve", help="solve the optimal-mechanism LP"))
    s.add_argument("instance", type=Path)
    _add_mode_flags(s)
    s.add_argument("--backend", choices=["highs", "simplex"])
    s.add_argument("--cap", type=int, help="maximum number of positive-mass cells or profiles")
    s.add_argument("--highest-only", action="store_true", help="profile instances: allocate only to U_i winners")
    s.add_argument("--tol", type=float, help="re-audit tolerance")
    s.add_argument("--relative", action="store_true", default=None, help="scale the tolerance by value/payment size")

    a = common(sub.add_parser("audit", help="audit a mechanism against an instance"))
    a.add_argument("instance", type=Path)
    a.add_argument("mechanism", help="mechanism JSON, or 'example1' / 'example2' for the closed forms")
    _add_mode_flags(a)
    a.add_argument("--tol", type=float)
    a.add_argument("--relative", action="store_true", default=None)

    b = common(sub.add_parser("bound", help="Lagrangian upper bound versus the public-signal revenue"))
    b.add_argument("instance", type=Path)
    b.add_argument("--per-signal", action="store_true")
    b.add_argument("--csv", type=Path)
    b.add_argument("--delta", type=float)

    la = common(sub.add_parser("lookahead", help="run the lookahead auction on a profile instance"))
    la.add_argument("instance", type=Path)
    la.add_argument("--tol", type=float)

    e = common(sub.add_parser("experiment", help="run a named experiment"))
    e.add_argument("name", choices=sorted(EXPERIMENTS))
    e.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override an experiment parameter (value parsed as JSON)")
    return ap


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise InvalidConfig("config must be a JSON object")
    args.file_config = cfg
    for key, fallback in FALLBACKS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, cfg.get(key, fallback))
    if getattr(args, "output", None) is None and "output" in cfg:
        args.output = Path(cfg["output"])
    return args


def _emit(obj: dict, path: Path | None) -> None:
    text = io.dump_json(obj, path)
    if path is None:
        print(text)
    else:
        log.info("wrote %s", path)


def _constraint_mode(args) -> ConstraintMode:
    return ConstraintMode.parse(args.ir, args.payments, args.ic)


def cmd_gen(args) -> int:
    fam = args.family
    if fam == "example1":
        inst = example1_instance(args.H, args.eps, args.n_points, args.mode, args.spacing)
    elif fam == "example2":
        inst = example2_instance(args.m_levels, args.mode)
    elif fam == "erd":
        dist = erd_grid(args.H, args.n_points, args.spacing)
        inst = build_instance(dist.grid, ["*"], dist.pmf[:, None], args.mode, meta={"family": "erd", "H": args.H})
    elif fam == "random-regular":
        inst = generators.random_regular_instance(args.seed, args.n_points, args.n_signals, args.mode)
    elif fam == "mixture":
        inst = generators.random_mixture_instance(args.seed, 2, args.n_points, args.n_signals, args.mode)
    elif fam == "generic":
        inst = generators.generic_instance(args.seed, mode=args.mode)
    elif fam == "regular-profile":
        _emit(io.profile_instance_to_dict(generators.random_regular_profile_instance(
            args.seed, args.n_points, mode=args.mode)), args.output)
        return 0
    elif fam == "random-profile":
        _emit(io.profile_instance_to_dict(generators.random_profile_instance(args.seed, mode=args.mode)), args.output)
        return 0
    else:
        base = example1_instance(args.H, args.eps, args.n_points, args.mode, args.spacing)
        _emit(io.profile_instance_to_dict(lift_two_bidders(base, args.lift_eps)), args.output)
        return 0
    _emit(io.instance_to_dict(inst), args.output)
    return 0


def _load_signal_instance(path: Path) -> SignalPricingInstance:
    obj = io.load_any(path)
    if not isinstance(obj, SignalPricingInstance):
        raise InvalidConfig(f"{path} is not a signal instance")
    return obj


def cmd_drev(args) -> int:
    _emit(drev(_load_signal_instance(args.instance)).to_dict(), args.output)
    return 0


def cmd_solve(args) -> int:
    obj = io.load_any(args.instance)
    mode = _constraint_mode(args)
    if isinstance(obj, MultiBidderInstance):
        sol = solve_multi_bidder(obj, mode, args.backend, args.cap, restrict_to_winner=args.highest_only)
        aud = audit_multi_mechanism(obj, sol.mechanism)
        ok = aud.passes(mode, args.tol)
        mech = io.multi_mechanism_to_dict(sol.mechanism)
    elif isinstance(obj, SignalPricingInstance):
        sol = solve_single_buyer(obj, mode, args.backend, args.cap)
        aud = audit_mechanism(obj, sol.mechanism, mode=mode)
        ok = aud.passes(mode, args.tol, relative=bool(args.relative))
        mech = io.mechanism_to_dict(sol.mechanism)
    else:
        raise InvalidConfig(f"{args.instance} is not an instance")
    _emit({"status": sol.status, "objective": sol.objective, "mode": mode.to_dict(), "backend": sol.backend,
           "audit": aud.to_dict(), "audit_pass": ok, "mechanism": mech,
           "certificate": None if sol.certificate is None else np.asarray(sol.certificate).tolist()},
          args.output)
    return 0 if ok else 1


def cmd_audit(args) -> int:
    inst = _load_signal_instance(args.instance)
    if args.mechanism == "example1":
        mech = example1_mechanism(inst)
    elif args.mechanism == "example2":
        mech = example2_mechanism(inst)
    else:
        mech = io.load_any(args.mechanism)
    mode = _constraint_mode(args)
    rep = audit_mechanism(inst, mech, mode=mode)
    ok = rep.passes(mode, args.tol, relative=bool(args.relative))
    _emit({**rep.to_dict(), "mode": mode.to_dict(), "tol": args.tol, "pass": ok}, args.output)
    return 0 if ok else 1


def cmd_bound(args) -> int:
    inst = _load_signal_instance(args.instance)
    rep = lagrangian_bound(inst, args.delta)
    out = rep.to_dict()
    if not args.per_signal:
        out.pop("per_signal")
    if args.csv:
        import csv
        with args.csv.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["signal", "pos_h", "pos_tg", "drev", "ratio_h", "ratio_tg", "regular", "holds"])
            for b in rep.per_signal:
                d = b.to_dict()
                w.writerow([json.dumps(d["signal"])] + [d[k] for k in
                           ("pos_h", "pos_tg", "drev", "ratio_h", "ratio_tg", "regular", "holds")])
    regular = all(b.regular for b in rep.per_signal if b.drev > 0)
    ok = (not regular) or all(b.holds for b in rep.per_signal)
    out["jointly_regular"] = regular
    out["pass"] = ok
    _emit(out, args.output)
    return 0 if ok else 1


def cmd_lookahead(args) -> int:
    obj = io.load_any(args.instance)
    if not isinstance(obj, MultiBidderInstance):
        raise InvalidConfig(f"{args.instance} is not a profile instance")
    res = lookahead_auction(obj)
    aud = audit_multi_mechanism(obj, res.mechanism, all_profiles=True)
    dsic_mode = ConstraintMode.parse("expost", "nonneg", "dsic")
    ok = aud.passes(dsic_mode, args.tol)
    prices = [{"winner": i, "opponents": list(opp), "price": None if np.isnan(p) else p}
              for (i, opp), p in res.prices.items()]
    _emit({"revenue": res.revenue, "revenue_by_bidder": list(res.revenue_by_bidder), "prices": prices,
           "winner": res.winner.tolist(), "audit": aud.to_dict(), "pass": ok,
           "mechanism": io.multi_mechanism_to_dict(res.mechanism)}, args.output)
    return 0 if ok else 1


def _parse_sets(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise InvalidConfig(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            out[k.strip()] = v
    return out


def cmd_experiment(args) -> int:
    overrides = {k: v for k, v in args.file_config.items() if k not in ("output",)}
    overrides.update(_parse_sets(args.set))
    out = args.output if args.output is not None else Path("results")
    rep = run_experiment(args.name, overrides, out)
    for m in rep.metrics:
        flag = "PASS" if m.passed else ("info" if m.passed is None else "FAIL")
        print(f"[{flag}] {args.name}: {m.name} = {m.value}")
    print(f"wrote {out / (args.name + '.csv')} and {out / (args.name + '.json')}")
    return 0 if rep.passed else 1


COMMANDS = {"gen": cmd_gen, "drev": cmd_drev, "solve": cmd_solve, "audit": cmd_audit, "bound": cmd_bound,
            "lookahead": cmd_lookahead, "experiment": cmd_experiment}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args = _merge_config(args)
        return COMMANDS[args.command](args)
    except (PrivSignalError, SolverFailure, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
