"""Command-line entry point: drive, trace, energy, loopmass, verify.

Settings resolve as flags > environment > --config JSON file > defaults.
Every JSON payload echoes the resolved configuration.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import tempfile

import numpy as np

from .conformal import HullSpec, read_curve, write_curve
from .energy import chordal_energy, loop_energy
from .errors import LoewnerLabError
from .loewner import DrivingFunction, compute_driving, read_driving, solve_forward, write_driving
from .loops import (CompactSet, Domain, MCParams, brownian_mass, default_seed, schwarzian_bridge_mass,
                    werner_mass)
from . import verify as V

THREADS_ENV = "LOEWNER_LAB_THREADS"
DEFAULTS = {"seed": None, "threads": None, "samples": 100_000, "streams": 8, "n": 2000}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="JSON file with defaults (seed, threads, samples, streams, n)")
    p.add_argument("--seed", type=int, help="master seed (overrides LOEWNER_LAB_SEED)")
    p.add_argument("--threads", type=int, help="worker threads (overrides LOEWNER_LAB_THREADS)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from JSON payloads")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-o", "--output", help="output path (default: standard output)")


def _mc(p):
    p.add_argument("--samples", type=int, help="Monte Carlo proposals")
    p.add_argument("--streams", type=int, help="independent worker streams")
    p.add_argument("--t-range", type=float, nargs=2, metavar=("TMIN", "TMAX"))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="loewner-lab", description="Loewner energies and loop-measure identities.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("drive", help="curve file -> driving function file")
    p.add_argument("curve")
    p.add_argument("-n", type=int, help="zipper resolution")
    _common(p)

    p = sub.add_parser("trace", help="driving function file -> curve file")
    p.add_argument("driving")
    p.add_argument("-n", type=int, help="resample the driving function to n points")
    p.add_argument("--substeps", type=int, default=1)
    _common(p)

    p = sub.add_parser("energy", help="chordal or loop energy")
    p.add_argument("path", help=".curve or .drv file")
    p.add_argument("--mode", choices=("chord", "loop"), default="chord")
    p.add_argument("-n", type=int, help="zipper resolution")
    p.add_argument("--eps", type=float, nargs="+", help="removed-arc schedule for loops")
    p.add_argument("--root", type=int, default=0)
    _common(p)

    p = sub.add_parser("loopmass", help="Brownian, Werner or Schwarzian loop mass")
    p.add_argument("--kind", choices=("brownian", "werner", "schwarzian"), default="brownian")
    p.add_argument("--set", dest="sets", action="append", default=[],
                   help="segment:P,Q | circle:R[,C] | disk:C,R | semidisk:X0,R | slit:X0,H | exterior:R")
    p.add_argument("--domain", default=None, help="C | H | H-semidisk:X0,R | H-slit:X0,H")
    p.add_argument("--driving", help="driving file for --kind schwarzian (default W = 0)")
    p.add_argument("--hull", default="semidisk:2,1")
    p.add_argument("-T", type=float, default=1.0)
    p.add_argument("-n", type=int, help="grid points for the default driving function")
    _mc(p)
    _common(p)

    p = sub.add_parser("verify", help="run an identity check")
    p.add_argument("identity", choices=("chordal_restriction", "two_domain", "loop_restriction", "cutoff"))
    p.add_argument("--driving", help="driving file (default W = 0)")
    p.add_argument("--hull", default="semidisk:2,1")
    p.add_argument("--hull2", default=None, help="second hull for two_domain (default: none, D' = H)")
    p.add_argument("-T", type=float, default=1.0)
    p.add_argument("-n", type=int, help="grid points")
    p.add_argument("--route", choices=("schwarzian", "montecarlo"), default="schwarzian")
    p.add_argument("-c", type=float, default=0.2, help="f(z) = z + c z^2")
    p.add_argument("--eps", type=float, nargs="+", default=[0.3, 0.2, 0.1])
    p.add_argument("--reference", type=float, default=None)
    p.add_argument("-k", type=float, default=3.0, help="pass if |residual| <= k * combined error")
    p.add_argument("--out-dir", help="write one report per file plus index.json")
    _mc(p)
    _common(p)
    return ap


def _resolve(args) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg.update({k: v for k, v in json.load(fh).items() if k in DEFAULTS})
    env_seed = os.environ.get("LOEWNER_LAB_SEED")
    if env_seed:
        cfg["seed"] = int(env_seed)
    env_threads = os.environ.get(THREADS_ENV)
    if env_threads:
        cfg["threads"] = int(env_threads)
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg["seed"] is None:
        cfg["seed"] = default_seed()
    if cfg["threads"] is None:
        cfg["threads"] = os.cpu_count() or 1
    return cfg


def _complex(s):
    return complex(s.replace(" ", ""))


def parse_set(spec: str) -> CompactSet:
    kind, _, rest = spec.partition(":")
    a = [x for x in rest.split(",") if x]
    if kind == "segment":
        return CompactSet.segment(_complex(a[0]), _complex(a[1]))
    if kind == "circle":
        return CompactSet.circle(float(a[0]), center=_complex(a[1]) if len(a) > 1 else 0.0)
    if kind == "disk":
        return CompactSet.disk(_complex(a[0]), float(a[1]))
    if kind in ("semidisk", "slit"):
        return CompactSet.hull(parse_hull(spec))
    if kind == "exterior":
        return CompactSet.exterior(float(a[0]))
    raise LoewnerLabError(f"InvalidInput: unknown set {spec!r}")


def parse_hull(spec: str) -> HullSpec:
    kind, _, rest = spec.partition(":")
    x0, size = (float(v) for v in rest.split(","))
    return HullSpec.semidisk(x0, size) if kind == "semidisk" else HullSpec.vertical_slit(x0, size)


def parse_domain(spec):
    if spec in (None, "C"):
        return Domain.plane()
    if spec == "H":
        return Domain.half_plane()
    if spec.startswith("H-"):
        return Domain.half_plane_minus(*(parse_hull(s) for s in spec[2:].split("+")))
    raise LoewnerLabError(f"InvalidInput: unknown domain {spec!r}")


def _params(cfg, args) -> MCParams:
    return MCParams(n=int(cfg["samples"]), seed=int(cfg["seed"]), streams=int(cfg["streams"]),
                    threads=int(cfg["threads"]), t_range=tuple(args.t_range) if getattr(args, "t_range", None) else None)


def _emit(args, cfg, payload: dict):
    echo = {"subcommand": args.cmd, **{k: v for k, v in vars(args).items() if k not in ("no_timestamp",)}}
    echo.update({k: cfg[k] for k in DEFAULTS})
    out = {"config": V._clean(echo), "result": V._clean(payload)}
    if not args.no_timestamp:
        out["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    if args.format == "csv":
        text = "key,value\n" + "".join(f"{k},{_csv(v)}\n" for k, v in _flatten(out["result"]).items())
    else:
        text = json.dumps(out, sort_keys=True, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out.update(_flatten({str(i): x for i, x in enumerate(v)}, key + "."))
        else:
            out[key] = v
    return out


def _driving(args, T):
    if getattr(args, "driving", None):
        return read_driving(args.driving)
    n = args.n or 2000
    return DrivingFunction(np.linspace(0, T, n + 1), np.zeros(n + 1))


def _write_file(args, writer, obj, comment):
    if args.output:
        writer(args.output, obj, comment=comment)
        return
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "out")
        writer(path, obj, comment=comment)
        with open(path, encoding="utf-8") as fh:
            sys.stdout.write(fh.read())


def cmd_drive(args, cfg):
    curve = read_curve(args.curve)
    n = int(args.n or cfg["n"])
    w = compute_driving(curve, n, check_simple=True)
    _write_file(args, write_driving, w, f"driving function, n={n}, source={os.path.basename(args.curve)}")
    return 0


def cmd_trace(args, cfg):
    w = read_driving(args.driving)
    if args.n:
        w = DrivingFunction.from_function(w, w.T, args.n)
    curve = solve_forward(w, substeps=args.substeps)
    _write_file(args, write_curve, curve, f"trace, substeps={args.substeps}, source={os.path.basename(args.driving)}")
    return 0


def cmd_energy(args, cfg):
    n = int(args.n or cfg["n"])
    if args.path.endswith(".drv"):
        if args.mode == "loop":
            raise LoewnerLabError("InvalidInput: loop mode needs a curve file")
        w = read_driving(args.path)
        _emit(args, cfg, {"value": chordal_energy(w), "resolution": len(w)})
        return 0
    curve = read_curve(args.path)
    if args.mode == "loop":
        kw = {"eps_schedule": tuple(args.eps)} if args.eps else {}
        rep = loop_energy(curve, root=args.root, n=n, **kw)
        _emit(args, cfg, json.loads(rep.to_json()))
    else:
        w = compute_driving(curve, n, check_simple=True)
        _emit(args, cfg, {"value": chordal_energy(w), "resolution": n})
    return 0


def cmd_loopmass(args, cfg):
    if args.kind == "schwarzian":
        hull = parse_hull(args.hull)
        w = _driving(args, args.T)
        _emit(args, cfg, {"value": schwarzian_bridge_mass(w, hull, args.T)})
        return 0
    if len(args.sets) != 2:
        raise LoewnerLabError("InvalidInput: give exactly two --set options")
    k1, k2 = (parse_set(s) for s in args.sets)
    params = _params(cfg, args)
    if args.kind == "brownian":
        est = brownian_mass(k1, k2, parse_domain(args.domain or "H"), params)
    else:
        est = werner_mass(k1, k2, parse_domain(args.domain or "C"), params)
    _emit(args, cfg, est.to_dict())
    return 0


def cmd_verify(args, cfg):
    params = _params(cfg, args)
    if args.identity == "chordal_restriction":
        w = _driving(args, args.T)
        reports = [V.verify_chordal_restriction(w, parse_hull(args.hull), args.T,
                                                params if args.route == "montecarlo" else None, route=args.route,
                                                k=args.k)]
        series = None
    elif args.identity == "two_domain":
        w = _driving(args, args.T)
        h1 = parse_hull(args.hull) if args.hull != "none" else None
        h2 = parse_hull(args.hull2) if args.hull2 else None
        reports = [V.verify_two_domain(w, h1, h2, args.T, params, k=args.k)]
        series = None
    elif args.identity == "loop_restriction":
        reports = [V.verify_loop_restriction(args.c, params=params, k=args.k)]
        series = None
    else:
        reports, series = V.verify_cutoff(args.c, tuple(args.eps), params, reference=args.reference, k=args.k)
    stamp = None if args.no_timestamp else _dt.datetime.now(_dt.timezone.utc).isoformat()
    if args.out_dir:
        V.write_reports(reports, args.out_dir, stamp)
    payload = {"reports": [r.to_dict() for r in reports], "all_pass": all(r.passed for r in reports)}
    if series is not None:
        payload["series"] = series
    _emit(args, cfg, payload)
    return 0 if payload["all_pass"] else 1


COMMANDS = {"drive": cmd_drive, "trace": cmd_trace, "energy": cmd_energy,
            "loopmass": cmd_loopmass, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        return COMMANDS[args.cmd](args, cfg)
    except LoewnerLabError as exc:
        msg = str(exc)
        name = type(exc).__name__
        print(msg if msg.startswith(name) or name == "LoewnerLabError" else f"{name}: {msg}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
