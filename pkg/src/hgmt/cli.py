"""Command line runner: generate samples, run the estimators, verify.

Exit codes: 0 on success, 1 when a check fails or an estimator rejects its
input, 2 for bad arguments or unreadable input files. Every JSON or CSV
artifact embeds the configuration and seed that produced it.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .flatness import (auto_centers, beta_profile, dyadic_scale_list, wgl_energy,
                       write_profile_csv)
from .sets import gen_corner, gen_horizontal_lines, gen_vertical_plane, load_set, save_set
from .sio import c2_energy, kernel_from_name, l2_uniformity, t_eps, witness_lower_bound
from .symclose import growth_exponent, h_closure, packing_check
from .symmetry import lsc_energy, tau_symmetric
from . import verify


class ConfigError(Exception):
    """Bad arguments or input files; exit code 2."""


def _point(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,t, got {text!r}")
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,t, got {text!r}")
    return vals


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def _int_triples(text):
    try:
        rows = [[int(v) for v in part.split(",")] for part in text.split(";") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,t2;x,y,t2;..., got {text!r}")
    if not rows or any(len(r) != 3 for r in rows):
        raise argparse.ArgumentTypeError(f"expected x,y,t2;x,y,t2;..., got {text!r}")
    return rows


def _intervals(text):
    try:
        return [tuple(float(v) for v in part.split(":")) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b,c:d, got {text!r}")


def _load(path):
    try:
        return load_set(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read set file {path}: {exc}") from exc


def _config(args):
    skip = {"func", "json"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, doc):
    text = json.dumps(doc, sort_keys=True, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _threads(args):
    return args.threads or os.cpu_count() or 1


# subcommands

def cmd_verify(args):
    checks = verify.run_suite(args.suite, seed=args.seed)
    ok = all(c.passed for c in checks)
    for c in checks:
        print(f"{c.seconds:8.2f}s {c.name}", file=sys.stderr)
    if args.json or args.out:
        doc = {"config": _config(args), "seed": args.seed, "passed": ok,
               "checks": [{k: v for k, v in c.to_json().items() if k != "seconds"} for c in checks]}
        _emit(args, doc)
    else:
        for c in checks:
            print(c.line())
        print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return 0 if ok else 1


def cmd_generate(args):
    if not args.out:
        raise ConfigError("generate needs --out")
    if args.shape == "vertical-plane":
        S = gen_vertical_plane(args.theta, args.c, args.extent, args.h, args.t_extent)
    elif args.shape == "corner":
        S = gen_corner(args.extent, args.h, args.t_extent)
    else:
        if not args.intervals:
            raise ConfigError("horizontal-lines needs --intervals")
        S = gen_horizontal_lines(args.theta, args.intervals, args.extent, args.h, args.t_extent)
    S.descriptor["config"] = _config(args)
    S.descriptor["seed"] = args.seed
    save_set(S, args.out)
    print(f"wrote {len(S)} points to {args.out}", file=sys.stderr)
    return 0


def cmd_closure(args):
    E = h_closure(np.array(args.seeds, dtype=np.int64), args.window, mode=args.mode)
    doc = {"config": _config(args), "seed": args.seed, "mode": E.mode, "window": E.window,
           "converged": E.converged, "iterations": E.iterations,
           "period_t2": E.period, "box_count": int(len(E.points_in_box(min(E.window, args.box))))}
    if args.radii:
        fit = growth_exponent(E, args.radii)
        doc["growth"] = {"exponent": fit.exponent, "radii": fit.radii, "counts": fit.counts}
        doc["packing"] = []
        for r in args.radii:
            pc = packing_check(E, r)
            doc["packing"].append(vars(pc) | {"violated": pc.violated})
    if args.with_points:
        doc["points"] = E.points_in_box(min(E.window, args.box)).tolist()
    _emit(args, doc)
    return 0


def _centers(S, spec, r_max, seed):
    if spec.startswith("auto:"):
        return auto_centers(S, int(spec[5:]), r_max, seed)
    try:
        return np.array([_point(part) for part in spec.split(";") if part])
    except argparse.ArgumentTypeError as exc:
        raise ConfigError(str(exc)) from exc


def _scales(S, spec):
    if spec.startswith("dyadic:"):
        return dyadic_scale_list(S, int(spec[7:]))
    try:
        return _floats(spec)
    except argparse.ArgumentTypeError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_beta(args):
    S = _load(args.set)
    scales = _scales(S, args.scales)
    centers = _centers(S, args.centers, max(scales), args.seed)
    rows = beta_profile(S, centers, scales, n_jobs=_threads(args))
    config = _config(args) | {"seed": args.seed}
    write_profile_csv(rows, args.out or sys.stdout, config)
    for r in rows:
        if r["error"]:
            print(f"warning: {r['error']}", file=sys.stderr)
    return 0


def cmd_symmetry(args):
    S = _load(args.set)
    v = tau_symmetric(S, args.center, args.r, args.tau, pair_cap=args.pair_cap, seed=args.seed)
    doc = {"config": _config(args), "seed": args.seed, "verdict": v.to_json()}
    if args.witness_bound and not v.symmetric:
        wb = witness_lower_bound(S, *v.witness_pair, args.r, args.tau)
        doc["witness_bound"] = {"value": wb.value, "scale": wb.scale, "min_integrand": wb.min_integrand,
                                "per_base": wb.per_base}
    _emit(args, doc)
    return 0


def cmd_carleson(args):
    S = _load(args.set)
    p0 = np.array(args.p0)
    if args.mode == "wgl":
        rep = wgl_energy(S, p0, args.R, args.eps, r_min=args.r_min, n_jobs=_threads(args))
    elif args.mode == "lsc":
        rep = lsc_energy(S, p0, args.R, args.tau, r_min=args.r_min, pair_cap=args.pair_cap,
                         seed=args.seed, n_jobs=_threads(args))
    else:
        rep = c2_energy(S, kernel_from_name(args.kernel), p0, args.R, args.k_max)
    _emit(args, {"config": _config(args), "seed": args.seed, "report": rep.to_json()})
    return 0


def cmd_sio(args):
    S = _load(args.set)
    K = kernel_from_name(args.kernel)
    doc = {"config": _config(args), "seed": args.seed}
    if args.at is not None:
        doc["values"] = [t_eps(K, S, args.f, e, args.at) for e in args.eps]
    else:
        doc["report"] = l2_uniformity(K, S, args.f, args.eps).to_json()
    _emit(args, doc)
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    parser = argparse.ArgumentParser(prog="hgmt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run the named numerical checks")
    p.add_argument("--suite", choices=verify.SUITES + ("all",), default="all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", parents=[common], help="write a sampled set")
    p.add_argument("--shape", choices=("vertical-plane", "corner", "horizontal-lines"), required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--extent", type=float, required=True)
    p.add_argument("--t-extent", type=float, default=None, help="default: extent squared")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--intervals", type=_intervals, default=None, help="t intervals a:b,c:d")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("closure", parents=[common], help="symmetric closure of integer seeds")
    p.add_argument("--seeds", type=_int_triples, default=[[0, 0, 0], [1, 0, 0], [0, 1, 0]],
                   help="x,y,t2;... with t2 twice the height")
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--mode", choices=("auto", "box", "fiber"), default="auto")
    p.add_argument("--radii", type=_floats, default=None, help="ball radii for growth and packing")
    p.add_argument("--box", type=int, default=8, help="box size for listed points and counts")
    p.add_argument("--with-points", action="store_true")
    p.set_defaults(func=cmd_closure)

    p = sub.add_parser("beta", parents=[common], help="beta profile as CSV")
    p.add_argument("--set", required=True)
    p.add_argument("--centers", default="auto:64", help="auto:N or x,y,t;x,y,t")
    p.add_argument("--scales", default="dyadic:6", help="dyadic:N or r1,r2,...")
    p.set_defaults(func=cmd_beta)

    p = sub.add_parser("symmetry", parents=[common], help="tau-symmetry test of one ball")
    p.add_argument("--set", required=True)
    p.add_argument("--center", type=_point, default=[0.0, 0.0, 0.0])
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--pair-cap", type=int, default=20_000)
    p.add_argument("--witness-bound", action="store_true", help="also bound the bump pairing of a witness")
    p.set_defaults(func=cmd_symmetry)

    p = sub.add_parser("carleson", parents=[common], help="Carleson energy report")
    p.add_argument("--mode", choices=("wgl", "lsc", "c2"), required=True)
    p.add_argument("--set", required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--p0", type=_point, default=[0.0, 0.0, 0.0])
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--r-min", type=float, default=None)
    p.add_argument("--pair-cap", type=int, default=2000)
    p.add_argument("--kernel", default="bump:0,0.75,0,0.25")
    p.add_argument("--k-max", type=int, default=2)
    p.set_defaults(func=cmd_carleson)

    p = sub.add_parser("sio", parents=[common], help="truncated singular integrals")
    p.add_argument("--set", required=True)
    p.add_argument("--kernel", default="riesz-x")
    p.add_argument("--f", default="ball:1")
    p.add_argument("--eps", type=_floats, default=[0.5, 0.25, 0.125, 0.0625])
    p.add_argument("--at", type=_point, default=None, help="evaluate at one point instead of L2 norms")
    p.set_defaults(func=cmd_sio)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
