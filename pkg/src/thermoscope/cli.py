"""Command-line front end: each subcommand runs one pipeline and writes one artifact.

Artifacts are deterministic: floats carry 12 significant digits, keys are
sorted, and wall-clock timings only ever go to the optional --timings sidecar.
JSON artifacts carry ``"schema": "thermoscope/1"`` and the run configuration;
CSV artifacts carry the same in a leading ``#`` comment line.

Exit codes: 0 success, 1 error, 2 undetermined or inconclusive outcome,
64 malformed command line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from typing import List, Optional

from . import __version__
from .bowen import parse_beta_range, pressure_bowen, transition_scan
from .certify import CertifyBudgets, certify_transition, enumerate_periodic_orbits
from .errors import DomainError, Inconclusive, ThermoscopeError
from .induced import two_variable_pressure
from .mp_map import MapParams, build_marked_orbit
from .potentials import builtin, load_potential_file
from .pressure import pressure_partition, pressure_tree

SCHEMA = "thermoscope/1"
EXIT_OK, EXIT_ERROR, EXIT_UNDETERMINED, EXIT_USAGE = 0, 1, 2, 64

# options that steer execution but never change an artifact
_RUNTIME_ONLY = {"out", "format", "workers", "timings", "func"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"{text!r} must be positive and finite")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return v


def _finite_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"{text!r} must be finite")
    return v


def _beta_range(text):
    try:
        return parse_beta_range(text)
    except (DomainError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def fmt(x) -> str:
    """12 significant digits; infinities and nan spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def _clean(obj):
    """Round floats for a JSON payload; non-finite floats become strings."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else fmt(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return _clean(obj.item())
    return str(obj)


def run_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _RUNTIME_ONLY and not k.startswith("_")}


def _json_text(args, result: dict) -> str:
    payload = {"schema": SCHEMA, "command": args.command, "config": run_config(args), "result": result}
    return json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n"


def _csv_text(args, header: List[str], rows) -> str:
    buf = io.StringIO()
    meta = json.dumps(_clean({"schema": SCHEMA, "command": args.command, "config": run_config(args)}),
                      sort_keys=True)
    buf.write(f"# {meta}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(args, text: str):
    if args.out is None or args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


# --- shared resolution ---------------------------------------------------

def _params(args) -> MapParams:
    return MapParams(args.alpha)


def _potential(args, params):
    name = args.potential
    if name.endswith(".json") or os.path.sep in name or os.path.exists(name):
        phi, file_alpha = load_potential_file(name)
        if file_alpha is not None and float(file_alpha) != params.alpha:
            raise DomainError(f"potential file declares alpha={file_alpha}, run uses alpha={params.alpha}")
        return phi
    return builtin(name, params.alpha, args.gamma)


def _bracket_dict(b) -> dict:
    return {"lo": b.lo, "hi": b.hi, "width": b.width, "depth": b.depth, "method": b.method,
            "estimate": b.estimate}


# --- commands --------------------------------------------------------------

def cmd_marked(args) -> int:
    orbit = build_marked_orbit(_params(args), args.n)
    a = args.alpha
    rows = [(n, orbit.x(n), n * orbit.x(n) ** a) for n in range(1, args.n + 1)]
    if args.format == "json":
        _emit(args, _json_text(args, {"columns": ["n", "x_n", "n_x_n_alpha"], "rows": rows}))
    else:
        _emit(args, _csv_text(args, ["n", "x_n", "n_x_n_alpha"], rows))
    return EXIT_OK


def cmd_pressure(args) -> int:
    params = _params(args)
    phi = _potential(args, params)
    if args.method == "partition":
        b = pressure_partition(phi, args.depth, params)
    elif args.method == "tree":
        b = pressure_tree(phi, args.y, args.depth, params)
    else:
        b = pressure_bowen(phi, params, ell_max=args.ell, n_max=args.n_max, tol=args.tol)
    _emit(args, _json_text(args, {"potential": phi.name, "bracket": _bracket_dict(b)}))
    return EXIT_OK


def cmd_induced(args) -> int:
    params = _params(args)
    phi = _potential(args, params)
    pt = two_variable_pressure(phi, args.p, args.ell, args.n_max, params)
    result = {
        "potential": phi.name, "p": pt.p, "ell": pt.ell, "truncation": pt.truncation,
        "bracket": _bracket_dict(pt.bracket), "sign": pt.sign, "tail_bound": pt.tail_bound,
        "divergent": pt.divergence_flag, "witness": pt.witness,
        "operator_bracket": pt.operator_bracket, "z_bracket": pt.z_bracket,
    }
    _emit(args, _json_text(args, result))
    return EXIT_OK


def cmd_scan(args) -> int:
    params = _params(args)
    phi = _potential(args, params)
    lo, hi, count = args.beta
    res = transition_scan(phi, params, (lo, hi), count, args.ell, args.n_max)
    signs = [{"beta": d.beta, "sign": d.sign, "lo": d.lo, "hi": d.hi, "divergent": d.divergent,
              "note": d.note} for d in res.sign_data]
    result = {"potential": phi.name, "verdict": res.verdict, "beta_star": res.beta_star,
              "witness": res.witness, "sign_data": signs}
    _emit(args, _json_text(args, result))
    return EXIT_UNDETERMINED if res.verdict == "NoSignChangeInRange" else EXIT_OK


def cmd_certify(args) -> int:
    params = _params(args)
    phi = _potential(args, params)
    budgets = CertifyBudgets(scan_horizon=args.scan_horizon, m0_cap=args.m0_cap,
                             graph_depth=args.graph_depth, orbit_period=args.orbit_period,
                             beta_max=args.beta_max, ell_max=args.ell, n_max=args.n_max)
    cert = certify_transition(phi, args.gamma, params, budgets)
    args._timings = cert.timings
    _emit(args, _json_text(args, cert.to_dict(with_timings=False)))
    return EXIT_UNDETERMINED if cert.verdict == "Undetermined" else EXIT_OK


def cmd_orbits(args) -> int:
    params = _params(args)
    phi = _potential(args, params)
    orbits = enumerate_periodic_orbits(args.period, params, args.max_return_time,
                                       args.region_floor, {"phi": phi})
    header = ["return_word", "period", "point", "average"]
    rows = [("-".join(map(str, o.return_word.times)), o.period, o.point, o.averages["phi"])
            for o in orbits]
    if args.format == "json":
        _emit(args, _json_text(args, {"potential": phi.name, "columns": header, "rows": rows}))
    else:
        _emit(args, _csv_text(args, header, rows))
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thermoscope", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"thermoscope {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(p, potential=True, fmt_default="json"):
        p.add_argument("--alpha", type=_positive_float, default=1.0, help="map exponent (default 1)")
        if potential:
            p.add_argument("--potential", default="zero",
                           help="built-in name such as geometric or omega(0.5), or a JSON spec file")
            p.add_argument("--gamma", type=_positive_float, default=None,
                           help="Hoelder exponent for omega/tilde/certify, kappa for constant")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=fmt_default)
        p.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1,
                       help="worker pool size (accepted; computation is single-threaded)")
        p.add_argument("--timings", default=None, help="optional sidecar file for wall-clock timings")

    def induced_opts(p, ell):
        p.add_argument("--ell", type=_positive_int, default=ell, help="partition-function length")
        p.add_argument("--n-max", type=_positive_int, default=2000, help="return-time truncation")

    p = sub.add_parser("marked", help="marked points x_n with n x_n^alpha")
    common(p, potential=False, fmt_default="csv")
    p.add_argument("--n", type=_positive_int, default=1000)
    p.set_defaults(func=cmd_marked)

    p = sub.add_parser("pressure", help="pressure bracket of a potential")
    common(p)
    p.add_argument("--method", choices=("partition", "tree", "bowen"), default="partition")
    p.add_argument("--depth", type=_positive_int, default=12)
    p.add_argument("--y", type=_positive_float, default=1.0, help="base point for the tree method")
    p.add_argument("--tol", type=_positive_float, default=1e-6, help="bisection width for bowen")
    induced_opts(p, 2)
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("induced", help="two-variable pressure bracket at p")
    common(p)
    p.add_argument("--p", type=_finite_float, required=True)
    induced_opts(p, 3)
    p.set_defaults(func=cmd_induced)

    p = sub.add_parser("scan", help="locate the transition in beta")
    common(p)
    p.add_argument("--beta", type=_beta_range, required=True, help="lo:hi:count")
    induced_opts(p, 2)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("certify", help="run the transition certificate")
    common(p)
    defaults = CertifyBudgets()
    p.add_argument("--scan-horizon", type=_positive_int, default=defaults.scan_horizon)
    p.add_argument("--m0-cap", type=_positive_int, default=defaults.m0_cap)
    p.add_argument("--graph-depth", type=_positive_int, default=defaults.graph_depth)
    p.add_argument("--orbit-period", type=_positive_int, default=defaults.orbit_period)
    p.add_argument("--beta-max", type=_positive_float, default=defaults.beta_max)
    p.add_argument("--ell", type=_positive_int, default=defaults.ell_max)
    p.add_argument("--n-max", type=_positive_int, default=defaults.n_max)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("orbits", help="periodic orbits through J0 with Birkhoff averages")
    common(p, fmt_default="csv")
    p.add_argument("--period", type=_positive_int, default=8, help="maximum total period")
    p.add_argument("--max-return-time", type=_positive_int, default=None)
    p.add_argument("--region-floor", type=_positive_float, default=None)
    p.set_defaults(func=cmd_orbits)
    return parser


def _check_ordering(args):
    if getattr(args, "y", 1.0) > 1.0:
        raise UsageError("--y must lie in (0, 1]")
    if getattr(args, "region_floor", None) is not None and args.region_floor >= 1.0:
        raise UsageError("--region-floor must lie in (0, 1)")
    if args.command == "pressure" and args.method != "bowen" and args.depth > 24:
        raise UsageError("--depth must be at most 24")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_ordering(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    start = time.perf_counter()
    args._timings = {}
    try:
        code = args.func(args)
    except OSError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except json.JSONDecodeError as exc:
        print(f"{args.potential}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Inconclusive as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_UNDETERMINED
    except (ThermoscopeError, OverflowError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.timings:
        side = dict(args._timings, total=time.perf_counter() - start)
        with open(args.timings, "w") as fh:
            json.dump(side, fh, sort_keys=True, indent=2)
    return code


if __name__ == "__main__":
    sys.exit(main())
