"""Command line: tv | sixj | geometry | verify | asymptotics.

Exit codes: 0 success, 1 usage, 2 bad input, 3 numeric domain (including
failed verification checks), 4 non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from types import SimpleNamespace
from typing import Sequence

from . import __version__
from .errors import DomainError, InputError, ReltvError
from .hypgeom import V8, HyperidealTet, covolume, lengths_from_angles, solve_polyhedral_metric
from .potential import W_tet, beta_from_theta, hessian_checks, regular_point_checks, verify_critical
from .quantum_arith import Precision, QuantumContext, Root
from .sixj import is_admissible, is_hyperideal_type, sixj_direct, sixj_via_potential
from .statesum import (BACKEND, StateSumOptions, beta_colors, growth_rate, parity_check, realized_theta,
                       relative_tv, stability_check, stable_relative_tv)
from .samples import SAMPLES, load_sample
from .triangulation import load_triangulation

log = logging.getLogger("reltv")

SCHEMA_VERSION = 1
EXIT_USAGE, EXIT_INPUT, EXIT_DOMAIN, EXIT_CONVERGENCE = 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- parsing helpers -------------------------------------------------------

def _ints(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _floats(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _signs(s: str) -> list[int]:
    out = _ints(s)
    if any(x not in (1, -1) for x in out):
        raise argparse.ArgumentTypeError("signs must be +1 or -1")
    return out


def _per_edge(values, n: int, what: str) -> list:
    if values is None:
        return None
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise InputError(f"{what} needs 1 or {n} entries, got {len(values)}")
    return values


def _params(args) -> dict:
    skip = {"func", "command_name"}
    out = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    out["command"] = args.command_name
    return out


def _header_lines(args) -> list[str]:
    return [f"# reltv {__version__}", "# params: " + json.dumps(_params(args), sort_keys=True)]


def _emit(args, text: str):
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json_doc(args, body: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "tool": "reltv", "version": __version__, "params": _params(args)}
    doc.update(body)
    return json.dumps(doc, indent=2, sort_keys=False, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"not serialisable: {type(x)}")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("nan" if math.isnan(x) else ("-inf" if x < 0 else "inf"))
    return str(x)


def _csv_text(args, header: Sequence[str], rows: Sequence[Sequence], footer: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in _header_lines(args):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    for line in footer:
        buf.write(line + "\n")
    return buf.getvalue()


def _load(source: str, strict: bool = True):
    """A triangulation file, or the name of a shipped sample."""
    if not Path(source).exists() and source in SAMPLES:
        return load_sample(source)
    return load_triangulation(source, strict=strict)


def _context(args, r: int) -> QuantumContext:
    return QuantumContext(r, Root(args.root), Precision(args.precision))


def _seconds(args, t: float) -> float:
    return 0.0 if args.no_timing else round(t, 6)


# -- subcommands -----------------------------------------------------------

def cmd_tv(args) -> int:
    T = _load(args.triangulation, strict=not args.lenient)
    b = _per_edge(args.colors, T.num_edges, "--colors") or [0] * T.num_edges
    opts = StateSumOptions(args.parity, args.summation, args.parallel_width, args.threads, args.backend)
    rows = []
    for r in args.r:
        res = relative_tv(T, b, _context(args, r), opts)
        v = res.value
        scaled = 2 * math.pi / r * res.log_abs if math.isfinite(res.log_abs) else None
        rows.append({"r": r, "re": v.real, "im": v.imag, "abs": abs(v), "log_abs": res.log_abs,
                     "scaled_log": scaled, "colorings": res.num_colorings,
                     "seconds": _seconds(args, res.runtime), "flags": res.flags})
    header = ["r", "re", "im", "abs", "log_abs", "scaled_log", "colorings", "seconds"]
    if args.json:
        _emit(args, _json_doc(args, {"backend": BACKEND, "rows": rows}))
    else:
        _emit(args, _csv_text(args, header, [[row[h] for h in header] for row in rows]))
    return 0


def cmd_sixj(args) -> int:
    t = args.tuple
    if len(t) != 6:
        raise InputError("--tuple needs six colors")
    ctx = _context(args, args.r)
    adm = is_admissible(t, args.r)
    hyp = adm and is_hyperideal_type(t, args.r)
    body = {"tuple": t, "r": args.r, "root": args.root, "admissible": adm, "hyperideal_type": hyp, "value": None}
    code = 0
    if adm:
        v = complex(sixj_direct(t, ctx))
        body["value"] = [v.real, v.imag]
        if args.potential:
            if not hyp:
                raise DomainError(f"{tuple(t)} is not of hyperideal type; the potential route does not apply")
            p = sixj_via_potential(t, QuantumContext(args.r, Root(args.root)))
            body["potential_value"] = [p.real, p.imag]
            body["relative_difference"] = abs(p - v) / abs(v) if v else abs(p)
    else:
        code = EXIT_DOMAIN
    if args.json:
        _emit(args, _json_doc(args, body))
    else:
        lines = [f"admissible: {adm}", f"hyperideal_type: {hyp}"]
        if body["value"] is not None:
            lines.insert(0, f"value: {body['value'][0]!r} {body['value'][1]!r}")
        if "potential_value" in body:
            lines.append(f"potential_value: {body['potential_value'][0]!r} {body['potential_value'][1]!r}")
        _emit(args, "\n".join(lines) + "\n")
    if code:
        print(f"error: {tuple(t)} is not {args.r}-admissible", file=sys.stderr)
    return code


def cmd_geometry(args) -> int:
    T = _load(args.triangulation, strict=not args.lenient)
    cone = _per_edge(args.cone, T.num_edges, "--cone")
    metric = solve_polyhedral_metric(T, cone)
    body = metric.to_dict()
    body["cone_target"] = cone
    body["cone_residuals"] = [c - t for c, t in zip(metric.cone_angles, cone)]
    _emit(args, _json_doc(args, body))
    return 0


def _verify_report(args) -> dict:
    T = _load(args.triangulation, strict=not args.lenient)
    checks = {}
    hc = hessian_checks()
    checks["hessian"] = hc
    checks["regular_point"] = regular_point_checks()
    thetas = [_per_edge(args.theta, T.num_edges, "--theta")] if args.theta else \
        [[0.0] * T.num_edges, [0.1] * T.num_edges]
    eps_list = [_per_edge(args.eps, T.num_edges, "--eps")] if args.eps else \
        [[1] * T.num_edges, [-1] * T.num_edges]
    crit = []
    for theta in thetas:
        metric = solve_polyhedral_metric(T, theta)
        beta = beta_from_theta(theta)
        for eps in eps_list:
            rep = verify_critical(T, metric, beta, eps)
            rep["theta"] = theta
            crit.append(rep)
    checks["critical_points"] = {"runs": crit, "ok": all(c["ok"] for c in crit)}
    rng = random.Random(args.seed)
    worst = 0.0
    for _ in range(5):
        th = [rng.uniform(0.05, 0.5) for _ in range(6)]
        L = lengths_from_angles(th)
        for sign in (1, -1):
            w = W_tet([complex(math.pi, sign * l) for l in L])
            worst = max(worst, abs(w - 2 * math.pi**2 - 2j * covolume(L)))
    checks["covolume_identity"] = {"max_error": worst, "ok": worst < 1e-6}
    ctx = QuantumContext(7)
    b = [0] * T.num_edges
    checks["parity"] = parity_check(T, b, ctx)
    checks["summation"] = stability_check(T, b, QuantumContext(min(args.r_max, 31)))
    return {"checks": checks, "ok": all(c["ok"] for c in checks.values())}


def cmd_verify(args) -> int:
    rep = _verify_report(args)
    _emit(args, _json_doc(args, rep))
    return 0 if rep["ok"] else EXIT_DOMAIN


@dataclass
class AsymptoticsPlan:
    triangulation: str
    theta_target: list
    r_list: list
    mu: list | None = None
    mode: str = "beta"
    synthetic_volume: float | None = None
    parity: str = "all"
    output: str | None = None
    threads: int = 1
    timing: bool = True
    extra: dict = field(default_factory=dict)


def run_asymptotics(plan: AsymptoticsPlan):
    """Rows of the volume-conjecture table and a summary dict."""
    T = _load(plan.triangulation)
    theta = _per_edge(plan.theta_target, T.num_edges, "theta")
    mu = _per_edge(plan.mu, T.num_edges, "mu")
    if any(r % 2 == 0 for r in plan.r_list):
        raise InputError("r values must be odd")
    metric = solve_polyhedral_metric(T, theta)
    vol = metric.total_volume
    even = plan.parity == "even"

    def one(r):
        if plan.mode == "zero":
            b = [0] * T.num_edges
        else:
            b = beta_colors(theta, r, mu, even=even)
        if plan.mode == "synthetic":
            v0 = plan.synthetic_volume
            la = r * v0 / (2 * math.pi)
            return b, (la, complex(math.nan, math.nan), 0, 0.0, ["synthetic"])
        res = stable_relative_tv(T, b, QuantumContext(r), StateSumOptions(parity=plan.parity))
        return b, (res.log_abs, res.value, res.num_colorings, res.runtime, res.flags)

    if plan.threads > 1:
        with ThreadPoolExecutor(max_workers=plan.threads) as pool:
            results = list(pool.map(one, plan.r_list))
    else:
        results = [one(r) for r in plan.r_list]
    gr = growth_rate([(r, SimpleNamespace(log_abs=res[0])) for r, (_, res) in zip(plan.r_list, results)])
    rows = []
    for r, (b, (la, val, ncol, secs, flags)), g in zip(plan.r_list, results, gr):
        gap = vol - g.scaled_log if not g.flagged else None
        rows.append({
            "r": r, "b": b, "theta_real": realized_theta(b, r),
            "tv_re": val.real, "tv_im": val.imag, "tv_abs": abs(val) if plan.mode != "synthetic" else math.exp(la) if la < 700 else math.inf,
            "scaled_log": g.scaled_log, "geom_vol": vol, "gap": gap, "colorings": ncol,
            "seconds": round(secs, 6) if plan.timing else 0.0, "extrapolated": g.extrapolated, "flagged": g.flagged,
            "flags": flags,
        })
    finite = [row for row in rows if row["extrapolated"] is not None]
    summary = {
        "geometric_volume": vol, "cone_target": theta,
        "last_scaled_log": rows[-1]["scaled_log"],
        "extrapolated_limit": finite[-1]["extrapolated"] if finite else None,
        "relative_error": abs(finite[-1]["extrapolated"] - vol) / vol if finite else None,
        "eventually_monotone": _eventually_monotone([row["scaled_log"] for row in rows], vol),
    }
    return rows, summary


def _eventually_monotone(xs, target, tail: int = 5) -> bool:
    """The last ``tail`` values move strictly towards ``target``."""
    xs = [x for x in xs if x is not None and math.isfinite(x)]
    if len(xs) < 2:
        return False
    t = xs[-tail:]
    return all(abs(b - target) < abs(a - target) for a, b in zip(t, t[1:]))


def cmd_asymptotics(args) -> int:
    if args.r_list:
        r_list = args.r_list
    else:
        lo = args.r_min if args.r_min % 2 else args.r_min + 1
        r_list = list(range(lo, args.r_max + 1, 2))
    if args.mode == "synthetic" and args.synthetic_volume is None:
        raise InputError("--mode synthetic needs --synthetic-volume")
    plan = AsymptoticsPlan(args.triangulation, args.theta, r_list, args.mu, args.mode, args.synthetic_volume,
                           args.parity, args.output, args.threads, not args.no_timing)
    rows, summary = run_asymptotics(plan)
    if args.json:
        _emit(args, _json_doc(args, {"rows": rows, "summary": summary}))
        return 0
    n = len(rows[0]["b"])
    header = (["r"] + [f"b_{i + 1}" for i in range(n)] + [f"theta_real_{i + 1}" for i in range(n)]
              + ["tv_re", "tv_im", "tv_abs", "scaled_log", "geom_vol", "gap", "colorings", "seconds", "extrapolated"])
    table = [[row["r"], *row["b"], *row["theta_real"], row["tv_re"], row["tv_im"], row["tv_abs"], row["scaled_log"],
              row["geom_vol"], row["gap"], row["colorings"], row["seconds"], row["extrapolated"]] for row in rows]
    footer = ["# summary: " + json.dumps(summary, sort_keys=True)]
    _emit(args, _csv_text(args, header, table, footer))
    return 0


# -- parser ----------------------------------------------------------------

def _global_options(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--precision", choices=["double", "extended"], default=d("double"))
    p.add_argument("--threads", type=int, default=d(1))
    p.add_argument("--seed", type=int, default=d(0), help="seed for randomized checks")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", action="store_true", default=d(False), help="JSON output")
    g.add_argument("--csv", action="store_true", default=d(False), help="CSV output (default for tables)")
    p.add_argument("--no-timing", action="store_true", default=d(False),
                   help="write 0 in timing columns so repeated runs are byte-identical")
    p.add_argument("-v", "--verbose", action="count", default=d(0))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reltv", description="Relative Turaev-Viro invariants and hyperideal geometry.")
    parser.add_argument("--version", action="version", version=f"reltv {__version__}")
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command_name", required=True, parser_class=_Parser)

    def add(name, func, help):
        p = sub.add_parser(name, help=help, description=help)
        _global_options(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("tv", cmd_tv, "Evaluate the relative Turaev-Viro state sum.")
    p.add_argument("--triangulation", required=True, help="triangulation JSON file or shipped sample name")
    p.add_argument("--r", type=_ints, required=True, help="level r, or a comma-separated list")
    p.add_argument("--root", choices=["2pir", "pir"], default="2pir")
    p.add_argument("--colors", type=_ints, help="boundary colors b_1,...,b_|E| (default all 0)")
    p.add_argument("--parity", choices=["all", "even"], default="all")
    p.add_argument("--summation", choices=["plain", "compensated"], default="plain")
    p.add_argument("--parallel-width", type=int, default=1)
    p.add_argument("--backend", choices=["auto", "cython", "python"], default="auto")
    p.add_argument("--lenient", action="store_true", help="warn instead of failing on unused edge indices")
    p.add_argument("--output", "-o")

    p = add("sixj", cmd_sixj, "Evaluate one quantum 6j-symbol.")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--root", choices=["2pir", "pir"], default="2pir")
    p.add_argument("--tuple", type=_ints, required=True, help="a1,...,a6")
    p.add_argument("--potential", action="store_true", help="also evaluate through the potential U_r")
    p.add_argument("--output", "-o")

    p = add("geometry", cmd_geometry, "Solve for the polyhedral metric with given cone angles.")
    p.add_argument("--triangulation", required=True)
    p.add_argument("--cone", type=_floats, required=True, help="cone angles, one per edge or a single value")
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--output", "-o")

    p = add("verify", cmd_verify, "Run the numerical identity checks and report pass/fail.")
    p.add_argument("--triangulation", required=True)
    p.add_argument("--theta", type=_floats, help="cone angles (default: runs 0 and 0.1)")
    p.add_argument("--eps", type=_signs, help="sign vector (default: all +1 and all -1)")
    p.add_argument("--r-max", type=int, default=31, help="largest r used by the summation check")
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--output", "-o")

    p = add("asymptotics", cmd_asymptotics, "Tabulate the growth rate of TV_r against the geometric volume.")
    p.add_argument("--triangulation", required=True)
    p.add_argument("--theta", type=_floats, default=[0.0], help="target cone angles")
    p.add_argument("--r-min", type=int, default=11)
    p.add_argument("--r-max", type=int, default=101)
    p.add_argument("--r-list", type=_ints, help="explicit odd r values (overrides --r-min/--r-max)")
    p.add_argument("--mu", type=_signs, help="branch signs per edge (default +1)")
    p.add_argument("--mode", choices=["beta", "zero", "synthetic"], default="beta")
    p.add_argument("--synthetic-volume", type=float, help="V0 for --mode synthetic")
    p.add_argument("--parity", choices=["all", "even"], default="all")
    p.add_argument("--output", "-o")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise InputError("--threads must be >= 1")
        return args.func(args)
    except ReltvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
