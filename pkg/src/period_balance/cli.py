"""Command-line interface: ``period-balance <command> ...``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .asymptotics import exact_tail, tail_fit
from .compare import compare, hbm_critical_periods, hbm_periods, hbm_taylor
from .duffing import order2_limit_delta, order3_limit_delta, solve_order2_duffing
from .errors import (ConvergenceError, DomainError, NoRealSolutionError, ParseError, PeriodBalanceError,
                     UnsupportedError)
from .hbm import HbmSolution, solve_numeric, solve_order1
from .period import critical_periods, lindstedt_series, period
from .potentials import (PolyFamily, Potential, Quintic, criterion_function, default_grid,
                         monotonicity_criterion, parse_potential)

ENV_TOL = "PERIOD_BALANCE_TOL"
DEFAULT_TOL = 1e-12

FAMILIES = [
    {"spec": "poly:m=<int >= 2>", "force": "x + x^(2m-1)",
     "facts": "global center; T decreasing; T ~ 2 B(1/(2m),1/2) / (sqrt(m) A^(m-1)); "
              "closed-form T1"},
    {"spec": "rat:k=<real != 0>,m=<real >= 1>", "force": "x / (x^2 + k^2)^m",
     "facts": "global only for m = 1; T increasing; closed-form T1 for integer m"},
    {"spec": "quintic:k=<rational>", "force": "x + k x^3 + x^5",
     "facts": "global iff k > -2; T decreasing for k >= 0, one maximum for -2 < k < 0; "
              "T ~ 8.4131 / A^2; closed-form T1 = 8 pi / sqrt(16 + 12 k A^2 + 10 A^4)"},
    {"spec": "gen:<i>=<rational>,...", "force": "x + sum k_i x^i",
     "facts": "exact Taylor series of T and T_N; numeric harmonic balance"},
]


# ------------------------------------------------------------------ config
@dataclass
class RunConfig:
    potential: Optional[str]
    grid: Optional[List[float]]
    tol: float
    fmt: str
    output: Optional[str]


def parse_grid(text: str) -> List[float]:
    """``min:max:count[:log|linear]`` -> list of amplitudes."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ParseError(f"grid must be min:max:count[:log|linear], got {text!r}")
    try:
        lo, hi = float(Fraction(parts[0])), float(Fraction(parts[1]))
        n = int(parts[2])
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad grid {text!r}") from exc
    scale = parts[3] if len(parts) == 4 else "linear"
    if n < 2:
        raise ParseError("grid count must be >= 2")
    if not 0 < lo < hi:
        raise ParseError("grid needs 0 < min < max")
    if scale == "log":
        return [float(x) for x in np.logspace(math.log10(lo), math.log10(hi), n)]
    if scale == "linear":
        return [float(x) for x in np.linspace(lo, hi, n)]
    raise ParseError(f"grid scale must be log or linear, got {scale!r}")


def parse_range(text: str):
    try:
        lo, hi = (float(Fraction(x)) for x in text.split(":"))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"range must be lo:hi, got {text!r}") from exc
    if not 0 <= lo < hi:
        raise ParseError("range needs 0 <= lo < hi")
    return lo, hi


def read_config(path: str) -> Dict[str, str]:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ParseError(f"cannot read config {path!r}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{n}: expected key=value")
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _default_tol() -> float:
    env = os.environ.get(ENV_TOL)
    if env is None:
        return DEFAULT_TOL
    try:
        return float(env)
    except ValueError as exc:
        raise ParseError(f"{ENV_TOL} is not a number: {env!r}") from exc


# ------------------------------------------------------------------ output
def _fmt_float(x) -> str:
    return f"{float(x):.17g}"


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(cfg: RunConfig, payload: dict, table: Optional[tuple] = None):
    if cfg.fmt == "csv":
        if table is None:
            raise ParseError("this command has no CSV form; use --format json")
        text = _csv(*table)
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _plot(path: Optional[str], header, rows):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_csv(header, rows))


# ----------------------------------------------------------------- commands
def _potential(cfg: RunConfig) -> Potential:
    if not cfg.potential:
        raise ParseError("a potential spec is required")
    return parse_potential(cfg.potential)


def _require_grid(cfg: RunConfig) -> List[float]:
    if not cfg.grid:
        raise ParseError("--grid is required")
    return cfg.grid


def cmd_period(args, cfg):
    p = _potential(cfg)
    grid = _require_grid(cfg)
    method = "elliptic" if isinstance(p, PolyFamily) and p.m == 2 else "quadrature"

    def one(a):
        return period(p, a, cfg.tol)

    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as ex:
            values = list(ex.map(one, grid))   # map preserves grid order
    else:
        values = [one(a) for a in grid]
    rows = [{"A": a, "T": t, "method": method, "tol": cfg.tol} for a, t in zip(grid, values)]
    _plot(args.plot_data, ["A", "T"], [(a, t) for a, t in zip(grid, values)])
    _emit(cfg, {"command": "period", "potential": p.spec, "rows": rows},
          (["A", "T", "method", "tol"], [(r["A"], r["T"], r["method"], r["tol"]) for r in rows]))


def _hbm_solutions(p: Potential, N: int, grid: List[float]) -> List[HbmSolution]:
    if N == 1:
        try:
            return [solve_order1(p, a) for a in grid]
        except UnsupportedError:
            pass
    if isinstance(p, PolyFamily) and p.m == 2 and N == 2:
        return [solve_order2_duffing(a) for a in grid]
    if isinstance(p, PolyFamily) and p.m == 2 and N == 3:
        periods = hbm_periods(p, 3, grid)
        sols = solve_numeric(p, 3, grid)
        return [HbmSolution(3, a, 2 * math.pi / t, s.coeffs) for a, t, s in zip(grid, periods, sols)]
    return solve_numeric(p, N, grid)


def cmd_hbm(args, cfg):
    p = _potential(cfg)
    grid = _require_grid(cfg)
    sols = _hbm_solutions(p, args.N, grid)
    rows = [s.to_json() for s in sols]
    _plot(args.plot_data, ["A", "T"], [(s.A, s.T_N) for s in sols])
    _emit(cfg, {"command": "hbm", "potential": p.spec, "N": args.N, "rows": rows},
          (["N", "A", "omega", "T"], [(s.N, float(s.A), float(s.omega), float(s.T_N)) for s in sols]))


def cmd_taylor(args, cfg):
    p = _potential(cfg)
    s = hbm_taylor(p, args.hbm, args.order) if args.hbm else lindstedt_series(p, args.order)
    payload = {"command": "taylor", "potential": p.spec, "hbm": args.hbm, "series": s.to_json(),
               "text": str(s)}
    _emit(cfg, payload, (["k", "coeff_over_pi"], [(k, c) for k, c in enumerate(s.to_json()["coeffs"])]))


def _hbm_tail_closed(p: Potential, N: int) -> Optional[float]:
    if N == 1 and isinstance(p, PolyFamily):
        m = p.m
        return 2 ** m * math.pi / math.sqrt(math.comb(2 * m - 1, m))
    if N == 1 and isinstance(p, Quintic):
        return 8 * math.pi / math.sqrt(10)
    if isinstance(p, PolyFamily) and p.m == 2:
        if N == 2:
            return order2_limit_delta()
        if N == 3:
            return order3_limit_delta()
    return None


def _read_samples(stream) -> List[tuple]:
    text = stream.read()
    if not text.strip():
        raise ParseError("no samples on stdin")
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = None
    if data is not None:
        rows = data["rows"] if isinstance(data, dict) and "rows" in data else data
        try:
            return [(float(r["A"]), float(r["T"])) for r in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad JSON samples: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    try:
        return [(float(r["A"]), float(r["T"])) for r in reader]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad CSV samples: {exc}") from exc


def cmd_asymptote(args, cfg):
    payload = {"command": "asymptote"}
    if args.fit:
        samples = _read_samples(sys.stdin)
        payload["fit"] = tail_fit(samples).to_json()
        if cfg.potential:
            payload["potential"] = parse_potential(cfg.potential).spec
        _emit(cfg, payload, (["C", "exponent", "residual"],
                             [(payload["fit"]["C"], payload["fit"]["exponent"], payload["fit"]["residual"])]))
        return
    p = _potential(cfg)
    payload["potential"] = p.spec
    grid = cfg.grid or [float(x) for x in np.logspace(3, 6, 10)]
    if args.hbm:
        payload["hbm"] = args.hbm
        closed = _hbm_tail_closed(p, args.hbm)
        payload["closed_form_C"] = closed
        values = hbm_periods(p, args.hbm, grid)
    else:
        try:
            term = exact_tail(p)
            payload["exact"] = {"C": term.M, "exponent": term.a}
        except UnsupportedError as exc:
            payload["exact"] = None
            payload["note"] = str(exc)
        values = [period(p, a, cfg.tol) for a in grid]
    fit = tail_fit(zip(grid, values))
    payload["fit"] = fit.to_json()
    _emit(cfg, payload, (["C", "exponent", "residual"], [(fit.C, fit.exponent, fit.residual)]))


def cmd_monotonicity(args, cfg):
    p = _potential(cfg)
    grid = (args.half_width, args.points) if args.half_width else None
    verdict = monotonicity_criterion(p, grid)
    xs = default_grid(p, args.points) if grid is None else None
    if xs is None:
        s = np.linspace(-1.0, 1.0, args.points)
        xs = args.half_width * np.sign(s) * np.abs(s) ** 2
    G = criterion_function(p, xs)
    i, j = int(np.argmin(G)), int(np.argmax(G))
    payload = {"command": "monotonicity", "potential": p.spec, "verdict": verdict.value,
               "G_min": float(G[i]), "x_at_min": float(xs[i]), "G_max": float(G[j]), "x_at_max": float(xs[j])}
    _emit(cfg, payload, (["verdict", "G_min", "x_at_min", "G_max", "x_at_max"],
                         [(verdict.value, float(G[i]), float(xs[i]), float(G[j]), float(xs[j]))]))


def cmd_critical(args, cfg):
    p = _potential(cfg)
    lo, hi = parse_range(args.range)
    tol = args.crit_tol
    if args.hbm:
        found = hbm_critical_periods(p, args.hbm, (lo, hi), tol)
    else:
        found = critical_periods(p, (lo, hi), tol)
    rows = [{"A": a, "kind": k} for a, k in found]
    _emit(cfg, {"command": "critical", "potential": p.spec, "hbm": args.hbm, "range": [lo, hi],
                "critical_periods": rows}, (["A", "kind"], [(r["A"], r["kind"]) for r in rows]))


def cmd_compare(args, cfg):
    p = _potential(cfg)
    try:
        orders = [int(x) for x in args.N.split(",")]
    except ValueError as exc:
        raise ParseError(f"-N must be a comma-separated list of integers, got {args.N!r}") from exc
    grid = _require_grid(cfg)
    crit = parse_range(args.range) if args.range else None
    report = compare(p, orders, grid, args.series_order, crit, tails=not args.no_tails)
    if args.plot_data:
        for N in orders:
            path = args.plot_data if len(orders) == 1 else f"{args.plot_data}.N{N}"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(report.error_csv(N))
    payload = {"command": "compare", **report.to_json()}
    rows = [(r.N, a, e) for r in report.records for a, e in r.error_curve]
    _emit(cfg, payload, (["N", "A", "abs_error"], rows))


def cmd_families(args, cfg):
    if args.action != "list":
        raise ParseError("families supports only 'list'")
    _emit(cfg, {"command": "families", "families": FAMILIES},
          (["spec", "force", "facts"], [(f["spec"], f["force"], f["facts"]) for f in FAMILIES]))


# -------------------------------------------------------------------- parser
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key=value file with defaults for any flag")
    common.add_argument("--grid", help="amplitudes as min:max:count[:log|linear]")
    common.add_argument("--tol", type=float, help=f"tolerance (default {DEFAULT_TOL}, env {ENV_TOL})")
    common.add_argument("--format", dest="fmt", choices=["json", "csv"])
    common.add_argument("--output", help="write results here instead of stdout")
    common.add_argument("--plot-data", help="two-column CSV for plotting")

    parser = _Parser(prog="period-balance", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("period", parents=[common], help="exact period table")
    sp.add_argument("potential", nargs="?")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_period)

    sp = sub.add_parser("hbm", parents=[common], help="harmonic balance periods")
    sp.add_argument("potential", nargs="?")
    sp.add_argument("-N", type=int)
    sp.set_defaults(func=cmd_hbm)

    sp = sub.add_parser("taylor", parents=[common], help="exact Taylor series at A = 0")
    sp.add_argument("potential", nargs="?")
    sp.add_argument("--hbm", type=int, default=0)
    sp.add_argument("--order", type=int)
    sp.set_defaults(func=cmd_taylor)

    sp = sub.add_parser("asymptote", parents=[common], help="dominant term at infinity")
    sp.add_argument("potential", nargs="?")
    sp.add_argument("--hbm", type=int, default=0)
    sp.add_argument("--fit", action="store_true", help="fit (A, T) samples read from stdin")
    sp.set_defaults(func=cmd_asymptote)

    sp = sub.add_parser("monotonicity", parents=[common], help="sampled monotonicity criterion")
    sp.add_argument("potential", nargs="?")
    sp.add_argument("--half-width", type=float)
    sp.add_argument("--points", type=int, default=4001)
    sp.set_defaults(func=cmd_monotonicity)

    sp = sub.add_parser("critical", parents=[common], help="critical periods")
    sp.add_argument("potential", nargs="?")
    sp.add_argument("--hbm", type=int, default=0)
    sp.add_argument("--range", default="0.01:10")
    sp.add_argument("--crit-tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_critical)

    sp = sub.add_parser("compare", parents=[common], help="T versus T_N report")
    sp.add_argument("potential", nargs="?")
    sp.add_argument("-N", default="1,2")
    sp.add_argument("--range")
    sp.add_argument("--series-order", type=int, default=10)
    sp.add_argument("--no-tails", action="store_true")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("families", parents=[common], help="built-in families")
    sp.add_argument("action", choices=["list"])
    sp.set_defaults(func=cmd_families)
    return parser


_CONFIG_KEYS = {"potential", "grid", "tol", "fmt", "format", "output", "plot_data", "N", "order", "hbm",
                "range", "jobs", "points", "half_width", "series_order", "crit_tol"}


def _apply_config(args, conf: Dict[str, str]):
    """Fill flags left at None from the config file (command-line values win)."""
    for key, val in conf.items():
        if key not in _CONFIG_KEYS:
            raise ParseError(f"unknown config key {key!r}")
        attr = "fmt" if key == "format" else key
        if getattr(args, attr, None) not in (None, 0, False):
            continue
        if attr in ("tol", "half_width", "crit_tol"):
            val = float(val)
        elif attr in ("order", "hbm", "jobs", "points", "series_order") or (attr == "N" and args.command == "hbm"):
            val = int(val)
        setattr(args, attr, val)


def _resolve(args) -> RunConfig:
    if args.config:
        try:
            _apply_config(args, read_config(args.config))
        except ValueError as exc:
            raise ParseError(f"bad config value: {exc}") from exc
    if args.command == "hbm" and not args.N:
        raise ParseError("hbm needs -N")
    if args.command == "taylor" and args.order is None:
        raise ParseError("taylor needs --order")
    tol = args.tol if args.tol is not None else _default_tol()
    grid = parse_grid(args.grid) if args.grid else None
    return RunConfig(getattr(args, "potential", None), grid, tol, args.fmt or "json", args.output)


def _diagnostic(exc: Exception, code: int) -> str:
    return json.dumps({"error": type(exc).__name__, "exit": code, "message": str(exc)}, sort_keys=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _resolve(args)
        args.func(args, cfg)
    except ParseError as exc:
        print(_diagnostic(exc, 2), file=sys.stderr)
        return 2
    except (DomainError, ConvergenceError, NoRealSolutionError, UnsupportedError, PeriodBalanceError) as exc:
        print(_diagnostic(exc, 3), file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
