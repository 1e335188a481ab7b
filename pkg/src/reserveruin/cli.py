"""Command-line interface.

Subcommands::

    reserveruin ruin simple|wald|gaussian ...
    reserveruin alm cost|limit|simulate ...
    reserveruin validate [--quick]
    reserveruin sweep KIND --vary NAME=VALUES ...

Exit codes: 0 success, 1 validation failure, 2 usage or domain error.

Scenario parameters may also come from a JSON file (``--config``) whose keys
mirror the flag names; flags given on the command line win.  A JSON report
written with ``--json`` is itself a valid config file, so any run can be
replayed from its report.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Optional

from . import __version__, alm, gambler, simulate, validation, wald
from .model import (
    AlmScenario,
    Cashflow,
    DomainError,
    Gaussian,
    Method,
    RuinEstimate,
    TwoPoint,
    WalkScenario,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# Parameters that control output or scheduling; never echoed in a report.
_NON_SCENARIO = {"json", "config", "workers", "timing", "csv", "handler", "group", "sub"}


# -- serialization -----------------------------------------------------------

def fmt_float(v: float) -> str:
    return format(v, ".17g")


def _clean(obj):
    """Replace non-finite floats by None so every emitted number is finite."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass
class RunReport:
    command: str
    scenario: dict[str, Any]
    seed: Optional[int]
    results: list[dict[str, Any]] = field(default_factory=list)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    wall_time: Optional[float] = None
    version: str = __version__

    def add(self, label: str, estimate) -> None:
        self.results.append({"label": label, **estimate.to_dict()})

    def to_dict(self) -> dict[str, Any]:
        out = {
            "tool": "reserveruin",
            "version": self.version,
            "command": self.command,
            "scenario": self.scenario,
            "seed": self.seed,
            "results": self.results,
            "diagnostics": self.diagnostics,
        }
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return _clean(out)

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"

    def to_text(self) -> str:
        lines = [f"reserveruin {self.version} :: {self.command}"]
        lines.append("  " + ", ".join(f"{k}={v}" for k, v in self.scenario.items()))
        head = f"  {'result':<22}{'method':<20}{'value':>22}{'stderr':>12}  ci95"
        lines.append(head)
        for r in self.results:
            lo, hi = r["ci95"]
            se = r["stderr"]
            lines.append(f"  {r['label']:<22}{r['method']:<20}{fmt_float(r['value']):>22}"
                         f"{se:>12.3g}  [{lo:.6g}, {hi:.6g}]")
        for k, v in self.diagnostics.items():
            lines.append(f"  {k}: {v}")
        if self.wall_time is not None:
            lines.append(f"  wall time: {self.wall_time:.3f} s")
        return "\n".join(lines) + "\n"


# -- argument helpers --------------------------------------------------------

def parse_dist(text: str):
    """``twopoint:<p>``, ``gaussian:<mu>,<sigma>`` or ``cashflow:<dist>;<dist>``."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    try:
        if kind == "twopoint":
            return TwoPoint(float(rest))
        if kind == "gaussian":
            mu, sigma = (float(v) for v in rest.split(","))
            return Gaussian(mu, sigma)
        if kind == "cashflow":
            left, sep, right = rest.partition(";")
            if not sep:
                raise DomainError("cashflow needs two distributions separated by ';'")
            return Cashflow(parse_dist(left), parse_dist(right))
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"cannot parse distribution {text!r}: {exc}") from None
    raise DomainError(f"unknown distribution {text!r} (use twopoint:, gaussian: or cashflow:)")


def parse_values(text: str) -> list:
    """``a,b,c`` or inclusive ``start:stop[:step]``."""
    def num(s):
        s = s.strip()
        return int(s) if s.lstrip("+-").isdigit() else float(s)

    if ":" in text:
        parts = [num(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise DomainError(f"bad range {text!r}")
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else 1
        if step == 0 or (stop - start) * step < 0:
            raise DomainError(f"bad range {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = [start + i * step for i in range(n)]
        if all(isinstance(v, int) for v in (start, stop, step)):
            return vals
        return [round(v, 12) for v in vals]
    return [num(p) for p in text.split(",")]


def _apply_config(args, defaults: dict[str, Any]) -> None:
    cfg: dict[str, Any] = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {args.config!r}: {exc}") from None
        if "scenario" in cfg and isinstance(cfg["scenario"], dict):
            cfg = cfg["scenario"]
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in defaults:
            raise DomainError(f"unknown config key {key!r}")
        if getattr(args, dest, None) is None:
            setattr(args, dest, value)
    for dest, value in defaults.items():
        if getattr(args, dest, None) is None:
            setattr(args, dest, value)


def _scenario(args, defaults) -> dict[str, Any]:
    return {k: getattr(args, k) for k in defaults if k not in _NON_SCENARIO}


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise DomainError("missing required parameter(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _mc_config(args) -> simulate.McConfig:
    return simulate.McConfig(int(args.paths), int(args.seed), args.max_steps and int(args.max_steps),
                             args.workers or 0)


# -- ruin ---------------------------------------------------------------------

RUIN_COMMON = {"x": None, "k": None, "with_mc": False, "paths": 100_000, "seed": 0,
               "max_steps": None, "proxy_barrier": None}
RUIN_DEFAULTS = {
    "simple": {**RUIN_COMMON, "p": None},
    "wald": {**RUIN_COMMON, "dist": None},
    "gaussian": {**RUIN_COMMON, "mu": None, "sigma": None},
}


def _default_proxy(x, d) -> float:
    sol = wald.solve_adjustment(d)
    reach = math.log(1e6) / abs(sol.theta) if isinstance(sol, wald.AdjustmentCoefficient) else 0.0
    return float(max(2.0 * x, x + reach))


def _run_mc(args, report, d) -> None:
    cfg = _mc_config(args)
    x, k = args.x, args.k
    if k is not None:
        est = simulate.mc_ruin_bounded(WalkScenario(x, k, d), cfg)
    else:
        proxy = args.proxy_barrier if args.proxy_barrier is not None else _default_proxy(x, d)
        if isinstance(d, TwoPoint):
            proxy = float(math.ceil(proxy))
        est = simulate.mc_ruin_unbounded(WalkScenario(x, None, d), cfg, proxy)
    report.add("monte_carlo", est)


def ruin_results(kind: str, args) -> tuple[list[tuple[str, RuinEstimate]], dict[str, Any], Any]:
    """Deterministic estimates for one ruin scenario, plus diagnostics and the step law."""
    x, k = args.x, args.k
    out = []
    diag: dict[str, Any] = {}
    if kind == "simple":
        _require(args, "x", "p")
        d = TwoPoint(float(args.p))
        if k is None:
            out.append(("closed_form", RuinEstimate.exact(gambler.ruin_unbounded(x, args.p), Method.CLOSED_FORM)))
        else:
            out.append(("closed_form", RuinEstimate.exact(gambler.ruin_bounded(x, k, args.p), Method.CLOSED_FORM)))
            out.append(("difference_equation", RuinEstimate.exact(
                gambler.ruin_difference_equation(x, k, args.p), Method.DIFFERENCE_EQUATION)))
    elif kind == "wald":
        _require(args, "x", "dist")
        d = parse_dist(args.dist)
        sol = wald.solve_adjustment(d)
        if isinstance(sol, wald.AdjustmentCoefficient):
            diag.update(theta=sol.theta, theta_residual=sol.residual)
        elif isinstance(sol, wald.ZeroMean):
            diag.update(theta=0.0, zero_mean=True)
        if k is None:
            out.append(("wald", RuinEstimate.exact(wald.ruin_wald_unbounded(x, d), Method.WALD_APPROX)))
        else:
            out.append(("wald", RuinEstimate.exact(wald.ruin_wald_bounded(x, k, d), Method.WALD_APPROX)))
        if isinstance(d, TwoPoint) and float(x).is_integer() and (k is None or float(k).is_integer()):
            exact = (gambler.ruin_unbounded(int(x), d.p) if k is None
                     else gambler.ruin_bounded(int(x), int(k), d.p))
            out.append(("closed_form", RuinEstimate.exact(exact, Method.CLOSED_FORM)))
    elif kind == "gaussian":
        _require(args, "x", "mu", "sigma")
        d = Gaussian(float(args.mu), float(args.sigma))
        diag["theta"] = -2.0 * d.mu / d.sigma ** 2
        if k is None:
            v = wald.ruin_gaussian_unbounded(x, d.mu, d.sigma)
        else:
            v = wald.ruin_gaussian_bounded(x, k, d.mu, d.sigma)
        out.append(("gaussian_wald", RuinEstimate.exact(v, Method.WALD_APPROX)))
    else:
        raise DomainError(f"unknown ruin kind {kind!r}")
    return out, diag, d


def cmd_ruin(args) -> tuple[RunReport, int]:
    defaults = RUIN_DEFAULTS[args.sub]
    _apply_config(args, defaults)
    if args.k is not None:
        WalkScenario(args.x, args.k, Gaussian(0.0, 1.0))  # barrier ordering
    results, diag, d = ruin_results(args.sub, args)
    report = RunReport(f"ruin {args.sub}", _scenario(args, defaults),
                       int(args.seed) if args.with_mc else None)
    for label, est in results:
        report.add(label, est)
    report.diagnostics.update(diag)
    if args.with_mc:
        _run_mc(args, report, d)
        mc = report.results[-1]
        report.diagnostics["mc_censored"] = mc["diagnostics"].get("censored", 0)
    return report, EXIT_OK


# -- alm ----------------------------------------------------------------------

ALM_DEFAULTS = {"a": None, "b": 1.0, "mu": None, "sigma": None, "growth": 0.0, "r": None,
                "theta": None, "with_mc": False, "paths": 100_000, "seed": 0, "dt": 1e-3,
                "t": None, "horizon": None}


def alm_scenario(args) -> AlmScenario:
    _require(args, "a", "mu", "sigma", "r", "theta")
    return AlmScenario(a=float(args.a), b=float(args.b), mu=float(args.mu), sigma=float(args.sigma),
                       growth=float(args.growth), discount=float(args.r), restart=float(args.theta))


def cmd_alm(args) -> tuple[RunReport, int]:
    _apply_config(args, ALM_DEFAULTS)
    s = alm_scenario(args)
    mc = args.sub == "simulate" or args.with_mc
    report = RunReport(f"alm {args.sub}", _scenario(args, ALM_DEFAULTS), int(args.seed) if mc else None)
    k = alm.passage_exponent(s.mu, s.sigma, s.net_rate)
    report.diagnostics["K"] = k
    report.diagnostics["net_rate"] = s.net_rate
    for w in s.warnings():
        report.diagnostics.setdefault("warnings", []).append(w)
    if args.sub in ("cost", "simulate"):
        report.add("perpetual_cost", alm.perpetual_cost(s))
    if args.sub == "limit":
        report.add("perpetual_cost_limit", alm.perpetual_cost_limit(s))
    if mc:
        if args.t is not None:
            est = alm.simulate_finite_cost(s, float(args.t), int(args.paths), float(args.dt),
                                           int(args.seed), args.workers)
            report.add("finite_cost_mc", est)
        else:
            est = alm.simulate_perpetual_cost(s, int(args.paths), args.horizon, float(args.dt),
                                              int(args.seed), args.workers)
            report.add("perpetual_cost_mc", est)
            report.diagnostics["truncation_bound"] = est.diagnostics["truncation_bound"]
    return report, EXIT_OK


# -- validate -----------------------------------------------------------------

VALIDATE_DEFAULTS = {"quick": False, "seed": 0}


def cmd_validate(args) -> tuple[RunReport, int]:
    _apply_config(args, VALIDATE_DEFAULTS)

    def progress(r):
        if not args.json:
            mark = "PASS" if r.passed else "FAIL"
            print(f"  [{mark}] {r.name:<44} error={r.error:.3e} tol={r.tolerance:.3e}",
                  file=sys.stderr)

    checks = validation.run_checks(quick=bool(args.quick), seed=int(args.seed), workers=args.workers,
                                   progress=progress)
    report = RunReport("validate", _scenario(args, VALIDATE_DEFAULTS), int(args.seed))
    report.diagnostics["checks"] = [c.to_dict() for c in checks]
    failed = [c.name for c in checks if not c.passed]
    report.diagnostics["passed"] = len(checks) - len(failed)
    report.diagnostics["failed"] = failed
    return report, (EXIT_FAILED if failed else EXIT_OK)


# -- sweep --------------------------------------------------------------------

SWEEP_KINDS = ("simple", "wald", "gaussian", "alm-cost", "alm-limit")


def _sweep_defaults(kind: str) -> dict[str, Any]:
    if kind in ("simple", "wald", "gaussian"):
        return dict(RUIN_DEFAULTS[kind])
    return dict(ALM_DEFAULTS)


def _sweep_row(kind: str, args) -> dict[str, Any]:
    row: dict[str, Any] = {}
    if kind in ("simple", "wald", "gaussian"):
        results, diag, d = ruin_results(kind, args)
        for label, est in results:
            row[label] = est.value
        if args.with_mc:
            rep = RunReport("", {}, None)
            _run_mc(args, rep, d)
            mc = rep.results[0]
            row.update(mc=mc["value"], mc_stderr=mc["stderr"], mc_lo=mc["ci95"][0], mc_hi=mc["ci95"][1])
    else:
        s = alm_scenario(args)
        row["K"] = alm.passage_exponent(s.mu, s.sigma, s.net_rate)
        if kind == "alm-cost":
            row["perpetual_cost"] = alm.perpetual_cost(s).value
        row["perpetual_cost_limit"] = alm.perpetual_cost_limit(s).value
        if args.with_mc:
            est = alm.simulate_perpetual_cost(s, int(args.paths), args.horizon, float(args.dt),
                                              int(args.seed), args.workers)
            row.update(mc=est.value, mc_stderr=est.stderr, mc_lo=est.ci95[0], mc_hi=est.ci95[1])
    return row


def cmd_sweep(args) -> tuple[RunReport, int]:
    kind = args.kind
    defaults = _sweep_defaults(kind)
    defaults["vary"] = None
    _apply_config(args, defaults)
    if not args.vary:
        raise DomainError("sweep needs at least one --vary NAME=VALUES")
    axes = []
    for spec in args.vary:
        name, sep, values = spec.partition("=")
        name = name.strip().replace("-", "_")
        if not sep or name not in defaults or name in ("vary", "with_mc", "dist"):
            raise DomainError(f"cannot vary {name!r}")
        axes.append((name, parse_values(values)))
    names = [n for n, _ in axes]
    rows = []
    for combo in itertools.product(*(v for _, v in axes)):
        for n, v in zip(names, combo):
            setattr(args, n, v)
        rows.append({**dict(zip(names, combo)), **_sweep_row(kind, args)})
    for n, (_, vals) in zip(names, axes):
        setattr(args, n, None)
    scen = _scenario(args, defaults)
    report = RunReport(f"sweep {kind}", scen, int(args.seed) if args.with_mc else None)
    report.diagnostics["rows"] = len(rows)
    text = rows_to_csv(rows)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(text)
        report.diagnostics["csv"] = args.csv
    else:
        report.diagnostics["table"] = rows
        if not args.json:
            sys.stdout.write(text)
            return None, EXIT_OK
    return report, EXIT_OK


def rows_to_csv(rows: list[dict[str, Any]]) -> str:
    cols: list[str] = []
    for r in rows:
        cols.extend(c for c in r if c not in cols)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r.get(c) is None else fmt_float(float(r[c])) if isinstance(r.get(c), float)
                    else r.get(c) for c in cols])
    return buf.getvalue()


# -- parser -------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="emit the run report as JSON")
    p.add_argument("--config", help="JSON file of parameters (flag names as keys)")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker threads (default: ${simulate.WORKERS_ENV} or CPU count)")
    p.add_argument("--timing", action="store_true", help="include wall time in the report")


def _mc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--with-mc", action="store_true", default=None, help="add a Monte Carlo estimate")
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)


def _ruin_flags(p: argparse.ArgumentParser, kind: str) -> None:
    num = int if kind == "simple" else float
    p.add_argument("--x", type=num, help="initial reserve")
    p.add_argument("--k", type=num, help="upper barrier (omit for no upper barrier)")
    if kind == "simple":
        p.add_argument("--p", type=float, help="probability of an up-step")
    elif kind == "wald":
        p.add_argument("--dist", help="twopoint:<p> | gaussian:<mu>,<sigma> | cashflow:<d>;<d>")
    else:
        p.add_argument("--mu", type=float)
        p.add_argument("--sigma", type=float)
    _mc_flags(p)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--proxy-barrier", type=float, help="absorbing level used to simulate k = infinity")


def _alm_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--a", type=float, help="initial log funding ratio")
    p.add_argument("--b", type=float, help="initial liabilities")
    p.add_argument("--mu", type=float, help="drift of the log funding ratio (< 0)")
    p.add_argument("--sigma", type=float)
    p.add_argument("--growth", type=float, help="liability growth rate")
    p.add_argument("--r", type=float, help="discount rate (> growth)")
    p.add_argument("--theta", type=float, help="restart level of the log funding ratio")
    _mc_flags(p)
    p.add_argument("--dt", type=float)
    p.add_argument("--t", type=float, help="finite horizon for the cost (default perpetual)")
    p.add_argument("--horizon", type=float, help="truncation horizon of the perpetual simulation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reserveruin", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"reserveruin {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)

    ruin = groups.add_parser("ruin", help="ruin probabilities")
    ruin_sub = ruin.add_subparsers(dest="sub", required=True)
    for kind in ("simple", "wald", "gaussian"):
        p = ruin_sub.add_parser(kind)
        _ruin_flags(p, kind)
        _common(p)
        p.set_defaults(handler=cmd_ruin)

    almp = groups.add_parser("alm", help="asset-liability restart costs")
    alm_sub = almp.add_subparsers(dest="sub", required=True)
    for kind in ("cost", "limit", "simulate"):
        p = alm_sub.add_parser(kind)
        _alm_flags(p)
        _common(p)
        p.set_defaults(handler=cmd_alm)

    val = groups.add_parser("validate", help="run the cross-validation matrix")
    val.add_argument("--quick", action="store_true", default=None)
    val.add_argument("--seed", type=int)
    _common(val)
    val.set_defaults(handler=cmd_validate)

    sw = groups.add_parser("sweep", help="parameter sweeps to CSV")
    sw.add_argument("kind", choices=SWEEP_KINDS)
    sw.add_argument("--vary", action="append", help="NAME=v1,v2,... or NAME=start:stop[:step]")
    sw.add_argument("--csv", help="write the table here instead of standard output")
    # Union of all scenario flags; irrelevant ones are rejected by the kind.
    sw.add_argument("--x", type=float)
    sw.add_argument("--k", type=float)
    sw.add_argument("--p", type=float)
    sw.add_argument("--dist")
    sw.add_argument("--a", type=float)
    sw.add_argument("--b", type=float)
    sw.add_argument("--mu", type=float)
    sw.add_argument("--sigma", type=float)
    sw.add_argument("--growth", type=float)
    sw.add_argument("--r", type=float)
    sw.add_argument("--theta", type=float)
    _mc_flags(sw)
    sw.add_argument("--max-steps", type=int)
    sw.add_argument("--proxy-barrier", type=float)
    sw.add_argument("--dt", type=float)
    sw.add_argument("--horizon", type=float)
    _common(sw)
    sw.set_defaults(handler=cmd_sweep)
    return parser


def _normalize_simple(args) -> None:
    # Integer parameters of the simple walk may arrive as floats (sweeps, configs).
    for name in ("x", "k"):
        v = getattr(args, name, None)
        if isinstance(v, float) and v.is_integer():
            setattr(args, name, int(v))


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.group == "sweep":
        # Only keep the flags meaningful for the sweep kind.
        allowed = set(_sweep_defaults(args.kind)) | {"vary", "csv", "kind"} | _NON_SCENARIO
        given = [k for k, v in vars(args).items() if v not in (None, False) and k not in allowed]
        if given:
            print(f"error: sweep {args.kind} does not take --{given[0].replace('_', '-')}", file=sys.stderr)
            return EXIT_USAGE
        for k in list(vars(args)):
            if k not in allowed:
                delattr(args, k)
    start = time.perf_counter()
    try:
        if getattr(args, "sub", None) == "simple" or getattr(args, "kind", None) == "simple":
            _normalize_simple(args)
        report, code = args.handler(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if report is None:
        return code
    if args.timing:
        report.wall_time = time.perf_counter() - start
    sys.stdout.write(report.to_json() if args.json else report.to_text())
    return code


if __name__ == "__main__":
    sys.exit(main())
