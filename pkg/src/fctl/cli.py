"""Command line front end.

Commands
--------
``eval``       metrics of one lane (exact, oracle and heavy-traffic approximations)
``allocate``   green-time allocation for an intersection
``reproduce``  regenerate one of the benchmark tables (1-9)

Exit codes: 0 success, 2 configuration or input error, 3 infeasible model,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import io
import math
import os
import sys
from typing import Sequence

from . import __version__
from .allocation import (
    IntersectionSpec,
    Method,
    Rounding,
    brute_force_integer,
    first_order,
    refined_betas,
    round_greens,
    weighted_closed_form,
    weighted_numerical,
)
from .config import METRICS, RunConfig, load_config
from .delay import WebsterForm, intersection_delay, mean_delay, webster_allocation, webster_delay
from .errors import ConfigError, DomainError, InfeasibleError, NumericalError, ResourceError
from .heavy_traffic import HeavyTrafficPoint, cycle_from_green, mean_first_order, mean_refined, p_empty_approx
from .oracle import stationary_overflow
from .tables import Table, build_table
from .transform import FctlInstance, GreenTime, mean_overflow, prob_empty

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------
def format_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return f"{v:.6g}"
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def render(table: Table, fmt: str = "csv") -> str:
    cells = [[format_value(v) for v in row] for row in table.rows]
    out = io.StringIO()
    if fmt == "md":
        out.write(f"**{table.title}**\n\n")
        out.write("| " + " | ".join(table.columns) + " |\n")
        out.write("|" + "|".join("---" for _ in table.columns) + "|\n")
        for row in cells:
            out.write("| " + " | ".join(row) + " |\n")
    else:
        out.write(",".join(table.columns) + "\n")
        for row in cells:
            out.write(",".join(row) + "\n")
    return out.getvalue()


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_eval(cfg: RunConfig, lane: int = 0, green: float | None = None, beta: float | None = None,
             metrics: Sequence[str] = ("p0", "mean")) -> Table:
    spec = cfg.intersection
    if not 0 <= lane < len(spec.lanes):
        raise ConfigError(f"lane index {lane} out of range (have {len(spec.lanes)} lanes)")
    model = spec.lanes[lane].arrival
    if green is None:
        raise ConfigError("eval needs a green time (eval/green in the config or --green)")
    cycle = cycle_from_green(beta, green, model).c if beta is not None else spec.cycle
    g = GreenTime.deterministic(int(green)) if float(green).is_integer() else GreenTime.randomized(green)
    try:
        inst = FctlInstance(model, g, cycle)
    except InfeasibleError as exc:
        raise InfeasibleError(f"lane {lane}: {exc}") from None
    pt = HeavyTrafficPoint(inst.beta, cycle, g.mean)
    integer_cycle = float(cycle).is_integer()
    oracle_pmf = stationary_overflow(inst) if integer_cycle else None

    rows: list[list] = [["cycle", "input", cycle], ["green", "input", g.mean], ["beta", "input", inst.beta]]
    ex = mean_overflow(inst)
    if "p0" in metrics:
        rows.append(["p0", "exact", prob_empty(inst)])
        if oracle_pmf is not None:
            rows.append(["p0", "oracle", float(oracle_pmf[0])])
        rows.append(["p0", "approx", p_empty_approx(inst.beta)])
    if "mean" in metrics:
        rows.append(["mean", "exact", ex])
        if oracle_pmf is not None:
            rows.append(["mean", "oracle", float(sum(k * p for k, p in enumerate(oracle_pmf)))])
        rows.append(["mean", "first-order", mean_first_order(pt, model)])
        rows.append(["mean", "refined", mean_refined(pt, model)])
    if "delay" in metrics:
        rows.append(["delay", "exact", mean_delay(inst, ex)])
        rows.append(["delay", "refined", mean_delay(inst, mean_refined(pt, model))])
        rows.append(["delay", "webster", webster_delay(model.mean, cycle, g.mean,
                                                       cfg.options.get("webster_form", "classical"))])
    return Table(f"lane {lane} evaluation", ["metric", "method", "value"], rows)


_SOLVERS = {
    Method.FIRST_ORDER: first_order,
    Method.REFINED: refined_betas,
    Method.WEIGHTED_CLOSED: weighted_closed_form,
    Method.WEIGHTED_NUMERICAL: weighted_numerical,
    Method.BRUTE_FORCE: lambda spec: brute_force_integer(spec, "weighted-sum"),
    Method.WEBSTER: webster_allocation,
}


def cmd_allocate(cfg: RunConfig, method: str = "first-order", rounding: str = "randomized",
                 exact: bool = True) -> Table:
    spec: IntersectionSpec = cfg.intersection
    method = Method(method)
    result = _SOLVERS[method](spec)
    if method is Method.BRUTE_FORCE:
        rounded = [GreenTime.deterministic(int(g)) for g in result.greens]
    else:
        rounded = round_greens(result, spec, rounding)
    c = spec.cycle
    rows = []
    means = []
    for i, (lane, b, g, gt) in enumerate(zip(spec.lanes, result.betas, result.greens, rounded)):
        pt = HeavyTrafficPoint(b, c, g) if b > 0 else None
        if pt is None:
            predicted = math.nan
        elif method is Method.REFINED:
            predicted = mean_refined(pt, lane.arrival)
        else:
            predicted = mean_first_order(pt, lane.arrival)
        row = [i, b, g, str(gt), predicted]
        if exact:
            inst = FctlInstance(lane.arrival, gt, c)
            ex = mean_overflow(inst)
            means.append(ex)
            row += [ex, mean_delay(inst, ex)]
        rows.append(row)
    columns = ["lane", "beta", "green", "green_rounded", "EX_predicted"]
    if exact:
        columns += ["EX_exact", "ED_exact"]
        report = intersection_delay(spec, rounded, means)
        rows.append(["all", "", sum(result.greens), "", "", sum(means), report.aggregate])
    return Table(f"allocation ({method.value}, c={format_value(c)})", columns, rows)


def cmd_reproduce(table_id: int, webster_form: str = "classical") -> Table:
    return build_table(table_id, webster_form=webster_form)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------
def _add_output_flags(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=["csv", "md"], default=None, help="output format (default csv)")
    p.add_argument("--out", metavar="PATH", help="write output to PATH instead of stdout")
    p.add_argument("--webster-form", choices=[f.value for f in WebsterForm], default=None,
                   help="algebraic form of Webster's delay formula (default classical)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fctl", description="Fixed-cycle traffic light queue toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eval", help="evaluate one lane")
    pe.add_argument("--config", required=True, metavar="PATH")
    pe.add_argument("--lane", type=int, default=None)
    pe.add_argument("--green", type=float, default=None)
    pe.add_argument("--beta", type=float, default=None,
                    help="derive the cycle from (beta, green) instead of using the configured cycle")
    pe.add_argument("--metrics", default=None, help=f"comma separated subset of {','.join(METRICS)}")
    _add_output_flags(pe)

    pa = sub.add_parser("allocate", help="allocate green times")
    pa.add_argument("--config", required=True, metavar="PATH")
    pa.add_argument("--method", choices=[m.value for m in Method], default=None)
    pa.add_argument("--rounding", choices=[r.value for r in Rounding], default=None)
    pa.add_argument("--no-exact", action="store_true", help="skip exact mean overflow and delay")
    _add_output_flags(pa)

    pr = sub.add_parser("reproduce", help="regenerate a benchmark table")
    pr.add_argument("table_id", type=int, choices=range(1, 10), metavar="TABLE_ID", help="1..9")
    _add_output_flags(pr)
    return parser


def _pick(cli_value, cfg: RunConfig | None, key: str, default):
    if cli_value is not None:
        return cli_value
    if cfg is not None and key in cfg.options:
        return cfg.options[key]
    return default


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = None
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        if "quadrature_max" in cfg.options:
            os.environ["FCTL_QUADRATURE_MAX"] = str(cfg.options["quadrature_max"])
    fmt = _pick(args.format, cfg, "format", "csv")
    webster_form = _pick(args.webster_form, cfg, "webster_form", "classical")
    if cfg is not None:
        cfg.options["webster_form"] = webster_form

    if args.command == "eval":
        ev = cfg.eval
        metrics = args.metrics.split(",") if args.metrics else ev.get("metrics", ["p0", "mean"])
        unknown = [m for m in metrics if m not in METRICS]
        if unknown:
            raise ConfigError(f"unknown metrics {unknown}; choose from {list(METRICS)}")
        table = cmd_eval(
            cfg,
            lane=args.lane if args.lane is not None else ev.get("lane", 0),
            green=args.green if args.green is not None else ev.get("green"),
            beta=args.beta if args.beta is not None else ev.get("beta"),
            metrics=metrics,
        )
    elif args.command == "allocate":
        table = cmd_allocate(
            cfg,
            method=_pick(args.method, cfg, "method", "first-order"),
            rounding=_pick(args.rounding, cfg, "rounding", "randomized"),
            exact=not args.no_exact and cfg.options.get("exact", True),
        )
    else:
        table = cmd_reproduce(args.table_id, webster_form)
    _emit(render(table, fmt), args.out)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(argv)
    except InfeasibleError as exc:
        print(f"fctl: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalError, ResourceError) as exc:
        print(f"fctl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DomainError) as exc:
        print(f"fctl: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"fctl: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
