"""Benchmark scenarios and the tables computed from them.

Tables 1-2 evaluate a single Poisson(0.3) lane at fixed drift, tables 3-4
a two-lane intersection, tables 5-9 a four-lane intersection with Webster's
rule as baseline.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .allocation import IntersectionSpec, LaneSpec, first_order, refined_betas, weighted_numerical
from .arrivals import Geometric, NegativeBinomial, Poisson
from .delay import WebsterForm, intersection_delay, webster_allocation, webster_delay
from .heavy_traffic import HeavyTrafficPoint, cycle_from_green, mean_first_order, mean_refined, p_empty_approx
from .transform import FctlInstance, GreenTime, mean_overflow, prob_empty

__all__ = [
    "Table",
    "TABLES",
    "build_table",
    "two_lane_spec",
    "four_lane_spec",
    "SINGLE_LANE_GREENS",
    "CYCLES",
]

SINGLE_LANE_GREENS = (10, 20, 30, 50, 100)
CYCLES = (30, 50, 100, 200, 500)
WEIGHT_SETS = {"equal": (1.0, 1.0, 1.0, 1.0), "increasing": (1.0, 2.0, 3.0, 4.0)}


@dataclass
class Table:
    title: str
    columns: list[str]
    rows: list[list]


def two_lane_spec(cycle: float) -> IntersectionSpec:
    """Poisson(0.4) and geometric(0.4) lanes, five slots of lost time."""
    return IntersectionSpec((LaneSpec(Poisson(0.4)), LaneSpec(Geometric(0.4))), cycle, 5.0)


def four_lane_spec(cycle: float, weights=(1.0, 1.0, 1.0, 1.0)) -> IntersectionSpec:
    """Geometric(0.3), Poisson(0.3) and two negative binomial (0.1, var 0.4) lanes."""
    models = (Geometric(0.3), Poisson(0.3), NegativeBinomial(0.1, 0.4), NegativeBinomial(0.1, 0.4))
    return IntersectionSpec(tuple(LaneSpec(m, d) for m, d in zip(models, weights)), cycle, 5.0)


def _exact_means(spec: IntersectionSpec, greens) -> list[float]:
    return [
        mean_overflow(FctlInstance(lane.arrival, GreenTime.randomized(g), spec.cycle))
        for lane, g in zip(spec.lanes, greens)
    ]


def _refined_means(spec: IntersectionSpec, betas, greens) -> list[float]:
    return [
        mean_refined(HeavyTrafficPoint(b, spec.cycle, g), lane.arrival)
        for lane, b, g in zip(spec.lanes, betas, greens)
    ]


def single_lane_table(beta: float) -> Table:
    model = Poisson(0.3)
    rows = []
    for g in SINGLE_LANE_GREENS:
        pt = cycle_from_green(beta, g, model)
        inst = FctlInstance(model, g, pt.c)
        rows.append([
            g, pt.c, prob_empty(inst), p_empty_approx(beta),
            mean_overflow(inst), mean_first_order(pt, model), mean_refined(pt, model),
        ])
    return Table(
        f"Single Poisson(0.3) lane, beta={beta:g}",
        ["g", "c", "P0_exact", "P0_approx", "EX_exact", "EX_first_order", "EX_refined"],
        rows,
    )


def two_lane_greens() -> Table:
    rows = []
    for c in CYCLES:
        spec = two_lane_spec(c)
        f, r = first_order(spec), refined_betas(spec)
        rows.append([c, f.greens[0], f.betas[0], f.greens[1], f.betas[1],
                     r.greens[0], r.betas[0], r.greens[1], r.betas[1]])
    return Table(
        "Two-lane greens: equal-drift rule and refined rule",
        ["c", "g1", "beta1", "g2", "beta2", "g1_refined", "beta1_refined", "g2_refined", "beta2_refined"],
        rows,
    )


def two_lane_means() -> Table:
    rows = []
    for c in CYCLES:
        spec = two_lane_spec(c)
        f, r = first_order(spec), refined_betas(spec)
        ex_f = _exact_means(spec, f.greens)
        ex_r = _exact_means(spec, r.greens)
        fo = [mean_first_order(HeavyTrafficPoint(b, c, g), lane.arrival)
              for lane, b, g in zip(spec.lanes, f.betas, f.greens)]
        rf = _refined_means(spec, r.betas, r.greens)
        for i in range(2):
            rows.append([c, i + 1, ex_f[i], fo[i], ex_r[i], rf[i]])
    return Table(
        "Two-lane mean overflow with randomized greens",
        ["c", "lane", "EX_exact", "EX_first_order", "EX_exact_refined_greens", "EX_refined"],
        rows,
    )


def four_lane_greens(weights_name: str) -> Table:
    weights = WEIGHT_SETS[weights_name]
    rows = []
    for c in CYCLES:
        res = weighted_numerical(four_lane_spec(c, weights))
        row = [c]
        for g, b in zip(res.greens, res.betas):
            row += [g, b]
        rows.append(row)
    return Table(
        f"Four-lane weighted allocation, {weights_name} weights",
        ["c", "g1", "beta1", "g2", "beta2", "g3", "beta3", "g4", "beta4"],
        rows,
    )


def four_lane_means() -> Table:
    rows = []
    for name, weights in WEIGHT_SETS.items():
        for c in CYCLES:
            spec = four_lane_spec(c, weights)
            res = weighted_numerical(spec)
            ex = _exact_means(spec, res.greens)
            rf = _refined_means(spec, res.betas, res.greens)
            row = [name, c]
            for e, r in zip(ex, rf):
                row += [e, r]
            rows.append(row)
    return Table(
        "Four-lane mean overflow, exact and refined approximation",
        ["weights", "c", "EX1", "EX1_refined", "EX2", "EX2_refined", "EX3", "EX3_refined", "EX4", "EX4_refined"],
        rows,
    )


def webster_greens() -> Table:
    rows = []
    for c in CYCLES:
        res = webster_allocation(four_lane_spec(c))
        rows.append([c, *res.greens, res.objective_estimate])
    return Table("Webster proportional greens, four-lane", ["c", "g1", "g2", "g3", "g4", "rho"], rows)


def delay_table(webster_form: WebsterForm | str = WebsterForm.CLASSICAL) -> Table:
    rows = []
    for c in CYCLES:
        spec = four_lane_spec(c)
        res = weighted_numerical(spec)
        exact = intersection_delay(spec, res.greens, _exact_means(spec, res.greens))
        approx = intersection_delay(spec, res.greens, _refined_means(spec, res.betas, res.greens))
        rows.append([
            "weighted", c,
            exact.lane_delays[0], approx.lane_delays[0],
            exact.lane_delays[1], approx.lane_delays[1],
            exact.lane_delays[2], approx.lane_delays[2],
            exact.aggregate,
        ])
    for c in CYCLES:
        spec = four_lane_spec(c)
        res = webster_allocation(spec)
        exact = intersection_delay(spec, res.greens, _exact_means(spec, res.greens))
        web = [webster_delay(lane.arrival.mean, c, g, webster_form) for lane, g in zip(spec.lanes, res.greens)]
        rows.append([
            "webster", c,
            exact.lane_delays[0], web[0],
            exact.lane_delays[1], web[1],
            exact.lane_delays[2], web[2],
            exact.aggregate,
        ])
    return Table(
        "Four-lane mean delays (lanes 3 and 4 coincide)",
        ["allocation", "c", "ED1", "ED1_approx", "ED2", "ED2_approx", "ED3", "ED3_approx", "ED"],
        rows,
    )


TABLES: dict[int, Callable[..., Table]] = {
    1: lambda **_: single_lane_table(0.1),
    2: lambda **_: single_lane_table(1.0),
    3: lambda **_: two_lane_greens(),
    4: lambda **_: two_lane_means(),
    5: lambda **_: four_lane_greens("equal"),
    6: lambda **_: four_lane_greens("increasing"),
    7: lambda **_: four_lane_means(),
    8: lambda **_: webster_greens(),
    9: lambda webster_form=WebsterForm.CLASSICAL, **_: delay_table(webster_form),
}


def build_table(table_id: int, **options) -> Table:
    if table_id not in TABLES:
        raise KeyError(f"unknown table {table_id}; choose from {sorted(TABLES)}")
    return TABLES[table_id](**options)
