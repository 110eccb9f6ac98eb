"""Acceptance suite: published tables, cross-solver agreement, convergence and G-functions.

Each test prints one ``[PASS]``/``[FAIL] criterion N: ...`` line.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

import published_values as pv
from fctl.arrivals import Geometric, NegativeBinomial, Poisson
from fctl.gauss_rw import G_ORDERS, g_kernel, mean_max, mgf_max, prob_zero_max
from fctl.heavy_traffic import cycle_from_green
from fctl.oracle import stationary_overflow
from fctl.tables import build_table
from fctl.transform import FctlInstance, mean_overflow, overflow_distribution, prob_empty, scaled_mgf


@lru_cache(maxsize=None)
def table(table_id: int):
    return build_table(table_id)


def rel_err(ours, printed):
    return abs(ours - printed) / abs(printed)


def report(capsys, n: int, ok: bool, detail: str):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, f"criterion {n}: {detail}"


def _single_lane_check(rows, printed):
    worst_rel, worst_abs, c_ok = 0.0, 0.0, True
    for row, ref in zip(rows, printed):
        g, c, p0, p0a, ex, exf, exr = row
        assert g == ref[0]
        c_ok &= round(c, 1) == ref[1]
        worst_rel = max(worst_rel, rel_err(p0, ref[2]), rel_err(ex, ref[4]))
        worst_abs = max(worst_abs, abs(p0a - ref[3]), abs(exf - ref[5]), abs(exr - ref[6]))
    return worst_rel, worst_abs, c_ok


def test_criterion_1_table1(capsys):
    worst_rel, worst_abs, c_ok = _single_lane_check(table(1).rows, pv.TABLE1)
    ok = len(table(1).rows) == 5 and worst_rel <= 5e-3 and worst_abs <= 1e-3 and c_ok
    report(capsys, 1, ok, f"beta=0.1 single lane: exact max rel err {worst_rel:.2e} (tol 5e-3), "
                          f"approximations max abs err {worst_abs:.2e} (tol 1e-3), cycles match: {c_ok}")


def test_criterion_2_table2(capsys):
    worst_rel, worst_abs, c_ok = _single_lane_check(table(2).rows, pv.TABLE2)
    ok = len(table(2).rows) == 5 and worst_rel <= 5e-3 and worst_abs <= 1e-3 and c_ok
    report(capsys, 2, ok, f"beta=1 single lane: exact max rel err {worst_rel:.2e} (tol 5e-3), "
                          f"approximations max abs err {worst_abs:.2e} (tol 1e-3), cycles match: {c_ok}")


def _first_order_greens(c):
    """Closed-form equal-drift greens, recomputed here from the lane moments."""
    mus = np.array([0.4, 0.4])
    sig = np.array([math.sqrt(0.4), math.sqrt(0.4 * 1.4)])
    beta = (c * (1 - mus.sum()) - 5.0) / (math.sqrt(c) * sig.sum())
    return beta, mus * c + beta * sig * math.sqrt(c)


def test_criterion_3_table3(capsys):
    worst_beta, worst_green, worst_closed = 0.0, 0.0, 0.0
    notes = []
    for row in table(3).rows:
        c = int(row[0])
        ref = pv.TABLE3[c]
        ours = row[1:]
        for k in (1, 3, 5, 7):
            worst_beta = max(worst_beta, abs(ours[k] - ref[k]))
        half_unit = pv.TABLE3_GREEN_HALF_UNIT[c]
        for k in (0, 2, 4, 6):
            err = abs(ours[k] - ref[k])
            if half_unit > 1e-2:
                # printed with one decimal: compare at print resolution and pin
                # the computed green to the independent closed form instead
                notes.append(f"c={c} green {ref[k]} printed to +-{half_unit}, ours {ours[k]:.4f}")
                err = 0.0 if err <= half_unit else err
            worst_green = max(worst_green, err)
        beta, greens = _first_order_greens(c)
        worst_closed = max(worst_closed, abs(ours[1] - beta), abs(ours[0] - greens[0]), abs(ours[2] - greens[1]))
    ok = worst_beta <= 1e-2 and worst_green <= 1e-2 and worst_closed <= 1e-9
    report(capsys, 3, ok, f"two-lane rules: beta max abs err {worst_beta:.2e}, greens max abs err "
                          f"{worst_green:.2e} (tol 1e-2), closed-form check {worst_closed:.1e}; "
                          + "; ".join(notes))


def test_criterion_4_table4(capsys):
    worst = 0.0
    for row in table(4).rows:
        c, lane, ex_f, _, ex_r, _ = row
        ref = pv.TABLE4[(int(c), int(lane))]
        worst = max(worst, rel_err(ex_f, ref[0]), rel_err(ex_r, ref[2]))
    ok = worst <= 1e-2 and len(table(4).rows) == 10
    report(capsys, 4, ok, f"two-lane exact means with randomized greens: max rel err {worst:.2e} (tol 1e-2)")


def test_criterion_5_tables5_6(capsys):
    worst_beta, worst_green = 0.0, 0.0
    for tid, printed in ((5, pv.TABLE5), (6, pv.TABLE6)):
        for row in table(tid).rows:
            ref = printed[int(row[0])]
            ours = row[1:]
            worst_green = max(worst_green, *(abs(ours[k] - ref[k]) for k in (0, 2, 4, 6)))
            worst_beta = max(worst_beta, *(abs(ours[k] - ref[k]) for k in (1, 3, 5, 7)))
    ok = worst_beta <= 1e-3 and worst_green <= 1e-2
    report(capsys, 5, ok, f"four-lane weighted allocation: beta max abs err {worst_beta:.2e} (tol 1e-3), "
                          f"greens max abs err {worst_green:.2e} (tol 1e-2)")


def test_criterion_6_table7(capsys):
    worst, cells = 0.0, 0
    for row in table(7).rows:
        ref = pv.TABLE7[(row[0], int(row[1]))]
        for ours, printed in zip(row[2:], ref):
            worst = max(worst, rel_err(ours, printed))
            cells += 1
    ok = cells == 80 and worst <= 1e-2
    report(capsys, 6, ok, f"four-lane means: {cells // 2} exact and {cells // 2} refined values, "
                          f"max rel err {worst:.2e} (tol 1e-2)")


def test_criterion_7_delay_tables(capsys):
    # closed-form greens: equal to the printed values up to float round-off
    greens_exact = all(
        all(math.isclose(o, p, rel_tol=1e-12) for o, p in zip(row[1:5], pv.TABLE8[int(row[0])][:4]))
        and abs(row[5] - pv.TABLE8[int(row[0])][4]) <= 5e-4
        for row in table(8).rows
    )
    worst_delay, worst_webster = 0.0, 0.0
    aggregates = {}
    for row in table(9).rows:
        block, c = row[0], int(row[1])
        ref = pv.TABLE9[(block, c)]
        ours = row[2:]
        aggregates[(block, c)] = ours[6]
        for k, (o, p) in enumerate(zip(ours, ref)):
            if block == "webster" and k in (1, 3, 5):
                worst_webster = max(worst_webster, abs(o - p))
            else:
                worst_delay = max(worst_delay, rel_err(o, p))
    ordering = all(
        (aggregates[("weighted", c)] < aggregates[("webster", c)])
        == (pv.TABLE9[("weighted", c)][6] < pv.TABLE9[("webster", c)][6])
        for c in (30, 50, 100, 200, 500)
    )
    ok = greens_exact and worst_delay <= 1e-2 and worst_webster <= 5e-3 and ordering
    report(capsys, 7, ok, f"Webster greens exact: {greens_exact}; delays max rel err {worst_delay:.2e} "
                          f"(tol 1e-2); Webster formula max abs err {worst_webster:.2e} (tol 5e-3); "
                          f"aggregate ordering preserved: {ordering} "
                          f"(c=100: {aggregates[('weighted', 100)]:.3f} vs {aggregates[('webster', 100)]:.3f})")


def cross_solver_instances():
    families = {
        "poisson": Poisson,
        "geometric": Geometric,
        "negbin": lambda mu: NegativeBinomial(mu, 2.5 * mu),
    }
    out = []
    for name, make in families.items():
        for mu in (0.2, 0.3, 0.4):
            for g in range(4, 13):
                for c in (2 * g, 3 * g, 4 * g):
                    if mu * c < g:
                        out.append((name, mu, g, c, make(mu)))
    return out


def test_criterion_8_transform_vs_oracle(capsys):
    instances = cross_solver_instances()
    worst = {"p0": 0.0, "mean": 0.0, "pmf": 0.0}
    for _, _, g, c, model in instances:
        inst = FctlInstance(model, g, c)
        ref = stationary_overflow(inst)
        k = np.arange(ref.size)
        worst["p0"] = max(worst["p0"], abs(prob_empty(inst) - ref[0]))
        worst["mean"] = max(worst["mean"], abs(mean_overflow(inst) - float(k @ ref)))
        kmax = min(ref.size - 1, 200)
        dist = overflow_distribution(inst, kmax)
        worst["pmf"] = max(worst["pmf"], float(np.max(np.abs(dist[: kmax + 1] - ref[: kmax + 1]))))
    families = {i[0] for i in instances}
    ok = len(instances) >= 100 and len(families) == 3 and max(worst.values()) <= 1e-8
    report(capsys, 8, ok, f"{len(instances)} integer instances over {len(families)} families: max abs diff "
                          f"P0 {worst['p0']:.1e}, mean {worst['mean']:.1e}, pmf {worst['pmf']:.1e} (tol 1e-8)")


def _slope(cs, errs):
    return -np.polyfit(np.log(cs), np.log(errs), 1)[0]


def test_criterion_9_convergence(capsys):
    model = Poisson(0.3)
    beta = 1.0
    em, p0m, mgf_lim = mean_max(beta), prob_zero_max(beta), mgf_max(beta, -1.0)
    cs, e_mean, e_p0, e_mgf = [], [], [], []
    for c0 in (200, 400, 800, 1600):
        g = round(model.mean * c0 + model.std * math.sqrt(c0))
        c = cycle_from_green(beta, g, model).c
        inst = FctlInstance(model, g, c)
        assert abs(inst.beta - beta) < 1e-12
        cs.append(c)
        e_mean.append(abs(mean_overflow(inst) / (model.std * math.sqrt(c)) - em))
        e_p0.append(abs(prob_empty(inst) - p0m))
        e_mgf.append(abs(scaled_mgf(inst, -1.0) - mgf_lim) / abs(mgf_lim))
    rates = [_slope(cs, e) for e in (e_mean, e_p0, e_mgf)]
    ratios = [e_mgf[0] / e_mgf[2], e_mgf[1] / e_mgf[3]]
    ok = all(0.35 <= r <= 0.65 for r in rates) and all(1.5 <= q <= 2.5 for q in ratios)
    report(capsys, 9, ok, f"beta=1 rate exponents mean {rates[0]:.3f}, P0 {rates[1]:.3f}, MGF {rates[2]:.3f} "
                          f"(range [0.35, 0.65]); MGF gap ratio per quadrupling "
                          f"{ratios[0]:.2f}, {ratios[1]:.2f} (range [1.5, 2.5])")


def test_criterion_10_g_functions(capsys):
    bs = np.geomspace(0.05, 5.0, 25)
    worst_method = 0.0
    for order in G_ORDERS:
        for b in bs:
            q, s = g_kernel(order, b, "quad"), g_kernel(order, b, "series")
            worst_method = max(worst_method, abs(q - s) / max(abs(q), 1e-300))
    worst_id = 0.0
    for b in bs:
        g0, g1, g2, g3, g4 = (g_kernel(f"G{k}", b) for k in range(5))
        worst_id = max(worst_id, abs(g0 + g2 - g1), abs(g3 + g4 - g2 / (2 * b * b)))
    worst_mean = max(
        abs(mean_max(beta) - math.sqrt(2) / math.pi * g_kernel("G0", beta / math.sqrt(2)))
        for beta in (0.1, 0.5, 1.0, 2.0)
    )
    ok = worst_method <= 1e-10 and worst_id <= 1e-10 and worst_mean <= 1e-8
    report(capsys, 10, ok, f"G quadrature vs series max rel diff {worst_method:.1e} on [0.05, 5] (tol 1e-10); "
                           f"identities max abs err {worst_id:.1e} (tol 1e-10); E[M] vs G0 max abs err "
                           f"{worst_mean:.1e} (tol 1e-8)")
