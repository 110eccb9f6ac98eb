import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fctl.allocation import (
    IntersectionSpec,
    LaneSpec,
    Rounding,
    beta_star,
    brute_force_integer,
    first_order,
    refined_betas,
    round_greens,
    weighted_closed_form,
    weighted_numerical,
)
from fctl.arrivals import Geometric, NegativeBinomial, Poisson
from fctl.errors import DomainError, InfeasibleError, ResourceError
from fctl.tables import four_lane_spec, two_lane_spec


def budget_ok(spec, res, tol=1e-9):
    lhs = float(np.sum(res.betas * spec.sigmas) * math.sqrt(spec.cycle))
    return abs(lhs - spec.slack) <= tol * max(1.0, spec.slack) and abs(res.budget_residual(spec)) <= tol * spec.cycle


# --- first-order rule -------------------------------------------------------------
@pytest.mark.parametrize("c,beta,g1,g2", [(100, 1.086, 46.87, 48.13), (200, 1.792, 96.03, 98.97)])
def test_first_order_two_lane(c, beta, g1, g2):
    spec = two_lane_spec(c)
    res = first_order(spec)
    assert beta_star(spec) == pytest.approx(beta, abs=1e-3)
    assert res.greens == pytest.approx([g1, g2], abs=1e-2)
    assert budget_ok(spec, res)


def test_first_order_c500():
    spec = two_lane_spec(500)
    res = first_order(spec)
    assert beta_star(spec) == pytest.approx(3.077, abs=1e-3)
    # published to one decimal
    assert res.greens == pytest.approx([243.5, 251.5], abs=0.05)


def test_single_lane_whole_cycle_is_rejected():
    spec = IntersectionSpec((LaneSpec(NegativeBinomial(0.5, 1.0)),), 100.0, 0.0)
    assert spec.sigmas[0] == pytest.approx(1.0)
    assert beta_star(spec) == pytest.approx(5.0)
    with pytest.raises(InfeasibleError, match="lanes \\[0\\]"):
        first_order(spec)


def test_infeasible_intersection():
    with pytest.raises(InfeasibleError, match="c\\(1 - mu_T\\) - r_T"):
        first_order(two_lane_spec(20))


def test_spec_validation():
    with pytest.raises(DomainError):
        IntersectionSpec((), 100, 5)
    with pytest.raises(DomainError):
        IntersectionSpec((LaneSpec(Poisson(0.3)),), -1, 0)
    with pytest.raises(DomainError):
        LaneSpec(Poisson(0.3), weight=0)


# --- refined rule -------------------------------------------------------------------
def test_refined_two_lane_c500():
    res = refined_betas(two_lane_spec(500))
    assert res.betas == pytest.approx([3.049, 3.101], abs=1e-3)
    assert res.greens == pytest.approx([243.1, 251.9], abs=0.05)


def test_refined_negligible_at_c30():
    res = refined_betas(two_lane_spec(30))
    assert res.betas == pytest.approx([0.132, 0.132], abs=1e-3)


def test_refined_identical_lanes_have_no_correction():
    lanes = tuple(LaneSpec(Geometric(0.3)) for _ in range(3))
    spec = IntersectionSpec(lanes, 120, 4)
    assert refined_betas(spec).betas == pytest.approx([beta_star(spec)] * 3, rel=1e-12)


@pytest.mark.parametrize("c", [50, 100, 500])
def test_refined_respects_budget(c):
    spec = two_lane_spec(c)
    assert budget_ok(spec, refined_betas(spec))


# --- weighted rules -------------------------------------------------------------------
def test_weighted_closed_form_example():
    # sigma = 1 for both lanes, slack = 100 (1 - 0.8) - 10 = 10
    lanes = (LaneSpec(NegativeBinomial(0.4, 1.0), 1.0), LaneSpec(NegativeBinomial(0.4, 1.0), 4.0))
    spec = IntersectionSpec(lanes, 100.0, 10.0)
    assert spec.slack == pytest.approx(10.0)
    res = weighted_closed_form(spec)
    assert res.betas == pytest.approx([1 / 3, 2 / 3], rel=1e-12)
    assert budget_ok(spec, res)


def test_weighted_closed_form_equal_weights_is_first_order():
    spec = four_lane_spec(100)
    assert weighted_closed_form(spec).betas == pytest.approx([beta_star(spec)] * 4, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(0.01, 100.0), w=st.lists(st.floats(0.1, 10.0), min_size=4, max_size=4))
def test_weighted_closed_form_homogeneous(scale, w):
    a = weighted_closed_form(four_lane_spec(100, w)).betas
    b = weighted_closed_form(four_lane_spec(100, [scale * x for x in w])).betas
    assert np.allclose(a, b, rtol=1e-10)


def test_weighted_numerical_tables():
    eq = weighted_numerical(four_lane_spec(100))
    assert eq.betas == pytest.approx([0.615] * 4, abs=1e-3)
    assert eq.greens == pytest.approx([33.844, 33.371, 13.893, 13.893], abs=1e-2)
    inc = weighted_numerical(four_lane_spec(100, (1, 2, 3, 4)))
    assert inc.betas == pytest.approx([0.421, 0.576, 0.686, 0.772], abs=1e-3)
    assert inc.greens == pytest.approx([32.627, 33.154, 14.336, 14.882], abs=1e-2)
    assert inc.lagrange < 0 and not inc.pinned


@pytest.mark.parametrize("c", [50, 200])
def test_weighted_numerical_equal_weights_collapse(c):
    spec = four_lane_spec(c)
    res = weighted_numerical(spec)
    assert res.betas == pytest.approx([beta_star(spec)] * 4, abs=1e-9)
    assert budget_ok(spec, res)


def test_weighted_numerical_dominates_equal_drift():
    spec = four_lane_spec(200, (1, 2, 3, 4))
    num = weighted_numerical(spec)
    eq_drift = weighted_numerical.__globals__["_first_order_objective"](spec, [beta_star(spec)] * 4)
    assert num.objective_estimate <= eq_drift + 1e-9
    assert budget_ok(spec, num)


# --- rounding ---------------------------------------------------------------------------
def test_round_randomized_keeps_means():
    spec = two_lane_spec(100)
    res = first_order(spec)
    greens = round_greens(res, spec, Rounding.RANDOMIZED)
    assert [g.mean for g in greens] == pytest.approx(list(res.greens), abs=1e-12)
    assert (greens[0].floor, greens[0].ceil) == (46, 47)


def test_round_floor_breaking_stability():
    # mu = 0.4, c = 50: g* = 20.2 floors to 20 and rho = 1
    spec = IntersectionSpec((LaneSpec(Poisson(0.4)), LaneSpec(Poisson(0.2))), 50.0, 5.0)
    res = first_order(spec)
    res.greens = np.array([20.2, 24.8])
    with pytest.raises(InfeasibleError, match="lane 0: g=20, rho=1"):
        round_greens(res, spec, "floor")


def test_round_nearest_over_budget():
    spec = two_lane_spec(100)
    res = first_order(spec)
    res.greens = np.array([46.6, 48.4])  # rounds to 47 + 48 = 95 = c - r_T, fine
    assert [g.mean for g in round_greens(res, spec, "nearest")] == [47, 48]
    res.greens = np.array([46.6, 48.6])
    with pytest.raises(InfeasibleError, match="more than c - r_T"):
        round_greens(res, spec, "nearest")


# --- brute force -------------------------------------------------------------------------
def test_brute_force_single_lane_takes_everything():
    spec = IntersectionSpec((LaneSpec(Poisson(0.3)),), 40, 3)
    assert list(brute_force_integer(spec).greens) == [37]


@pytest.mark.parametrize("c", [50, 100, 200, 500])
def test_brute_force_two_lane_near_rules(c):
    spec = two_lane_spec(c)
    bf = brute_force_integer(spec)
    assert bf.greens.sum() == c - 5
    for rule in (first_order(spec), refined_betas(spec)):
        assert np.all(np.abs(bf.greens - np.round(rule.greens)) <= 1)


@pytest.mark.parametrize("c", [50, 100, 200])
@pytest.mark.parametrize("weights", [(1, 1, 1, 1), (1, 2, 3, 4)])
def test_brute_force_four_lane_single_slot(c, weights):
    spec = four_lane_spec(c, weights)
    bf = brute_force_integer(spec, "weighted-sum")
    assert np.all(np.abs(bf.greens - np.round(weighted_numerical(spec).greens)) <= 1)


def test_brute_force_tie_break_is_lexicographic():
    # lanes 3 and 4 are identical, so the optimum (16, 16, 6, 7) has a mirror image
    bf = brute_force_integer(four_lane_spec(50))
    assert list(bf.greens) == [16, 16, 6, 7]


def test_brute_force_guards():
    with pytest.raises(InfeasibleError, match="minimal stable greens"):
        brute_force_integer(two_lane_spec(30))
    with pytest.raises(ResourceError):
        brute_force_integer(two_lane_spec(1000))
    with pytest.raises(DomainError):
        brute_force_integer(two_lane_spec(100.5))
