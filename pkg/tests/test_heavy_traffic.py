import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fctl.arrivals import Geometric, NegativeBinomial, Poisson
from fctl.errors import DomainError
from fctl.gauss_rw import mean_max, prob_zero_max
from fctl.heavy_traffic import (
    HeavyTrafficPoint,
    cycle_from_green,
    inverse_scaling,
    mean_first_order,
    mean_gaussian_limit,
    mean_refined,
    p_empty_approx,
    refined_params,
    scaling,
)
from fctl.transform import FctlInstance, prob_empty

P03 = Poisson(0.3)


@pytest.mark.parametrize("beta,g,c", [(0.1, 10, 32.3), (1.0, 10, 24.3), (1.0, 100, 301.6), (0.1, 100, 330.0)])
def test_cycle_from_green_published(beta, g, c):
    assert round(cycle_from_green(beta, g, P03).c, 1) == c


def test_inverse_scaling_requires_slack():
    with pytest.raises(DomainError):
        inverse_scaling(30.0, 100.0, P03)
    with pytest.raises(DomainError):
        HeavyTrafficPoint(0.0, 10.0, 5.0)


@settings(max_examples=40, deadline=None)
@given(beta=st.floats(0.01, 5.0), c=st.floats(5.0, 5000.0), mu=st.floats(0.05, 0.9))
def test_scaling_round_trip(beta, c, mu):
    model = Poisson(mu)
    pt = scaling(beta, c, model)
    assert inverse_scaling(pt.g, c, model) == pytest.approx(beta, rel=1e-9)
    assert cycle_from_green(beta, pt.g, model).c == pytest.approx(c, rel=1e-9)


@pytest.mark.parametrize("beta,g,expected", [(0.1, 10, 13.826), (1.0, 10, 0.3414), (0.1, 100, 44.198)])
def test_first_order_published(beta, g, expected):
    assert mean_first_order(cycle_from_green(beta, g, P03), P03) == pytest.approx(expected, abs=1e-3)


@pytest.mark.parametrize("beta,g,expected", [(0.1, 10, 13.985), (1.0, 10, 0.4437), (1.0, 50, 0.9199)])
def test_refined_published(beta, g, expected):
    assert mean_refined(cycle_from_green(beta, g, P03), P03) == pytest.approx(expected, abs=1e-3)


def test_p_empty_published():
    assert p_empty_approx(0.1) == pytest.approx(0.1334, abs=5e-5)
    assert p_empty_approx(1.0) == pytest.approx(0.8005, abs=5e-5)
    assert p_empty_approx(4.0) == pytest.approx(prob_zero_max(4.0, "integral"))


def test_p_empty_gap_matches_table():
    inst = FctlInstance(P03, 100, cycle_from_green(0.1, 100, P03).c)
    exact = prob_empty(inst)
    assert exact == pytest.approx(0.1427, abs=5e-4)
    assert abs(exact - p_empty_approx(0.1)) <= abs(0.1427 - 0.1334) + 5e-4


def test_poisson_refined_constants():
    # Poisson: E[Y^3] = mu^3 + 3mu^2 + mu and sigma^2 = mu give a = -2,
    # hence theta = (1/sqrt2)(1 - 2/3 - 1) = -sqrt2/3 for every rate
    for mu in (0.1, 0.3, 0.7):
        model = Poisson(mu)
        prm = refined_params(cycle_from_green(1.0, 10, model), model)
        assert prm.a == pytest.approx(-2.0, rel=1e-12)
        assert prm.theta == pytest.approx(-math.sqrt(2) / 3, rel=1e-12)


def test_refined_constants_non_poisson():
    for model in (Geometric(0.4), NegativeBinomial(0.1, 0.4)):
        prm = refined_params(cycle_from_green(1.0, 50, model), model)
        assert math.isfinite(prm.a) and math.isfinite(prm.theta)
        assert 0 < prm.b_beta < 1.0 / math.sqrt(2)


def test_gaussian_limit_equals_first_order():
    pt = cycle_from_green(0.7, 40, P03)
    assert mean_gaussian_limit(pt, P03) == pytest.approx(mean_first_order(pt, P03), rel=1e-9)
    assert mean_gaussian_limit(pt, P03) == pytest.approx(P03.std * math.sqrt(pt.c) * mean_max(0.7))


def test_refined_tends_to_first_order_relative():
    gaps = []
    for c in (100.0, 1000.0, 10000.0):
        pt = scaling(1.0, c, P03)
        gaps.append(abs(mean_refined(pt, P03) / mean_first_order(pt, P03) - 1))
    assert gaps[0] > gaps[1] > gaps[2]
