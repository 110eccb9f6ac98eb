"""Heavy-traffic approximations for the overflow queue.

The green time and cycle length are tied together by the square-root rule

    g = mu c + beta sigma sqrt(c),

and the overflow queue is approximated through functionals of the Gaussian
random walk maximum (first order) or through a refinement that carries the
``O(1)`` correction in ``c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .arrivals import ArrivalModel
from .errors import DomainError
from .gauss_rw import SERIES_BETA_LIMIT, g_kernel, mean_max, prob_zero_max

__all__ = [
    "HeavyTrafficPoint",
    "RefinedApproxParams",
    "scaling",
    "inverse_scaling",
    "cycle_from_green",
    "refined_params",
    "mean_first_order",
    "mean_refined",
    "p_empty_approx",
]

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class HeavyTrafficPoint:
    """A (beta, c, g) triple satisfying the square-root rule for one lane."""

    beta: float
    c: float
    g: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not self.c > 0:
            raise DomainError(f"cycle must be positive, got {self.c}")


def scaling(beta: float, c: float, model: ArrivalModel) -> HeavyTrafficPoint:
    """Green time ``g = mu c + beta sigma sqrt(c)`` for the given drift and cycle."""
    if not c > 0:
        raise DomainError(f"cycle must be positive, got {c}")
    g = model.mean * c + beta * model.std * math.sqrt(c)
    return HeavyTrafficPoint(beta, c, g)


def inverse_scaling(g: float, c: float, model: ArrivalModel) -> float:
    """Drift ``beta`` implied by green ``g`` and cycle ``c``."""
    if not c > 0:
        raise DomainError(f"cycle must be positive, got {c}")
    slack = g - model.mean * c
    if not slack > 0:
        raise DomainError(
            f"no positive beta: green {g} does not exceed the mean demand mu*c = {model.mean * c}"
        )
    return slack / (model.std * math.sqrt(c))


def cycle_from_green(beta: float, g: float, model: ArrivalModel) -> HeavyTrafficPoint:
    """Cycle length for which green ``g`` corresponds to drift ``beta``.

    Solves ``mu x^2 + beta sigma x - g = 0`` for ``x = sqrt(c)``.
    """
    if not beta > 0 or not g > 0:
        raise DomainError("beta and g must be positive")
    mu, sigma = model.mean, model.std
    root_c = (-beta * sigma + math.sqrt((beta * sigma) ** 2 + 4.0 * mu * g)) / (2.0 * mu)
    return HeavyTrafficPoint(beta, root_c * root_c, g)


@dataclass(frozen=True)
class RefinedApproxParams:
    """Constants of the refined approximation for one lane and operating point."""

    a: float
    theta: float
    b_beta: float


def refined_params(point: HeavyTrafficPoint, model: ArrivalModel) -> RefinedApproxParams:
    mu, var = model.mean, model.variance
    sigma = math.sqrt(var)
    a = (model.third_moment - mu**3 - 3.0 * (1.0 + mu) * var) / mu
    ratio = mu / var
    theta = var / (mu * SQRT2) * (ratio + ratio * ratio * a / 3.0 - 1.0)
    b = point.beta / SQRT2 / math.sqrt(1.0 + point.beta * sigma / (mu * math.sqrt(point.c)))
    return RefinedApproxParams(a, theta, b)


def mean_first_order(point: HeavyTrafficPoint, model: ArrivalModel) -> float:
    """``(sqrt2/pi) sigma sqrt(c) G0(beta/sqrt2)``."""
    return SQRT2 / math.pi * model.std * math.sqrt(point.c) * g_kernel("G0", point.beta / SQRT2)


def mean_refined(point: HeavyTrafficPoint, model: ArrivalModel) -> float:
    """Refined mean overflow with the ``O(1)`` correction terms included."""
    prm = refined_params(point, model)
    sigma = model.std
    lead = SQRT2 / math.pi * (sigma * math.sqrt(point.c) + point.beta * model.variance / (2.0 * model.mean))
    return lead * g_kernel("G0", prm.b_beta) + prm.theta * point.beta / math.pi * g_kernel(
        "G1", point.beta / SQRT2
    )


def mean_gaussian_limit(point: HeavyTrafficPoint, model: ArrivalModel) -> float:
    """``sigma sqrt(c) E[M_beta]`` with the zeta series for ``E[M_beta]``."""
    return model.std * math.sqrt(point.c) * mean_max(point.beta)


def p_empty_approx(beta: float) -> float:
    """Limit of ``P(X_g = 0)``; switches to the integral form for ``beta >= 2 sqrt(pi)``."""
    method = "series" if beta < SERIES_BETA_LIMIT else "integral"
    return prob_zero_max(beta, method=method)
