"""Mean vehicle delay and the Webster baseline.

Delays are measured in slots.  The exact mean delay of a lane follows from
its mean overflow queue; Webster's approximation and his proportional green
split serve as the classical point of comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .allocation import AllocationResult, IntersectionSpec, Method
from .errors import DomainError
from .transform import FctlInstance

__all__ = [
    "WebsterForm",
    "DelayReport",
    "mean_delay",
    "webster_delay",
    "webster_allocation",
    "intersection_delay",
]


class WebsterForm(str, Enum):
    CLASSICAL = "classical"
    PRINTED = "printed"


def mean_delay(inst: FctlInstance, mean_overflow: float) -> float:
    """Exact mean delay of an arbitrary vehicle on one lane.

    ``E[D] = (c-g) / (2 c mu (1-mu)) * (sigma^2/(1-mu) + (c-g) mu + 2 E[X])``
    with ``g`` the mean green time.
    """
    mu = inst.arrival.mean
    if not mu < 1:
        raise DomainError(f"mean arrivals per slot must be below 1, got {mu}")
    c, g = inst.cycle, inst.g_mean
    red = c - g
    return red / (2.0 * c * mu * (1.0 - mu)) * (inst.arrival.variance / (1.0 - mu) + red * mu + 2.0 * mean_overflow)


def webster_delay(mu: float, c: float, g: float, form: WebsterForm | str = WebsterForm.CLASSICAL) -> float:
    """Webster's mean-delay approximation in slots.

    ``classical`` is Webster's original expression with green fraction
    ``g/c`` and degree of saturation ``rho = mu c / g``::

        (c-g)^2 / (2c(1-mu)) + rho^2 / (2 mu (1-rho)) - 0.65 (c/mu^2)^(1/3) rho^(2+5g/c)

    ``printed`` replaces the first two terms by
    ``(c-g)^2 / (2c(1-rho)) + rho c^2 / (2 g (g - mu c))``.  The two forms
    differ substantially; only the classical one matches published delay
    tables for this model.
    """
    form = WebsterForm(form)
    if not (mu > 0 and c > 0 and g > 0):
        raise DomainError("Webster delay needs positive mu, c and g")
    rho = mu * c / g
    if not rho < 1:
        raise DomainError(f"Webster delay needs rho = mu c / g < 1, got {rho:.6g}")
    correction = 0.65 * (c / mu**2) ** (1.0 / 3.0) * rho ** (2.0 + 5.0 * g / c)
    if form is WebsterForm.CLASSICAL:
        return (c - g) ** 2 / (2.0 * c * (1.0 - mu)) + rho**2 / (2.0 * mu * (1.0 - rho)) - correction
    return (c - g) ** 2 / (2.0 * c * (1.0 - rho)) + rho * c**2 / (2.0 * g * (g - mu * c)) - correction


def webster_allocation(spec: IntersectionSpec) -> AllocationResult:
    """Greens proportional to the arrival rates: ``g_i = mu_i / sum(mu) * (c - r_T)``.

    Every lane ends up with the same load ``rho = mu_T c / (c - r_T)``.
    """
    spec.check_feasible()
    mus = spec.mus
    greens = mus / mus.sum() * (spec.cycle - spec.lost_time)
    betas = (greens - mus * spec.cycle) / (spec.sigmas * math.sqrt(spec.cycle))
    rho = float(mus.sum() * spec.cycle / (spec.cycle - spec.lost_time))
    return AllocationResult(Method.WEBSTER, betas, greens, objective_estimate=rho)


@dataclass(frozen=True)
class DelayReport:
    lane_delays: tuple[float, ...]
    aggregate: float
    method: str


def intersection_delay(spec: IntersectionSpec, greens: Sequence, means: Sequence[float],
                       method: str = "exact") -> DelayReport:
    """Per-lane mean delays and their average weighted by arrival rate.

    ``greens`` holds per-lane green times (numbers or ``GreenTime``) and
    ``means`` the matching mean overflow queues.
    """
    if not (len(spec.lanes) == len(greens) == len(means)):
        raise DomainError(
            f"lane count mismatch: {len(spec.lanes)} lanes, {len(greens)} greens, {len(means)} means"
        )
    delays = []
    for i, (lane, g, ex) in enumerate(zip(spec.lanes, greens, means)):
        try:
            inst = FctlInstance(lane.arrival, g, spec.cycle)
        except ValueError as exc:
            raise type(exc)(f"lane {i}: {exc}") from None
        delays.append(mean_delay(inst, ex))
    mus = spec.mus
    agg = float(np.dot(mus / mus.sum(), delays))
    return DelayReport(tuple(float(d) for d in delays), agg, method)
