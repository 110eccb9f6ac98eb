"""Green-time allocation for intersections with several conflicting lanes.

All analytic rules work on the per-lane drifts ``beta_i`` of the square-root
rule ``g_i = mu_i c + beta_i sigma_i sqrt(c)``.  The budget

    sum_i beta_i sigma_i sqrt(c) = c (1 - mu_T) - r_T

holds for every solver, where ``mu_T`` is the total arrival rate and ``r_T``
the lost (all-red) time per cycle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import optimize

from .arrivals import ArrivalModel
from .errors import DomainError, InfeasibleError, NumericalError, ResourceError
from .gauss_rw import B_MIN, g_kernel
from .heavy_traffic import HeavyTrafficPoint, mean_refined, refined_params
from .transform import FctlInstance, GreenTime, mean_overflow

__all__ = [
    "LaneSpec",
    "IntersectionSpec",
    "Method",
    "Rounding",
    "AllocationResult",
    "beta_star",
    "first_order",
    "refined_betas",
    "weighted_closed_form",
    "weighted_numerical",
    "round_greens",
    "brute_force_integer",
    "B_MAX",
]

SQRT2 = math.sqrt(2.0)
B_MAX = 20.0


class Method(str, Enum):
    FIRST_ORDER = "first-order"
    REFINED = "refined"
    WEIGHTED_CLOSED = "weighted-closed"
    WEIGHTED_NUMERICAL = "weighted-numerical"
    BRUTE_FORCE = "brute-force"
    WEBSTER = "webster"


class Rounding(str, Enum):
    FLOOR = "floor"
    NEAREST = "nearest"
    RANDOMIZED = "randomized"


@dataclass(frozen=True)
class LaneSpec:
    arrival: ArrivalModel
    weight: float = 1.0

    def __post_init__(self):
        if not self.weight > 0:
            raise DomainError(f"lane weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class IntersectionSpec:
    """Lanes (one per signal phase), cycle length and lost time, in slots."""

    lanes: tuple[LaneSpec, ...]
    cycle: float
    lost_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lanes", tuple(self.lanes))
        if not self.lanes:
            raise DomainError("an intersection needs at least one lane")
        if not self.cycle > 0:
            raise DomainError(f"cycle must be positive, got {self.cycle}")
        if self.lost_time < 0:
            raise DomainError(f"lost time must be non-negative, got {self.lost_time}")

    @property
    def mus(self) -> np.ndarray:
        return np.array([lane.arrival.mean for lane in self.lanes])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([lane.arrival.std for lane in self.lanes])

    @property
    def weights(self) -> np.ndarray:
        return np.array([lane.weight for lane in self.lanes])

    @property
    def slack(self) -> float:
        """Green time left after every lane receives its mean demand: ``c(1-mu_T) - r_T``."""
        return self.cycle * (1.0 - self.mus.sum()) - self.lost_time

    def check_feasible(self):
        if not self.slack > 0:
            raise InfeasibleError(
                f"infeasible intersection: c(1 - mu_T) - r_T = {self.slack:.6g} must be positive "
                f"(c={self.cycle}, mu_T={self.mus.sum():.6g}, r_T={self.lost_time})"
            )

    def greens_from_betas(self, betas) -> np.ndarray:
        return self.mus * self.cycle + np.asarray(betas) * self.sigmas * math.sqrt(self.cycle)

    def with_cycle(self, cycle: float) -> "IntersectionSpec":
        return IntersectionSpec(self.lanes, cycle, self.lost_time)


@dataclass
class AllocationResult:
    method: Method
    betas: np.ndarray
    greens: np.ndarray
    objective_estimate: float
    lagrange: float | None = None
    pinned: tuple[int, ...] = field(default_factory=tuple)

    def budget_residual(self, spec: IntersectionSpec) -> float:
        return float(np.sum(self.greens) + spec.lost_time - spec.cycle)


def _check_greens(spec: IntersectionSpec, greens: np.ndarray):
    bad = [i for i, g in enumerate(greens) if g >= spec.cycle]
    if bad:
        raise InfeasibleError(
            f"lanes {bad} would receive the whole cycle as green (no red period); "
            "increase the lost time or add lanes"
        )


def _first_order_objective(spec: IntersectionSpec, betas) -> float:
    c = spec.cycle
    return float(
        sum(
            d * s / math.pi * math.sqrt(2.0 * c) * g_kernel("G0", b / SQRT2)
            for d, s, b in zip(spec.weights, spec.sigmas, betas)
        )
    )


def beta_star(spec: IntersectionSpec) -> float:
    """Common drift ``beta* = (c(1-mu_T) - r_T) / (sqrt(c) sum sigma_j)``."""
    spec.check_feasible()
    return spec.slack / (math.sqrt(spec.cycle) * spec.sigmas.sum())


def first_order(spec: IntersectionSpec) -> AllocationResult:
    """Equal drifts for all lanes, minimising the first-order mean overflow."""
    b = beta_star(spec)
    betas = np.full(len(spec.lanes), b)
    greens = spec.greens_from_betas(betas)
    _check_greens(spec, greens)
    obj = float(sum(s * math.sqrt(2.0 * spec.cycle) / math.pi * g_kernel("G0", b / SQRT2) for s in spec.sigmas))
    return AllocationResult(Method.FIRST_ORDER, betas, greens, obj)


def _k_constant(model: ArrivalModel, b_star: float, c: float) -> float:
    mu, var = model.mean, model.variance
    x = b_star / SQRT2
    theta = refined_params(HeavyTrafficPoint(b_star, c, 0.0), model).theta
    return (
        var / (SQRT2 * mu) * g_kernel("G0", x)
        - b_star * var / (2.0 * mu) * g_kernel("G0'", x)
        - b_star**2 * var / (2.0 * SQRT2 * mu) * g_kernel("G0''", x)
        + theta * g_kernel("G1", x)
        + theta * b_star / SQRT2 * g_kernel("G1'", x)
    )


def refined_betas(spec: IntersectionSpec) -> AllocationResult:
    """One-step correction ``beta_i = beta* + Omega_i`` of the equal-drift rule."""
    b = beta_star(spec)
    if b / SQRT2 < B_MIN:
        raise DomainError(f"beta* = {b:.3g} lies below the G-function domain")
    c = spec.cycle
    sig = spec.sigmas
    k = np.array([_k_constant(lane.arrival, b, c) for lane in spec.lanes])
    omega = math.sqrt(2.0 / c) / g_kernel("G0''", b / SQRT2) * (k.sum() / sig.sum() - k / sig)
    betas = b + omega
    if np.any(betas <= 0):
        raise InfeasibleError(f"refined drifts are not all positive: {betas}")
    greens = spec.greens_from_betas(betas)
    _check_greens(spec, greens)
    obj = float(
        sum(
            mean_refined(HeavyTrafficPoint(bi, c, gi), lane.arrival)
            for bi, gi, lane in zip(betas, greens, spec.lanes)
        )
    )
    return AllocationResult(Method.REFINED, betas, greens, obj)


def weighted_closed_form(spec: IntersectionSpec) -> AllocationResult:
    """Weighted drifts from the small-beta objective: ``beta_i`` proportional to ``sqrt(d_i)``."""
    spec.check_feasible()
    rd = np.sqrt(spec.weights)
    betas = rd * spec.slack / (math.sqrt(spec.cycle) * np.sum(rd * spec.sigmas))
    greens = spec.greens_from_betas(betas)
    _check_greens(spec, greens)
    obj = float(np.sum(spec.weights * spec.sigmas * math.sqrt(spec.cycle) / (2.0 * betas)))
    return AllocationResult(Method.WEIGHTED_CLOSED, betas, greens, obj)


@lru_cache(maxsize=None)
def _g0_prime_range() -> tuple[float, float]:
    return g_kernel("G0'", B_MIN), g_kernel("G0'", B_MAX)


def _invert_g0_prime(target: float) -> tuple[float, bool]:
    """Solve ``G0'(b) = target`` on ``[B_MIN, B_MAX]``; returns (b, pinned)."""
    lo_val, hi_val = _g0_prime_range()
    if target <= lo_val:
        return B_MIN, True
    if target >= hi_val:
        return B_MAX, True
    b = optimize.brentq(lambda x: g_kernel("G0'", x) - target, B_MIN, B_MAX, xtol=1e-15, rtol=1e-14)
    return b, False


def weighted_numerical(spec: IntersectionSpec, tol: float = 1e-10) -> AllocationResult:
    """Minimise ``sum_i d_i (sigma_i/pi) sqrt(2c) G0(beta_i/sqrt2)`` under the budget.

    Stationarity gives ``G0'(beta_i/sqrt2) = pi lambda / (d_i sqrt(c))`` for a
    single multiplier ``lambda < 0``, found by bisection on ``log(-lambda)``.
    """
    spec.check_feasible()
    c = spec.cycle
    rc = math.sqrt(c)
    d = spec.weights
    sig = spec.sigmas

    def betas_for(lam):
        out, pins = [], []
        for i, di in enumerate(d):
            b, pinned = _invert_g0_prime(math.pi * lam / (di * rc))
            out.append(SQRT2 * b)
            if pinned:
                pins.append(i)
        return np.array(out), pins

    def residual(log_neg_lam):
        betas, _ = betas_for(-math.exp(log_neg_lam))
        return float(np.sum(betas * sig) * rc - spec.slack)

    lo, hi = math.log(1e-12), math.log(1e6)
    r_lo, r_hi = residual(lo), residual(hi)
    if not (r_lo > 0 > r_hi):
        raise NumericalError(
            "no Lagrange multiplier in [-1e6, -1e-12] meets the green-time budget"
        )
    x = optimize.brentq(residual, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=300)
    lam = -math.exp(x)
    betas, pins = betas_for(lam)
    if abs(np.sum(betas * sig) * rc - spec.slack) > tol * max(1.0, spec.slack):
        raise NumericalError("weighted allocation did not reach the budget tolerance")
    greens = spec.greens_from_betas(betas)
    _check_greens(spec, greens)
    return AllocationResult(
        Method.WEIGHTED_NUMERICAL, betas, greens, _first_order_objective(spec, betas), lam, tuple(pins)
    )


def round_greens(result: AllocationResult, spec: IntersectionSpec,
                 policy: Rounding | str = Rounding.RANDOMIZED) -> list[GreenTime]:
    """Turn real-valued greens into per-lane ``GreenTime`` objects.

    ``randomized`` keeps the mean green exactly by mixing floor and ceiling;
    ``floor`` and ``nearest`` produce integers and re-check stability.
    """
    policy = Rounding(policy)
    greens = np.asarray(result.greens, dtype=float)
    if policy is Rounding.RANDOMIZED:
        return [GreenTime.randomized(g) for g in greens]
    if policy is Rounding.FLOOR:
        ints = np.floor(greens + 1e-9).astype(int)
    else:
        ints = np.floor(greens + 0.5).astype(int)
    loads = spec.mus * spec.cycle / np.maximum(ints, 1e-300)
    bad = [i for i, (g, rho) in enumerate(zip(ints, loads)) if g <= 0 or rho >= 1.0]
    if bad:
        detail = ", ".join(f"lane {i}: g={ints[i]}, rho={loads[i]:.4g}" for i in bad)
        raise InfeasibleError(f"{policy.value} rounding makes lanes unstable ({detail})")
    if ints.sum() > spec.cycle - spec.lost_time + 1e-9:
        raise InfeasibleError(
            f"{policy.value} rounding uses {ints.sum()} green slots, more than c - r_T = "
            f"{spec.cycle - spec.lost_time:g}"
        )
    return [GreenTime.deterministic(int(g)) for g in ints]


class Objective(str, Enum):
    SUM = "sum"
    WEIGHTED_SUM = "weighted-sum"


def brute_force_integer(spec: IntersectionSpec, objective: Objective | str = Objective.SUM,
                        max_lanes: int = 5, max_budget: int = 600) -> AllocationResult:
    """Best integer greens for the exact mean-overflow objective.

    The objective separates over lanes, so the search over all vectors with
    ``sum g_i = c - r_T`` is carried out as a min-plus dynamic programme;
    the result is identical to exhaustive enumeration.  Among optimal vectors
    the lexicographically smallest one is returned.
    """
    objective = Objective(objective)
    n = len(spec.lanes)
    if abs(spec.cycle - round(spec.cycle)) > 1e-12 or abs(spec.lost_time - round(spec.lost_time)) > 1e-12:
        raise DomainError("integer search needs integer cycle and lost time")
    c = int(round(spec.cycle))
    budget = c - int(round(spec.lost_time))
    if n > max_lanes or budget > max_budget:
        raise ResourceError(
            f"integer search limited to {max_lanes} lanes and c - r_T <= {max_budget}; "
            "use an analytic rule instead"
        )
    lows = [int(math.floor(lane.arrival.mean * c)) + 1 for lane in spec.lanes]
    if sum(lows) > budget:
        raise InfeasibleError(
            f"no integer allocation keeps every lane stable: minimal stable greens {lows} "
            f"need {sum(lows)} slots but c - r_T = {budget}"
        )
    weights = spec.weights if objective is Objective.WEIGHTED_SUM else np.ones(n)
    spare = budget - sum(lows)
    # cost[i][k]: lane i receiving lows[i] + k slots
    cost = []
    for i, lane in enumerate(spec.lanes):
        row = np.empty(spare + 1)
        for k in range(spare + 1):
            g = lows[i] + k
            row[k] = math.inf if g >= c else weights[i] * mean_overflow(FctlInstance(lane.arrival, g, c))
        cost.append(row)
    # tail[i][s]: best cost of lanes i.. using exactly s spare slots
    tail = [np.full(spare + 1, math.inf) for _ in range(n + 1)]
    tail[n][0] = 0.0
    for i in range(n - 1, -1, -1):
        for s in range(spare + 1):
            tail[i][s] = np.min(cost[i][: s + 1] + tail[i + 1][s::-1])
    if not math.isfinite(tail[0][spare]):
        raise InfeasibleError("no integer allocation leaves every lane a red period")
    greens, s = [], spare
    for i in range(n):
        totals = cost[i][: s + 1] + tail[i + 1][s::-1]
        best = np.min(totals)
        k = int(np.nonzero(totals <= best + 1e-12 * max(1.0, abs(best)))[0][0])
        greens.append(lows[i] + k)
        s -= k
    greens = np.array(greens, dtype=float)
    rc = math.sqrt(spec.cycle)
    betas = (greens - spec.mus * spec.cycle) / (spec.sigmas * rc)
    return AllocationResult(Method.BRUTE_FORCE, betas, greens, float(tail[0][spare]))
