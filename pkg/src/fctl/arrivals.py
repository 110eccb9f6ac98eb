"""Per-slot arrival distributions and their probability generating functions.

Every model exposes the PGF ``Y(z)``, its logarithm (analytic branch near
``z = 1``), the logarithmic derivative ``Y'(z)/Y(z)`` and exact derivatives up
to third order.  Models are immutable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from .errors import ConfigError, DomainError

__all__ = [
    "ArrivalModel",
    "Poisson",
    "Geometric",
    "NegativeBinomial",
    "CustomPmf",
    "arrival_from_dict",
    "pgf",
    "pgf_derivatives",
]


class ArrivalModel:
    """Distribution of the number of arrivals in one slot.

    Subclasses implement ``log_pgf``, ``dlog_pgf``, ``_derivative`` and
    ``pmf``.  ``radius`` is the radius of the disk in which the PGF is analytic
    (``math.inf`` for entire functions).
    """

    kind: str = "abstract"
    radius: float = math.inf

    # --- analytic pieces -------------------------------------------------
    def log_pgf(self, z):
        raise NotImplementedError

    def dlog_pgf(self, z):
        """``Y'(z) / Y(z)``."""
        raise NotImplementedError

    def _derivative(self, z, order: int):
        raise NotImplementedError

    def pmf(self, k):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size):
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    # --- shared ------------------------------------------------------------
    def _check_domain(self, z):
        if np.any(np.abs(z) >= self.radius):
            raise DomainError(
                f"{self.kind} PGF is only analytic for |z| < {self.radius:.6g}"
            )

    def pgf(self, z):
        """Evaluate ``Y(z)``; raises ``DomainError`` outside the analytic disk."""
        z = np.asarray(z) if np.ndim(z) else z
        self._check_domain(z)
        return np.exp(self.log_pgf(z))

    def derivative(self, z, order: int):
        """Exact ``order``-th derivative of the PGF, ``0 <= order <= 3``."""
        if order not in (0, 1, 2, 3):
            raise DomainError(f"PGF derivatives are supported up to order 3, got {order}")
        self._check_domain(z)
        if order == 0:
            return np.exp(self.log_pgf(z))
        return self._derivative(z, order)

    def log_pgf_power(self, z, c: float):
        """``c * log Y(z)``, i.e. the logarithm of ``Y(z)**c`` for real ``c``."""
        return c * self.log_pgf(z)

    @property
    def mean(self) -> float:
        return float(np.real(self._derivative(1.0, 1)))

    @property
    def variance(self) -> float:
        y1 = float(np.real(self._derivative(1.0, 1)))
        y2 = float(np.real(self._derivative(1.0, 2)))
        return y2 + y1 - y1 * y1

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def third_moment(self) -> float:
        """Raw third moment ``E[Y^3] = Y'''(1) + 3 Y''(1) + Y'(1)``."""
        y1, y2, y3 = (float(np.real(self._derivative(1.0, k))) for k in (1, 2, 3))
        return y3 + 3.0 * y2 + y1

    def support_cutoff(self, tail: float = 1e-17) -> int:
        """Smallest ``K`` with ``P(Y > K) < tail``."""
        k = 16
        while True:
            mass = float(np.sum(self.pmf(np.arange(k + 1))))
            if 1.0 - mass < tail or k > 1_000_000:
                return k
            k *= 2

    def pmf_vector(self, tail: float = 1e-17) -> np.ndarray:
        """Probabilities on ``0..K``; the truncated tail is added to the last entry."""
        k = self.support_cutoff(tail)
        p = np.asarray(self.pmf(np.arange(k + 1)), dtype=float)
        last = np.nonzero(p > 0)[0][-1]
        p = p[: last + 1].copy()
        p[-1] += max(0.0, 1.0 - p.sum())
        return p


@dataclass(frozen=True)
class Poisson(ArrivalModel):
    rate: float
    kind: str = field(default="poisson", init=False)
    radius: float = field(default=math.inf, init=False)

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("Poisson mean must be positive")

    def log_pgf(self, z):
        return self.rate * (z - 1.0)

    def dlog_pgf(self, z):
        return self.rate + 0.0 * z

    def _derivative(self, z, order):
        return self.rate**order * np.exp(self.rate * (z - 1.0))

    def pmf(self, k):
        return stats.poisson.pmf(k, self.rate)

    def sample(self, rng, size):
        return rng.poisson(self.rate, size)

    def to_dict(self):
        return {"kind": "poisson", "mean": self.rate}


@dataclass(frozen=True)
class Geometric(ArrivalModel):
    """Geometric arrivals on ``{0, 1, 2, ...}`` parameterised by their mean."""

    mean_arrivals: float
    kind: str = field(default="geometric", init=False)

    def __post_init__(self):
        if not self.mean_arrivals > 0:
            raise DomainError("geometric mean must be positive")

    @property
    def p(self) -> float:
        return 1.0 / (1.0 + self.mean_arrivals)

    @property
    def radius(self) -> float:  # type: ignore[override]
        return 1.0 / (1.0 - self.p)

    @property
    def mean(self) -> float:
        return float(self.mean_arrivals)

    @property
    def variance(self) -> float:
        return self.mean_arrivals * (1.0 + self.mean_arrivals)

    def log_pgf(self, z):
        q = 1.0 - self.p
        return math.log(self.p) - np.log(1.0 - q * z)

    def dlog_pgf(self, z):
        q = 1.0 - self.p
        return q / (1.0 - q * z)

    def _derivative(self, z, order):
        q = 1.0 - self.p
        return self.p * math.factorial(order) * q**order / (1.0 - q * z) ** (order + 1)

    def pmf(self, k):
        k = np.asarray(k)
        return self.p * (1.0 - self.p) ** k

    def sample(self, rng, size):
        return rng.geometric(self.p, size) - 1

    def to_dict(self):
        return {"kind": "geometric", "mean": self.mean_arrivals}


@dataclass(frozen=True)
class NegativeBinomial(ArrivalModel):
    """Negative binomial arrivals given by mean and variance (variance > mean).

    ``Y(z) = (p / (1 - (1-p) z))**r`` with ``p = mean/variance`` and
    ``r = mean p / (1 - p)``; ``r`` need not be an integer.
    """

    mean_arrivals: float
    var_arrivals: float
    kind: str = field(default="negative_binomial", init=False)

    def __post_init__(self):
        if not self.mean_arrivals > 0:
            raise DomainError("negative binomial mean must be positive")
        if not self.var_arrivals > self.mean_arrivals:
            raise DomainError("negative binomial variance must exceed its mean")

    @property
    def p(self) -> float:
        return self.mean_arrivals / self.var_arrivals

    @property
    def r(self) -> float:
        return self.mean_arrivals * self.p / (1.0 - self.p)

    @property
    def radius(self) -> float:  # type: ignore[override]
        return 1.0 / (1.0 - self.p)

    @property
    def mean(self) -> float:
        return float(self.mean_arrivals)

    @property
    def variance(self) -> float:
        return float(self.var_arrivals)

    def log_pgf(self, z):
        q = 1.0 - self.p
        return self.r * (math.log(self.p) - np.log(1.0 - q * z))

    def dlog_pgf(self, z):
        q = 1.0 - self.p
        return self.r * q / (1.0 - q * z)

    def _derivative(self, z, order):
        q = 1.0 - self.p
        rising = math.prod(self.r + j for j in range(order))
        return rising * q**order * np.exp(self.log_pgf(z)) / (1.0 - q * z) ** order

    def pmf(self, k):
        return stats.nbinom.pmf(k, self.r, self.p)

    def sample(self, rng, size):
        return rng.negative_binomial(self.r, self.p, size)

    def to_dict(self):
        return {
            "kind": "negative_binomial",
            "mean": self.mean_arrivals,
            "variance": self.var_arrivals,
        }


@dataclass(frozen=True)
class CustomPmf(ArrivalModel):
    """Arrivals with finite support ``0..K`` given by a probability vector."""

    probabilities: tuple[float, ...]
    kind: str = field(default="custom", init=False)
    radius: float = field(default=math.inf, init=False)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise DomainError("custom pmf needs at least two entries")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError("custom pmf must be non-negative and sum to 1")
        if p[0] <= 0:
            raise DomainError("custom pmf needs P(Y=0) > 0")
        object.__setattr__(self, "probabilities", tuple(float(x) for x in p))

    @property
    def _coef(self) -> np.ndarray:
        return np.asarray(self.probabilities)

    def _poly(self, z, order=0):
        c = np.polynomial.polynomial.polyder(self._coef, order) if order else self._coef
        return np.polynomial.polynomial.polyval(z, c)

    def log_pgf(self, z):
        return np.log(self._poly(z) + 0j) if np.iscomplexobj(z) else np.log(self._poly(z))

    def dlog_pgf(self, z):
        return self._poly(z, 1) / self._poly(z)

    def _derivative(self, z, order):
        return self._poly(z, order)

    def pmf(self, k):
        k = np.asarray(k)
        p = self._coef
        inside = (k >= 0) & (k < p.size)
        return np.where(inside, p[np.clip(k, 0, p.size - 1)], 0.0)

    def sample(self, rng, size):
        return rng.choice(self._coef.size, size=size, p=self._coef)

    def to_dict(self):
        return {"kind": "custom", "pmf": list(self.probabilities)}


def arrival_from_dict(data: dict[str, Any]) -> ArrivalModel:
    """Build a model from its JSON fragment, e.g. ``{"kind": "poisson", "mean": 0.3}``."""
    kind = data.get("kind")
    try:
        if kind == "poisson":
            return Poisson(float(data["mean"]))
        if kind == "geometric":
            return Geometric(float(data["mean"]))
        if kind == "negative_binomial":
            return NegativeBinomial(float(data["mean"]), float(data["variance"]))
        if kind == "custom":
            return CustomPmf(tuple(float(x) for x in data["pmf"]))
    except KeyError as exc:
        raise ConfigError(f"arrival of kind {kind!r} is missing field {exc.args[0]!r}") from None
    raise ConfigError(f"unknown arrival kind {kind!r}")


def pgf(model: ArrivalModel, z):
    """Functional alias of ``model.pgf(z)``."""
    return model.pgf(z)


def pgf_derivatives(model: ArrivalModel, z, order: int):
    """Functional alias of ``model.derivative(z, order)``."""
    return model.derivative(z, order)
