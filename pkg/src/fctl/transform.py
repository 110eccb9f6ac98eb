"""Exact stationary analysis of the FCTL queue via contour integrals.

The probability generating function of the overflow queue ``X_g`` (queue
length at the end of the green period) is

    X(w) = exp( 1/(2 pi i) oint  F(z, w) log(1 - K(z)) dz ),
    F(z, w) = (Y'(z) z - Y(z)) (w - Y(w)) / ((z - Y(z)) (z Y(w) - w Y(z))),

with kernel ``K(z) = Y(z)^c E[z^-G]`` and the contour ``|z| = z_sp``, the
saddle point of ``h(z) = -log z + (c/g) log Y(z)``.  For a deterministic green
``K = Y^c / z^g``.  Integrals over circles use the trapezoidal rule in the
angle, which converges geometrically for periodic analytic integrands;
the number of nodes is doubled until two successive values agree.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .arrivals import ArrivalModel
from .errors import DomainError, InfeasibleError, NumericalError

__all__ = [
    "GreenTime",
    "FctlInstance",
    "SaddleInfo",
    "saddle_point",
    "overflow_pgf",
    "prob_empty",
    "mean_overflow",
    "overflow_distribution",
    "overflow_pmf",
    "overflow_moment",
    "scaled_mgf",
]

N_START = 256
N_MAX_DEFAULT = 2**16


def _n_max() -> int:
    raw = os.environ.get("FCTL_QUADRATURE_MAX")
    if raw is None:
        return N_MAX_DEFAULT
    try:
        value = int(raw)
    except ValueError:
        raise DomainError(f"FCTL_QUADRATURE_MAX must be an integer, got {raw!r}") from None
    if value < N_START:
        raise DomainError(f"FCTL_QUADRATURE_MAX must be at least {N_START}")
    return value


@dataclass(frozen=True)
class GreenTime:
    """Green period of ``floor`` slots with probability ``p``, else ``floor + 1``.

    A deterministic green has ``p == 1``.
    """

    floor: int
    p: float = 1.0

    def __post_init__(self):
        if int(self.floor) != self.floor or self.floor < 0:
            raise DomainError(f"green floor must be a non-negative integer, got {self.floor}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"mixing probability must lie in [0, 1], got {self.p}")
        if self.p == 0.0:
            object.__setattr__(self, "floor", int(self.floor) + 1)
            object.__setattr__(self, "p", 1.0)
        object.__setattr__(self, "floor", int(self.floor))

    @classmethod
    def deterministic(cls, g: int) -> "GreenTime":
        if int(g) != g:
            raise DomainError(f"deterministic green time must be an integer, got {g}")
        return cls(int(g), 1.0)

    @classmethod
    def randomized(cls, g_mean: float) -> "GreenTime":
        """Mix ``floor(g)`` and ``ceil(g)`` so that the mean equals ``g_mean``."""
        f = math.floor(g_mean)
        p = f + 1.0 - g_mean
        return cls(int(f), float(p))

    @property
    def ceil(self) -> int:
        return self.floor if self.is_deterministic else self.floor + 1

    @property
    def is_deterministic(self) -> bool:
        return self.p == 1.0

    @property
    def mean(self) -> float:
        return self.p * self.floor + (1.0 - self.p) * (self.floor + 1)

    def log_inverse_pgf(self, z):
        """``log E[z^-G]``."""
        base = -self.floor * np.log(z)
        if self.is_deterministic:
            return base
        return base + np.log(self.p + (1.0 - self.p) / z)

    def dlog_inverse_pgf(self, z):
        """Derivative of ``log E[z^-G]``."""
        d = -self.floor / z
        if self.is_deterministic:
            return d
        return d - (1.0 - self.p) / (z * (self.p * z + 1.0 - self.p))

    def __str__(self):
        if self.is_deterministic:
            return str(self.floor)
        return f"{self.floor}/{self.floor + 1} p={self.p:.6g}"


@dataclass(frozen=True)
class FctlInstance:
    """One lane: arrivals per slot, green time and cycle length (slots)."""

    arrival: ArrivalModel
    green: GreenTime
    cycle: float

    def __post_init__(self):
        if isinstance(self.green, (int, np.integer)):
            object.__setattr__(self, "green", GreenTime.deterministic(int(self.green)))
        elif isinstance(self.green, (float, np.floating)):
            # a real green is read as its floor/ceiling mixture
            object.__setattr__(self, "green", GreenTime.randomized(float(self.green)))
        if not self.cycle > 0:
            raise DomainError(f"cycle length must be positive, got {self.cycle}")
        if self.green.mean > self.cycle + 1e-12:
            raise InfeasibleError(
                f"green time {self.green.mean:.6g} exceeds cycle length {self.cycle:.6g}"
            )
        if self.green.mean <= 0:
            raise InfeasibleError("green time must be positive")
        if not self.load < 1.0:
            raise InfeasibleError(
                f"unstable lane: load rho = mu c / g = {self.load:.6g} >= 1"
            )

    @property
    def g_mean(self) -> float:
        return self.green.mean

    @property
    def load(self) -> float:
        return self.arrival.mean * self.cycle / self.green.mean

    @property
    def beta(self) -> float:
        """Square-root safety margin ``(g - mu c) / (sigma sqrt c)``."""
        return (self.g_mean - self.arrival.mean * self.cycle) / (
            self.arrival.std * math.sqrt(self.cycle)
        )

    def log_kernel(self, z):
        """``log K(z) = c log Y(z) + log E[z^-G]``."""
        return self.arrival.log_pgf_power(z, self.cycle) + self.green.log_inverse_pgf(z)

    def dlog_kernel(self, z):
        return self.cycle * self.arrival.dlog_pgf(z) + self.green.dlog_inverse_pgf(z)


@dataclass(frozen=True)
class SaddleInfo:
    z_sp: float
    h_at_sp: float
    h2_at_sp: float


def _h_parts(inst: FctlInstance, z: float):
    a = inst.arrival
    ratio = inst.cycle / inst.g_mean
    y = float(np.real(a.derivative(z, 0)))
    y1 = float(np.real(a.derivative(z, 1)))
    y2 = float(np.real(a.derivative(z, 2)))
    h = -math.log(z) + ratio * float(np.real(a.log_pgf(z)))
    h1 = -1.0 / z + ratio * y1 / y
    h2 = 1.0 / (z * z) + ratio * (y2 / y - (y1 / y) ** 2)
    return h, h1, h2


def saddle_point(inst: FctlInstance, max_iter: int = 100) -> SaddleInfo:
    """Saddle point ``z_sp > 1`` of ``h(z) = -log z + (c/g) log Y(z)``.

    Newton's method started at ``1 + beta/(sigma sqrt c)``, safeguarded by a
    bracket on which ``h'`` changes sign.
    """
    a = inst.arrival
    R = a.radius
    lo = 1.0
    z = 1.0 + max(inst.beta, 1e-8) / (a.std * math.sqrt(inst.cycle))
    ceiling = R * (1.0 - 1e-12) if math.isfinite(R) else math.inf
    if z >= ceiling:
        z = 0.5 * (1.0 + R)
    # find an upper bracket with h' > 0
    hi = z
    while _h_parts(inst, hi)[1] <= 0:
        lo = hi
        hi = 1.0 + 2.0 * (hi - 1.0)
        if hi >= ceiling:
            hi = 0.5 * (lo + R) if math.isfinite(R) else hi
            if hi - lo < 1e-14 or _h_parts(inst, hi)[1] <= 0 and R - hi < 1e-12 * R:
                raise NumericalError(
                    f"saddle point not found below the PGF radius {R:.6g}"
                )
    z = min(max(z, lo), hi)
    for _ in range(max_iter):
        h, h1, h2 = _h_parts(inst, z)
        if abs(h1) < 1e-12:
            if h >= 0:
                raise NumericalError("h(z_sp) >= 0: contour cannot be placed")
            return SaddleInfo(z, h, h2)
        if h1 < 0:
            lo = z
        else:
            hi = z
        step = z - h1 / h2 if h2 > 0 else 0.5 * (lo + hi)
        z = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-15 * z:
            h, h1, h2 = _h_parts(inst, z)
            if abs(h1) < 1e-9 and h < 0:
                return SaddleInfo(z, h, h2)
            break
    raise NumericalError(f"saddle-point iteration did not converge in {max_iter} steps")


# ---------------------------------------------------------------------------
# quadrature on circles
# ---------------------------------------------------------------------------
def _circle_integral(fn, center: complex, radius: float, n_start: int = N_START,
                     rtol: float = 1e-12, atol: float = 0.0):
    """``(1/2 pi i) oint fn(z) dz`` over ``|z - center| = radius``.

    ``fn`` maps an (N,) array of nodes to an (N,) or (N, M) array.  The
    trapezoidal rule is refined by doubling until successive estimates agree
    to ``max(atol, rtol |I|)`` (or to the round-off floor of the sum).
    """
    n_max = _n_max()
    n = max(N_START, n_start)
    n = min(1 << int(math.ceil(math.log2(n))), n_max)

    def nodes(count, offset):
        theta = 2.0 * math.pi * (np.arange(count) + offset) / count
        return radius * np.exp(1j * theta)

    d = nodes(n, 0.0)
    vals = fn(center + d)
    weights = d if vals.ndim == 1 else d[:, None]
    total = np.sum(vals * weights, axis=0)
    peak = np.max(np.abs(vals * weights), axis=0)
    estimate = total / n
    while True:
        if 2 * n > n_max:
            raise NumericalError(
                f"contour quadrature did not converge with {n_max} nodes "
                "(raise FCTL_QUADRATURE_MAX to allow more)"
            )
        d = nodes(n, 0.5)  # odd nodes of the refined grid
        vals = fn(center + d)
        weights = d if vals.ndim == 1 else d[:, None]
        total = total + np.sum(vals * weights, axis=0)
        peak = np.maximum(peak, np.max(np.abs(vals * weights), axis=0))
        n *= 2
        new = total / n
        # terms carry relative round-off, so the sum cannot beat eps * peak
        floor = 64.0 * np.finfo(float).eps * peak
        tol = np.maximum(np.maximum(atol, rtol * np.abs(new)), floor)
        if np.all(np.abs(new - estimate) <= tol):
            return new
        estimate = new


def _start_nodes(z_sp: float) -> int:
    # the integrand has features of angular width ~ (z_sp - 1) near theta = 0
    return int(min(_n_max() // 2, max(N_START, 8.0 / (z_sp - 1.0))))


class _Contour:
    """z-dependent pieces of the transform on the contour ``|z| = z_sp``."""

    def __init__(self, inst: FctlInstance):
        self.inst = inst
        self.saddle = saddle_point(inst)
        self.radius = self.saddle.z_sp
        logk = float(np.real(inst.log_kernel(self.radius)))
        if logk >= 0.0:
            raise NumericalError(
                "kernel |Y^c(z) E[z^-G]| >= 1 at the saddle point; contour placement failed"
            )

    def log1m_kernel(self, z):
        logk = self.inst.log_kernel(z)
        if np.any(np.real(logk) >= 0.0):
            raise NumericalError("kernel modulus reaches 1 on the contour")
        return np.log(-np.expm1(logk))

    def check_branch(self, z):
        a = self.inst.arrival
        if a.kind == "custom" and self.inst.cycle != int(self.inst.cycle):
            if np.any(np.real(a.pgf(z)) <= 0):
                raise NumericalError(
                    "Re Y(z) <= 0 on the contour; Y(z)^c is ambiguous for non-integer c"
                )


def _pgf_exponent(contour: _Contour, w: np.ndarray, rtol=1e-13):
    """``log X(w)`` for an array of ``w`` inside the contour."""
    inst = contour.inst
    a = inst.arrival
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if np.any(np.abs(w) >= contour.radius):
        raise DomainError(f"overflow PGF argument must satisfy |w| < z_sp = {contour.radius:.12g}")
    yw = np.exp(a.log_pgf(w))
    num_w = w - yw

    def integrand(z):
        contour.check_branch(z)
        yz = np.exp(a.log_pgf(z))
        dyz = a.dlog_pgf(z) * yz
        front = (dyz * z - yz) / (z - yz) * contour.log1m_kernel(z)
        return front[:, None] * num_w[None, :] / (z[:, None] * yw[None, :] - w[None, :] * yz[:, None])

    return _circle_integral(integrand, 0.0, contour.radius,
                            n_start=_start_nodes(contour.radius), rtol=rtol, atol=1e-13)


def overflow_pgf(inst: FctlInstance, w):
    """PGF ``E[w^X_g]`` of the overflow queue; ``w`` scalar or array with ``|w| < z_sp``."""
    contour = _Contour(inst)
    scalar = np.ndim(w) == 0
    out = np.exp(_pgf_exponent(contour, w))
    return complex(out[0]) if scalar else out


def prob_empty(inst: FctlInstance) -> float:
    """``P(X_g = 0)``."""
    return float(np.real(overflow_pgf(inst, 0.0)))


def mean_overflow(inst: FctlInstance) -> float:
    """``E[X_g]`` from the contour formula for the mean.

    ``E[X] = 1/(2 pi i) oint (Y(z) - z mu)/(Y(z) - z) * (-K'(z)/(1 - K(z))) dz``,
    which is the log-derivative form with the ``n/z`` term (whose integral
    vanishes) removed.
    """
    contour = _Contour(inst)
    a = inst.arrival
    mu = a.mean

    def integrand(z):
        contour.check_branch(z)
        yz = np.exp(a.log_pgf(z))
        logk = inst.log_kernel(z)
        if np.any(np.real(logk) >= 0.0):
            raise NumericalError("kernel modulus reaches 1 on the contour")
        k_over = np.exp(logk) / -np.expm1(logk)  # K / (1 - K)
        return -(yz - z * mu) / (yz - z) * inst.dlog_kernel(z) * k_over

    val = _circle_integral(integrand, 0.0, contour.radius,
                           n_start=_start_nodes(contour.radius), rtol=1e-12)
    return float(np.real(val))


def overflow_distribution(inst: FctlInstance, kmax: int, tail: float = 1e-15) -> np.ndarray:
    """``P(X_g = k)`` for ``k = 0..kmax`` by Cauchy extraction on ``|w| = 1``.

    The number of nodes ``M`` is chosen so that the aliased mass
    ``sum_j P(X = k + j M)`` is below ``tail``; the bound uses
    ``P(X = k) <= X(rho) rho^-k`` for ``1 < rho < z_sp``.
    """
    if kmax < 0 or int(kmax) != kmax:
        raise DomainError("kmax must be a non-negative integer")
    contour = _Contour(inst)
    rho = 1.0 + 0.5 * (contour.radius - 1.0)
    x_rho = float(np.real(np.exp(_pgf_exponent(contour, [rho])[0])))
    # tail mass beyond index m is at most x_rho * rho^-m / (1 - 1/rho)
    m_needed = (math.log(x_rho) - math.log(tail) - math.log1p(-1.0 / rho)) / math.log(rho)
    m = max(64, 2 * (kmax + 1), int(math.ceil(m_needed)))
    m = 1 << int(math.ceil(math.log2(m)))
    if m > 2**22:
        raise NumericalError("distribution extraction needs too many nodes; queue too heavy")
    w = np.exp(2j * math.pi * np.arange(m) / m)
    chunk = max(1, 2**22 // (4 * _start_nodes(contour.radius)))
    logs = np.concatenate([_pgf_exponent(contour, w[i:i + chunk]) for i in range(0, m, chunk)])
    coef = np.fft.fft(np.exp(logs)) / m
    pmf = np.real(coef[: kmax + 1])
    if np.any(pmf < -1e-12):
        raise NumericalError("negative probabilities in the extracted distribution")
    return np.clip(pmf, 0.0, None)


def overflow_pmf(inst: FctlInstance, k: int) -> float:
    """``P(X_g = k)``."""
    return float(overflow_distribution(inst, int(k))[int(k)])


def _stirling2(n: int, k: int) -> int:
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)


def overflow_moment(inst: FctlInstance, k: int) -> float:
    """Raw moment ``E[X_g^k]`` from Cauchy derivatives of the PGF at ``w = 1``."""
    if k < 1 or int(k) != k:
        raise DomainError("moment order must be a positive integer")
    contour = _Contour(inst)
    r = min(0.5 * (contour.radius - 1.0), 0.1)
    m = 32
    prev = None
    while True:
        theta = 2.0 * math.pi * np.arange(m) / m
        w = 1.0 + r * np.exp(1j * theta)
        coef = np.fft.fft(np.exp(_pgf_exponent(contour, w))) / m
        # Taylor coefficients at w = 1, factorial moments E[(X)_j] = j! a_j
        fact = np.array([math.factorial(j) * np.real(coef[j]) / r**j for j in range(k + 1)])
        if prev is not None and np.all(np.abs(fact - prev) <= 1e-11 * np.maximum(np.abs(fact), 1e-300)):
            break
        prev = fact
        m *= 2
        if m > 4096:
            raise NumericalError("moment extraction did not converge")
    return float(sum(_stirling2(k, j) * fact[j] for j in range(1, k + 1)))


def scaled_mgf(inst: FctlInstance, t: complex) -> complex:
    """``E[exp(t X_g / (sigma sqrt c))]`` for ``Re(t) <= beta / 2``."""
    t = complex(t)
    if t.real > 0.5 * inst.beta + 1e-15:
        raise DomainError(f"scaled MGF requires Re(t) <= beta/2 = {0.5 * inst.beta:.6g}")
    w = np.exp(t / (inst.arrival.std * math.sqrt(inst.cycle)))
    return overflow_pgf(inst, w)
