"""Maximum of the Gaussian random walk and the G-integral family.

``M_beta`` is the all-time maximum of a random walk with N(-beta, 1)
increments.  Its mean, atom at zero and moment generating function are
available here, together with the integrals

    G0(b) = int_0^inf t^2/(b^2+t^2) * e^{-b^2-t^2}/(1-e^{-b^2-t^2}) dt
    G1(b) = int_0^inf e^{-b^2-t^2}/(1-e^{-b^2-t^2}) dt
    G2(b) = int_0^inf b^2/(b^2+t^2) * e^{-b^2-t^2}/(1-e^{-b^2-t^2}) dt
    G3(b) = int_0^inf t^2/(b^2+t^2)^2 * e^{-b^2-t^2}/(1-e^{-b^2-t^2}) dt
    G4(b) = int_0^inf t^2/(b^2+t^2) * e^{-b^2-t^2}/(1-e^{-b^2-t^2})^2 dt

and the derivatives ``G0'``, ``G0''`` and ``G1'``.  Each can be evaluated by
adaptive quadrature or by a series obtained from expanding
``1/(1-e^{-x})`` geometrically and integrating term by term.
"""
from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericalError

__all__ = [
    "G_ORDERS",
    "B_MIN",
    "SERIES_BETA_LIMIT",
    "g_kernel",
    "zeta_half_line",
    "mean_max",
    "prob_zero_max",
    "mgf_max",
]

G_ORDERS = ("G0", "G1", "G2", "G3", "G4", "G0'", "G0''", "G1'")
B_MIN = 1e-3
SERIES_BETA_LIMIT = 2.0 * math.sqrt(math.pi)
SQRT_PI = math.sqrt(math.pi)

# below this b the term-by-term series needs too many terms; quadrature is used
_SERIES_B_FLOOR = 0.02


# ---------------------------------------------------------------------------
# integrands
# ---------------------------------------------------------------------------
def _phi(u):
    """e^{-u} / (1 - e^{-u}) and its first two derivatives in u."""
    with np.errstate(over="ignore"):
        phi = 1.0 / np.expm1(u)
    d1 = -phi * (1.0 + phi)
    d2 = phi * (1.0 + phi) * (1.0 + 2.0 * phi)
    return phi, d1, d2


def _integrand(order: str, b: float):
    b2 = b * b

    def f(t):
        u = b2 + t * t
        phi, d1, d2 = _phi(u)
        if order == "G0":
            return t * t / u * phi
        if order == "G1":
            return phi
        if order == "G2":
            return b2 / u * phi
        if order == "G3":
            return t * t / (u * u) * phi
        if order == "G4":
            return t * t / u * phi * (1.0 + phi)
        if order == "G1'":
            return 2.0 * b * d1
        # G0 integrand is t^2 psi(u) with psi = phi/u
        psi1 = d1 / u - phi / (u * u)
        if order == "G0'":
            return 2.0 * b * t * t * psi1
        psi2 = d2 / u - 2.0 * d1 / (u * u) + 2.0 * phi / u**3
        return 2.0 * t * t * psi1 + 4.0 * b2 * t * t * psi2

    return f


def _quadrature(order: str, b: float) -> float:
    t_max = math.sqrt(745.0 + b * b)
    f = _integrand(order, b)
    # the integrand varies on the scale b near the origin
    pts = sorted({p for p in (b, 3.0 * b, 10.0 * b, 1.0, 3.0) if 0.0 < p < t_max})
    edges = [0.0, *pts, t_max]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)
        total += val
    return total


def _series(order: str, b: float) -> float:
    b2 = b * b
    # e^{-k b^2} must drop below ~1e-18 relative to the leading term
    n_terms = int(math.ceil((42.0 + max(0.0, math.log(1.0 / b2))) / b2)) + 8
    k = np.arange(1, n_terms + 1, dtype=float)
    sk = np.sqrt(k)
    ek = np.exp(-k * b2)
    erfc_k = special.erfc(b * sk)
    if order == "G1":
        return float(0.5 * SQRT_PI * np.sum(ek / sk))
    if order == "G2":
        return float(0.5 * math.pi * b * np.sum(erfc_k))
    if order == "G0":
        return float(np.sum(0.5 * SQRT_PI * ek / sk - 0.5 * math.pi * b * erfc_k))
    if order == "G0'":
        return float(-0.5 * math.pi * np.sum(erfc_k))
    if order == "G0''":
        return float(SQRT_PI * np.sum(sk * ek))
    if order == "G1'":
        return float(-SQRT_PI * b * np.sum(sk * ek))
    # J(s) = int e^{-k t^2}/(s+t^2) dt, J'(s) its s-derivative, at s = b^2
    erfcx_k = special.erfcx(b * sk)
    j0 = 0.5 * math.pi / b * erfcx_k
    if order == "G3":
        j1 = math.pi * erfcx_k * (k / (2.0 * b) - 1.0 / (4.0 * b**3)) - SQRT_PI * sk / (2.0 * b2)
        return float(np.sum(ek * (j0 + b2 * j1)))
    if order == "G4":
        return float(np.sum(k * ek * (0.5 * SQRT_PI / sk - b2 * j0)))
    raise DomainError(f"unknown G order {order!r}")


def g_kernel(order: str, b: float, method: str = "auto") -> float:
    """Evaluate one member of the G-family at ``b > 0``.

    Parameters
    ----------
    order : str
        One of ``G_ORDERS``.
    b : float
        Argument, must be positive.
    method : {"auto", "series", "quad"}
        ``auto`` uses the series for ``b >= 0.02`` and quadrature below.
    """
    if order not in G_ORDERS:
        raise DomainError(f"unknown G order {order!r}; expected one of {G_ORDERS}")
    if not b > 0:
        raise DomainError(f"G-functions need b > 0, got {b}")
    if method == "auto":
        method = "series" if b >= _SERIES_B_FLOOR else "quad"
    if method == "series":
        return _series(order, float(b))
    if method == "quad":
        return _quadrature(order, float(b))
    raise DomainError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# zeta values and the series for E[M] and P(M = 0)
# ---------------------------------------------------------------------------
@lru_cache(maxsize=None)
def _zeta_mp(two_s: int) -> mpmath.mpf:
    with mpmath.workdps(40):
        return mpmath.zeta(mpmath.mpf(two_s) / 2)


def zeta_half_line(r: int, shift: float = 0.5) -> float:
    """Riemann zeta at ``shift - r`` for ``shift`` in ``{0.5, -0.5}``.

    ``zeta_half_line(r)`` is ``zeta(1/2 - r)``;
    ``zeta_half_line(r, -0.5)`` is ``zeta(-1/2 - r)``.
    """
    if shift not in (0.5, -0.5) or r < 0 or int(r) != r:
        raise DomainError("zeta_half_line needs integer r >= 0 and shift in {0.5, -0.5}")
    return float(_zeta_mp(int(round(2 * (shift - r)))))


def _sum_series(term, max_terms: int = 1000) -> mpmath.mpf:
    total = mpmath.mpf(0)
    for r in range(max_terms):
        t = term(r)
        total += t
        if r >= 8 and abs(t) < 1e-17 * max(1.0, abs(total)):
            return total
    raise NumericalError("zeta series did not converge; beta too close to 2*sqrt(pi)")


def _check_beta(beta: float):
    if not beta > 0:
        raise DomainError(f"drift beta must be positive, got {beta}")


def mean_max(beta: float) -> float:
    """``E[M_beta]``.

    Uses the zeta series for ``0 < beta < 2 sqrt(pi)`` and
    ``(sqrt 2 / pi) G0(beta / sqrt 2)`` otherwise.
    """
    _check_beta(beta)
    if beta >= SERIES_BETA_LIMIT:
        return math.sqrt(2.0) / math.pi * g_kernel("G0", beta / math.sqrt(2.0))
    with mpmath.workdps(30):
        x = -mpmath.mpf(beta) ** 2 / 2
        s = _sum_series(
            lambda r: _zeta_mp(-1 - 2 * r)
            / (mpmath.factorial(r) * (2 * r + 1) * (2 * r + 2))
            * x**r
        )
        b = mpmath.mpf(beta)
        root = mpmath.sqrt(2 * mpmath.pi)
        val = 1 / (2 * b) + _zeta_mp(1) / root + b / 4 + b**2 / root * s
    return float(val)


def _prob_zero_integral(beta: float) -> float:
    def f(v):
        return beta / (beta * beta + v * v) * math.log(-math.expm1(-0.5 * (beta * beta + v * v)))

    val, _ = integrate.quad(f, 0.0, math.inf, epsabs=1e-15, epsrel=1e-13, limit=400)
    return math.exp(val / math.pi)


def prob_zero_max(beta: float, method: str = "series") -> float:
    """``P(M_beta = 0)``.

    ``method="series"`` evaluates the zeta series and is only valid for
    ``beta < 2 sqrt(pi)``; ``"integral"`` uses the real-line integral
    representation; ``"auto"`` picks the series where it is valid.
    """
    _check_beta(beta)
    if method == "auto":
        method = "series" if beta < SERIES_BETA_LIMIT else "integral"
    if method == "integral":
        return _prob_zero_integral(beta)
    if method != "series":
        raise DomainError(f"unknown method {method!r}")
    if beta >= SERIES_BETA_LIMIT:
        raise DomainError(
            "the zeta series for P(M=0) needs beta < 2*sqrt(pi); use method='integral'"
        )
    with mpmath.workdps(30):
        x = -mpmath.mpf(beta) ** 2 / 2
        s = _sum_series(
            lambda r: _zeta_mp(1 - 2 * r) / (mpmath.factorial(r) * (2 * r + 1)) * x**r
        )
        b = mpmath.mpf(beta)
        val = mpmath.sqrt(2) * b * mpmath.exp(b / mpmath.sqrt(2 * mpmath.pi) * s)
    return float(val)


def mgf_max(beta: float, t: complex) -> complex:
    """``E[exp(t M_beta)]`` for ``Re(t) < beta`` from the line integral over ``u = beta + iv``."""
    _check_beta(beta)
    t = complex(t)
    if t.real >= beta:
        raise DomainError(f"MGF of M_beta needs Re(t) < beta = {beta}")
    if t == 0:
        return 1.0 + 0.0j

    def g(v):
        u = beta + 1j * v
        return t / (u * (t - u)) * math.log(-math.expm1(-0.5 * (beta * beta + v * v)))

    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=400)
    # split at v = 0 where the log factor peaks
    re = sum(integrate.quad(lambda v: g(v).real, a, b_, **opts)[0] for a, b_ in ((-math.inf, 0.0), (0.0, math.inf)))
    im = sum(integrate.quad(lambda v: g(v).imag, a, b_, **opts)[0] for a, b_ in ((-math.inf, 0.0), (0.0, math.inf)))
    return complex(np.exp((re + 1j * im) / (2.0 * math.pi)))
