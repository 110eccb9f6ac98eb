"""Slot-level Markov chain of the FCTL queue: an independent exact solver.

The chain is observed at the end of the green period.  A cycle consists of
``c - G`` red slots followed by ``G`` green slots, where

* red slot:   ``q -> q + A``
* green slot: ``q -> q - 1 + A`` if ``q > 0`` and ``q -> 0`` if ``q == 0``
  (arrivals to an empty queue pass without delay)

with ``A`` drawn from the arrival model.  The state space is truncated at
``q_max``; mass pushed beyond it is kept in the top state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from .errors import DomainError, InfeasibleError, NumericalError, ResourceError
from .transform import FctlInstance

__all__ = ["SlotChain", "stationary_overflow", "simulate", "SimulationResult", "Q_MAX_CAP"]

Q_MAX_CAP = 10**6
_DENSE_LIMIT = 4096


def _require_integer_cycle(inst: FctlInstance) -> int:
    c = inst.cycle
    if abs(c - round(c)) > 1e-12:
        raise DomainError("the slot-level oracle needs an integer cycle length")
    return int(round(c))


@dataclass
class SlotChain:
    """Per-slot transition operators for a truncated state space ``0..q_max``."""

    arrival_pmf: np.ndarray
    q_max: int

    def _shift_matrix(self, pmf: np.ndarray) -> np.ndarray:
        """Rows ``q -> q + A`` for ``A ~ pmf``; mass beyond ``q_max`` stays in the top state."""
        n = self.q_max + 1
        t = np.zeros((n, n))
        for q in range(n):
            hi = min(n, q + pmf.size)
            t[q, q:hi] = pmf[: hi - q]
            # summing the cut-off tail directly avoids leaking round-off into the top state
            t[q, -1] += pmf[hi - q:].sum()
        return t

    def red_matrix(self) -> np.ndarray:
        return self._shift_matrix(self.arrival_pmf)

    def green_matrix(self) -> np.ndarray:
        n = self.q_max + 1
        t = np.zeros((n, n))
        a = self.arrival_pmf
        t[0, 0] = 1.0
        for q in range(1, n):
            lo = q - 1
            hi = min(n, lo + a.size)
            t[q, lo:hi] = a[: hi - lo]
            t[q, -1] += a[hi - lo:].sum()
        return t

    def cycle_matrix(self, cycle: int, green: int) -> np.ndarray:
        # the red phase is a pure shift by the (c - g)-fold arrival convolution
        red_arrivals = np.array([1.0])
        for _ in range(cycle - green):
            red_arrivals = np.convolve(red_arrivals, self.arrival_pmf)[: self.q_max + 1]
        red = self._shift_matrix(red_arrivals)
        return red @ np.linalg.matrix_power(self.green_matrix(), green)

    # vector versions used by power iteration on large state spaces
    def red_step(self, v: np.ndarray) -> np.ndarray:
        full = np.convolve(v, self.arrival_pmf)
        out = full[: self.q_max + 1].copy()
        out[-1] += full[self.q_max + 1:].sum()
        return out

    def green_step(self, v: np.ndarray) -> np.ndarray:
        full = np.convolve(v[1:], self.arrival_pmf)
        out = np.zeros(self.q_max + 1)
        k = min(full.size, self.q_max + 1)
        out[:k] = full[:k]
        out[-1] += full[k:].sum()
        out[0] += v[0]
        return out


def _cycle_operator(chain: SlotChain, inst: FctlInstance, cycle: int) -> np.ndarray:
    g = inst.green
    if g.is_deterministic:
        return chain.cycle_matrix(cycle, g.floor)
    return g.p * chain.cycle_matrix(cycle, g.floor) + (1.0 - g.p) * chain.cycle_matrix(cycle, g.floor + 1)


def _stationary_dense(op: np.ndarray, tol: float, max_squarings: int = 64) -> np.ndarray:
    """Stationary vector by repeated squaring of the cycle operator.

    Products of non-negative matrices are accurate entry by entry, so the
    far tail of the distribution is resolved down to underflow.  A direct
    linear solve leaves an absolute error floor near ``1e-15`` there.
    """
    p = op
    for _ in range(max_squarings):
        p = p @ p
        p /= p.sum(axis=1)[:, None]
        if np.abs(p - p[0]).sum(axis=1).max() < tol:
            return p[0] / p[0].sum()
    raise NumericalError("cycle operator powers did not converge")


def _stationary_power(chain: SlotChain, inst: FctlInstance, cycle: int, tol: float,
                      start: np.ndarray | None, max_cycles: int = 10**6) -> np.ndarray:
    def one_cycle(v, green):
        for _ in range(cycle - green):
            v = chain.red_step(v)
        for _ in range(green):
            v = chain.green_step(v)
        return v

    g = inst.green
    v = np.zeros(chain.q_max + 1)
    if start is not None:
        v[: start.size] = start[: v.size]
    else:
        v[0] = 1.0
    for _ in range(max_cycles):
        if g.is_deterministic:
            nxt = one_cycle(v, g.floor)
        else:
            nxt = g.p * one_cycle(v, g.floor) + (1.0 - g.p) * one_cycle(v, g.floor + 1)
        if np.abs(nxt - v).sum() < tol:
            return nxt / nxt.sum()
        v = nxt
    raise NumericalError("power iteration did not converge")


def _initial_qmax(inst: FctlInstance) -> int:
    a = inst.arrival
    beta = max(inst.beta, 1e-3)
    # heavy-traffic scale of the overflow queue and its exponential tail
    scale = a.std * math.sqrt(inst.cycle) / (2.0 * beta)
    return int(max(64, 40.0 * scale + 2.0 * inst.cycle * a.mean))


def stationary_overflow(inst: FctlInstance, q_max: int | None = None, tail: float = 1e-12,
                        tol: float = 1e-13) -> np.ndarray:
    """Stationary pmf of the end-of-green queue length.

    ``q_max`` is grown (doubling) until the mass in the top 10% of the state
    space is below ``tail``; passing ``q_max`` fixes the truncation instead.
    """
    cycle = _require_integer_cycle(inst)
    if not inst.load < 1:
        raise InfeasibleError("oracle requires a stable lane (rho < 1)")
    if inst.green.ceil > cycle:
        raise InfeasibleError("green time exceeds the cycle")
    a_pmf = inst.arrival.pmf_vector()
    auto = q_max is None
    q = _initial_qmax(inst) if auto else int(q_max)
    previous = None
    while True:
        if q > Q_MAX_CAP:
            raise ResourceError(f"state space would exceed the hard cap of {Q_MAX_CAP} states")
        chain = SlotChain(a_pmf, q)
        if q <= _DENSE_LIMIT:
            pi = _stationary_dense(_cycle_operator(chain, inst, cycle), tol)
        else:
            pi = _stationary_power(chain, inst, cycle, tol, previous)
        if not auto:
            return pi
        top = pi[int(0.9 * q):].sum()
        if top < tail:
            return pi
        previous = pi
        q *= 2


@dataclass(frozen=True)
class SimulationResult:
    mean: float
    variance: float
    std_error: float
    prob_empty: float
    samples: int


def simulate(inst: FctlInstance, cycles: int, seed: int = 0, chains: int = 1000,
             burn_in: int | None = None) -> SimulationResult:
    """Monte Carlo estimate of the end-of-green queue statistics.

    ``chains`` independent copies are run side by side for
    ``cycles // chains`` recorded cycles each (after a burn-in); the standard
    error comes from the spread of the per-chain means.
    """
    cycle = _require_integer_cycle(inst)
    if cycles < chains:
        chains = max(1, cycles)
    per_chain = cycles // chains
    if burn_in is None:
        burn_in = max(100, per_chain // 10)
    rng = np.random.default_rng(seed)
    a = inst.arrival
    g = inst.green
    q = np.zeros(chains, dtype=np.int64)
    sums = np.zeros(chains)
    sq = np.zeros(chains)
    zeros = np.zeros(chains)
    for n in range(burn_in + per_chain):
        if g.is_deterministic:
            greens = np.full(chains, g.floor)
        else:
            greens = g.floor + (rng.random(chains) >= g.p)
        for slot in range(cycle):
            arrivals = a.sample(rng, chains)
            # slots are ordered red first; green occupies the last G slots
            is_green = slot >= cycle - greens
            busy = q > 0
            q = np.where(is_green, np.where(busy, q - 1 + arrivals, 0), q + arrivals)
        if n >= burn_in:
            sums += q
            sq += q.astype(float) ** 2
            zeros += q == 0
    total = chains * per_chain
    mean = float(sums.sum() / total)
    var = float(sq.sum() / total - mean**2)
    chain_means = sums / per_chain
    se = float(chain_means.std(ddof=1) / math.sqrt(chains)) if chains > 1 else math.nan
    return SimulationResult(mean, var, se, float(zeros.sum() / total), total)
