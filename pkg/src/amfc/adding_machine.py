"""d-adic digits, the fallible-counter step and Monte Carlo runs of the chain."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .probs import ProbabilitySequence


@dataclass(frozen=True)
class DigitExpansion:
    """Little-endian digits a_1, a_2, ... of a non-negative integer (trailing zeros trimmed)."""

    d: int
    digits: tuple

    @property
    def value(self) -> int:
        n = 0
        for a in reversed(self.digits):
            n = n * self.d + a
        return n

    def digit(self, j: int) -> int:
        """a_j(n), 1-based; zero past the last stored digit."""
        return self.digits[j - 1] if j <= len(self.digits) else 0

    def __len__(self):
        return len(self.digits)


def to_digits(n: int, d: int) -> DigitExpansion:
    if d < 2:
        raise ValueError(f"base must be >= 2, got {d}")
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    digits = []
    while n:
        n, a = divmod(n, d)
        digits.append(a)
    return DigitExpansion(d, tuple(digits))


def counter_zeta(n: int, d: int) -> int:
    """Index of the first digit of ``n`` that is not d-1 (the exact adder's step count)."""
    j = 1
    while n % d == d - 1:
        n //= d
        j += 1
    return j


def carry_drop(r: int, d: int) -> int:
    """sum_{j<=r} (d-1) d^{j-1} = d^r - 1: the decrease when the carry dies after r steps."""
    return d**r - 1


@dataclass
class StepDistribution:
    n: int
    outcomes: Dict[int, float]

    def total(self) -> float:
        return sum(self.outcomes.values())

    def __getitem__(self, m: int) -> float:
        return self.outcomes.get(m, 0.0)


def step_distribution(n: int, probs: ProbabilitySequence) -> StepDistribution:
    """Law of one application of the fallible counter to ``n``.

    With zeta = counter_zeta(n): stay at n w.p. 1-p_1; stop after r < zeta
    carries w.p. p_1...p_r (1-p_{r+1}), landing on n - (d^r - 1); finish the
    addition w.p. p_1...p_zeta.
    """
    d = probs.d
    zeta = counter_zeta(n, d)
    out = {n: 1 - probs.p(1)}
    prod = probs.p(1)
    for r in range(1, zeta):
        out[n - carry_drop(r, d)] = prod * (1 - probs.p(r + 1))
        prod = prod * probs.p(r + 1)
    out[n + 1] = prod
    return StepDistribution(n, out)


def amfc_step(n: int, probs: ProbabilitySequence, rng: np.random.Generator) -> int:
    """Run the adder on ``n`` with independent Bernoulli(p_j) survival at each digit step.

    ``rng`` is advanced in place.
    """
    d = probs.d
    zeta = counter_zeta(n, d)
    for j in range(1, zeta + 1):
        if rng.random() >= probs.p(j):
            # the counter is lost at step j; steps j, j+1, ... are not performed
            return n - carry_drop(j - 1, d)
    return n + 1


def amfc_steps(n: int, probs: ProbabilitySequence, size: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorised ``amfc_step`` from a fixed start, ``size`` independent draws."""
    d = probs.d
    zeta = counter_zeta(n, d)
    p = probs.values(zeta)
    survive = rng.random((size, zeta)) < p
    alive = np.cumprod(survive, axis=1)
    completed = alive.sum(axis=1)  # number of digit steps performed
    drops = np.array([carry_drop(r, d) for r in range(zeta)] + [0])
    out = n - drops[completed]
    out[completed == zeta] = n + 1
    return out


@dataclass
class SimulationSummary:
    trajectory: List[int]
    visits: Counter
    returns_to_start: int
    first_hits: Dict[int, int] = field(default_factory=dict)
    zero_visits_before_hit: Dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "steps": len(self.trajectory) - 1,
            "final_state": self.trajectory[-1],
            "returns_to_start": self.returns_to_start,
            "first_hits": {str(k): v for k, v in self.first_hits.items()},
            "zero_visits_before_hit": {str(k): v for k, v in self.zero_visits_before_hit.items()},
            "visits": {str(k): v for k, v in sorted(self.visits.items())},
        }


def simulate(
    start: int,
    steps: int,
    probs: ProbabilitySequence,
    seed: Optional[int] = None,
    hit_levels: int = 8,
) -> SimulationSummary:
    """Run the chain for ``steps`` transitions.

    ``first_hits[n]`` is the first t >= 1 with X(t) = d^n and
    ``zero_visits_before_hit[n]`` counts the times t < that hitting time with
    X(t) = 0; both are recorded for n = 0..hit_levels when the target is hit.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    d = probs.d
    targets = {d**k: k for k in range(hit_levels + 1)}
    x = start
    traj = [x]
    zero_count = 1 if x == 0 else 0
    first_hits: Dict[int, int] = {}
    zero_before: Dict[int, int] = {}
    for t in range(1, steps + 1):
        x = amfc_step(x, probs, rng)
        traj.append(x)
        k = targets.get(x)
        if k is not None and k not in first_hits:
            first_hits[k] = t
            zero_before[k] = zero_count
        if x == 0:
            zero_count += 1
    visits = Counter(traj)
    returns = sum(1 for y in traj[1:] if y == start)
    return SimulationSummary(traj, visits, returns, first_hits, zero_before)


def sample_hitting(
    n: int, probs: ProbabilitySequence, runs: int, seed: Optional[int] = None
) -> tuple:
    """Independent runs from 0 until the first hit of d^n.

    Returns arrays ``(N, tau)``: visits to 0 before the hit, and the hitting time.
    """
    rng = np.random.default_rng(seed)
    target = probs.d**n
    visits = np.empty(runs, dtype=np.int64)
    times = np.empty(runs, dtype=np.int64)
    for i in range(runs):
        x, t, zeros = 0, 0, 1
        while True:
            x = amfc_step(x, probs, rng)
            t += 1
            if x == target:
                break
            if x == 0:
                zeros += 1
        visits[i] = zeros
        times[i] = t
    return visits, times
