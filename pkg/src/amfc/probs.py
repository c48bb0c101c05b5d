"""Parameter sequences (p_j) driving the fallible counter.

A sequence is a finite prefix followed by a tail rule.  Indices are 1-based
to match the digit indexing used everywhere else in the package.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence, Union

import numpy as np


class ConfigError(ValueError):
    """Raised for malformed or out-of-range sequence configurations."""


@dataclass(frozen=True)
class Constant:
    value: float
    kind = "constant"

    def __post_init__(self):
        if not 0.0 < self.value <= 1.0:
            raise ConfigError(f"constant tail value must lie in (0, 1], got {self.value}")

    def at(self, j: int) -> float:
        return self.value

    def inf_from(self, j: int) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class Cycle:
    """Tail repeating ``values``; the value at absolute index j is values[(j-1) % L]."""

    values: tuple
    kind = "cycle"

    def __post_init__(self):
        if not self.values:
            raise ConfigError("cycle tail needs a non-empty prefix to repeat")

    def at(self, j: int) -> float:
        return self.values[(j - 1) % len(self.values)]

    def inf_from(self, j: int) -> float:
        return min(self.values)

    def to_dict(self) -> dict:
        return {"kind": "cycle", "values": list(self.values)}


@lru_cache(maxsize=1 << 16)
def _uniform01(seed: int, j: int) -> float:
    # counter-based: the draw for index j depends only on (seed, j)
    word = np.random.SeedSequence([seed, j]).generate_state(1, np.uint64)[0]
    return float(word >> np.uint64(11)) * 2.0**-53


@dataclass(frozen=True)
class IidUniform:
    lo: float
    hi: float
    seed: int
    kind = "iid_uniform"

    def __post_init__(self):
        if not 0.0 < self.lo <= self.hi <= 1.0:
            raise ConfigError(f"need 0 < lo <= hi <= 1, got lo={self.lo}, hi={self.hi}")

    def at(self, j: int) -> float:
        if self.lo == self.hi:
            return self.lo
        return self.lo + (self.hi - self.lo) * _uniform01(self.seed, j)

    def inf_from(self, j: int) -> float:
        return self.lo

    def to_dict(self) -> dict:
        return {"kind": "iid_uniform", "lo": self.lo, "hi": self.hi, "seed": self.seed}


@dataclass(frozen=True)
class ConvergentDeficit:
    """p_j = 1 - alpha * beta**j, a summable deficit (transient chains)."""

    alpha: float
    beta: float
    kind = "convergent_deficit"

    def __post_init__(self):
        if not (self.alpha > 0 and 0 < self.beta < 1 and self.alpha * self.beta < 1):
            raise ConfigError("convergent_deficit needs alpha > 0, 0 < beta < 1, alpha*beta < 1")

    def at(self, j: int) -> float:
        return 1.0 - self.alpha * self.beta**j

    def inf_from(self, j: int) -> float:
        return self.at(max(j, 1))

    def to_dict(self) -> dict:
        return {"kind": "convergent_deficit", "alpha": self.alpha, "beta": self.beta}


Tail = Union[Constant, Cycle, IidUniform, ConvergentDeficit]


@dataclass(frozen=True)
class ProbabilitySequence:
    """The sequence p_1, p_2, ... for base ``d``.

    ``offset`` records how many leading entries were dropped by :meth:`shift`;
    tail rules are always evaluated at the *original* index so shifted
    sequences agree with the parent on overlapping indices.
    """

    d: int
    prefix: tuple = ()
    tail: Tail = field(default_factory=lambda: Constant(1.0))
    offset: int = 0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ConfigError(f"base d must be an integer >= 2, got {self.d}")
        object.__setattr__(self, "prefix", tuple(float(x) for x in self.prefix))
        for x in self.prefix:
            if not 0.0 < x <= 1.0:
                raise ConfigError(f"prefix entries must lie in (0, 1], got {x}")

    # -- construction -------------------------------------------------------

    @classmethod
    def constant(cls, d: int, value: float) -> "ProbabilitySequence":
        return cls(d, (), Constant(value))

    @classmethod
    def from_prefix(cls, d: int, prefix: Sequence[float], tail_value: float) -> "ProbabilitySequence":
        """Eventually-constant sequence: ``prefix`` then ``tail_value`` forever."""
        return cls(d, tuple(prefix), Constant(tail_value))

    @classmethod
    def cyclic(cls, d: int, pattern: Sequence[float]) -> "ProbabilitySequence":
        pattern = tuple(float(x) for x in pattern)
        return cls(d, pattern, Cycle(pattern))

    @classmethod
    def from_dict(cls, data: dict) -> "ProbabilitySequence":
        try:
            d = data["d"]
            prefix = tuple(data.get("prefix", ()))
            tail_spec = dict(data.get("tail", {"kind": "constant", "value": 1.0}))
            kind = tail_spec.pop("kind")
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed sequence config: {exc}") from exc
        if kind == "constant":
            tail = Constant(float(tail_spec["value"]))
        elif kind == "cycle":
            tail = Cycle(tuple(float(x) for x in tail_spec.get("values", prefix)))
        elif kind == "iid_uniform":
            tail = IidUniform(float(tail_spec["lo"]), float(tail_spec["hi"]), int(tail_spec["seed"]))
        elif kind == "convergent_deficit":
            tail = ConvergentDeficit(float(tail_spec["alpha"]), float(tail_spec["beta"]))
        else:
            raise ConfigError(f"unknown tail kind {kind!r}")
        return cls(int(d), prefix, tail, int(data.get("offset", 0)))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ProbabilitySequence":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {"d": self.d, "prefix": list(self.prefix), "tail": self.tail.to_dict()}
        if self.offset:
            out["offset"] = self.offset
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    # -- lookup -------------------------------------------------------------

    def p(self, j: int) -> float:
        """The j-th parameter, j >= 1."""
        if j < 1:
            raise IndexError(f"sequence index starts at 1, got {j}")
        if j <= len(self.prefix):
            return self.prefix[j - 1]
        return self.tail.at(j + self.offset)

    def values(self, n: int, start: int = 1) -> np.ndarray:
        """Array of p_start, ..., p_{start+n-1}."""
        return np.array([self.p(j) for j in range(start, start + n)], dtype=float)

    def shift(self, k: int = 1) -> "ProbabilitySequence":
        """Drop the first ``k`` entries: the result's p_1 is this sequence's p_{k+1}."""
        if k < 0:
            raise ValueError("shift must be non-negative")
        if k == 0:
            return self
        if k <= len(self.prefix):
            return ProbabilitySequence(self.d, self.prefix[k:], self.tail, self.offset + k)
        return ProbabilitySequence(self.d, (), self.tail, self.offset + k)

    def inf_from(self, j: int) -> float:
        """Infimum of p_i over i >= j."""
        tail_inf = self.tail.inf_from(max(j, len(self.prefix) + 1) + self.offset)
        head = self.prefix[j - 1:] if j <= len(self.prefix) else ()
        return min((tail_inf, *head))

    def stable_index(self, threshold: float):
        """Smallest J with p_i >= threshold for every i >= J, or None if no such J.

        For iid tails the answer is almost-sure: a tail with lo < threshold
        dips below the threshold infinitely often.
        """
        L = len(self.prefix)
        tail = self.tail
        if isinstance(tail, ConvergentDeficit):
            # 1 - alpha*beta**j >= threshold  <=>  j >= log((1-threshold)/alpha)/log(beta)
            if threshold >= 1.0:
                return None
            j0 = math.ceil(math.log((1.0 - threshold) / tail.alpha) / math.log(tail.beta))
            first_tail = max(j0 - self.offset, L + 1)
        elif tail.inf_from(L + 1 + self.offset) >= threshold:
            first_tail = L + 1
        else:
            return None
        J = first_tail
        while J > 1 and self.p(J - 1) >= threshold:
            J -= 1
        return J

    @property
    def eventually_constant(self) -> bool:
        return isinstance(self.tail, Constant) or (
            isinstance(self.tail, IidUniform) and self.tail.lo == self.tail.hi
        )

    @property
    def irreducible(self) -> bool:
        """Whether p_j < 1 for infinitely many j (almost surely for iid tails)."""
        tail = self.tail
        if isinstance(tail, Constant):
            return tail.value < 1.0
        if isinstance(tail, Cycle):
            return min(tail.values) < 1.0
        if isinstance(tail, IidUniform):
            return tail.lo < 1.0
        return True
