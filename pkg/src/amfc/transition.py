"""Transition probabilities s(n, m), truncated sparse operators and recurrence."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .adding_machine import carry_drop, counter_zeta, to_digits
from .probs import ConvergentDeficit, Cycle, IidUniform, ProbabilitySequence

MAX_STATES = 5_000_000


class CapacityError(MemoryError):
    """Truncation size beyond what the operator builder will allocate."""


def _prefix_product(probs, r: int):
    prod = probs.p(1)
    for j in range(2, r + 1):
        prod = prod * probs.p(j)
    return prod


def transition_prob(n: int, m: int, probs):
    """One-step probability s(n, m).

    ``probs`` only needs ``d`` and ``p(j)``, so symbolic parameters work too.
    """
    if n < 0 or m < 0:
        raise ValueError("states are non-negative integers")
    d = probs.d
    if m == n:
        return 1 - probs.p(1)
    zeta = counter_zeta(n, d)
    if m == n + 1:
        return _prefix_product(probs, zeta)
    drop = n - m
    if drop > 0:
        for r in range(1, zeta):
            if drop == carry_drop(r, d):
                return _prefix_product(probs, r) * (1 - probs.p(r + 1))
    return 0


def row_entries(n: int, probs) -> List[Tuple[int, object]]:
    """Non-zero (m, s(n, m)) pairs of row n, in increasing m."""
    d = probs.d
    zeta = counter_zeta(n, d)
    row = []
    prod = probs.p(1)
    for r in range(1, zeta):
        row.append((n - carry_drop(r, d), prod * (1 - probs.p(r + 1))))
        prod = prod * probs.p(r + 1)
    row.reverse()
    row.append((n, 1 - probs.p(1)))
    row.append((n + 1, prod))
    return [(m, v) for m, v in row if v != 0]


@dataclass(frozen=True)
class SparseTruncatedOperator:
    """Upper-left M x M block of S as (row, col, value) triples.

    Row M-1 is a boundary row: its entry s(M-1, M) falls outside the block.
    """

    size: int
    d: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @property
    def boundary_rows(self) -> np.ndarray:
        return np.array([self.size - 1])

    def interior(self, n: int) -> bool:
        return n + 1 < self.size

    def triples(self):
        return zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist())

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.size, self.size))

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def lookup(self) -> dict:
        return {(r, c): v for r, c, v in self.triples()}

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.to_csr() @ np.asarray(v)

    def with_entry(self, n: int, m: int, value: float) -> "SparseTruncatedOperator":
        """Copy with s(n, m) replaced (added if absent); used for negative controls."""
        mask = (self.rows == n) & (self.cols == m)
        if mask.any():
            vals = self.vals.copy()
            vals[mask] = value
            return SparseTruncatedOperator(self.size, self.d, self.rows, self.cols, vals)
        return SparseTruncatedOperator(
            self.size,
            self.d,
            np.append(self.rows, n),
            np.append(self.cols, m),
            np.append(self.vals, value),
        )


def build_truncated(probs: ProbabilitySequence, M: int) -> SparseTruncatedOperator:
    if M < 2:
        raise ValueError("truncation size must be >= 2")
    if M > MAX_STATES:
        raise CapacityError(f"M={M} exceeds the {MAX_STATES}-state budget")
    rows, cols, vals = [], [], []
    for n in range(M):
        for m, v in row_entries(n, probs):
            if m < M:
                rows.append(n)
                cols.append(m)
                vals.append(float(v))
    return SparseTruncatedOperator(
        M, probs.d, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals)
    )


def check_self_similarity(
    probs: ProbabilitySequence,
    j: int,
    M: int,
    operator: Optional[SparseTruncatedOperator] = None,
) -> List[tuple]:
    """Check the block self-similarity of S on rows d^{j-1} <= n <= d^j - 2.

    For those rows s(n, m) must equal s(n - a_j(n) d^{j-1}, m - a_j(n) d^{j-1})
    when d^{j-1} <= m <= d^j - 1 and vanish otherwise.  Entries are read from
    ``operator`` (built from ``probs`` when omitted).  Returns a list of
    ``(n, m, found, expected)`` violations; empty when the identity holds.
    """
    d = probs.d
    if d**j > M:
        raise ValueError(f"need d^j <= M, got d^j={d**j}, M={M}")
    op = operator if operator is not None else build_truncated(probs, M)
    s = op.lookup()
    lo, hi = d ** (j - 1), d**j
    bad = []
    for n in range(lo, hi - 1):
        shift = to_digits(n, d).digit(j) * lo
        for m in range(M):
            found = s.get((n, m), 0.0)
            if lo <= m <= hi - 1:
                expected = s.get((n - shift, m - shift), 0.0)
            else:
                expected = 0.0
            if found != expected:
                bad.append((n, m, found, expected))
    return bad


@dataclass
class RecurrenceVerdict:
    verdict: str  # "NullRecurrent" | "Transient" | "NotIrreducible"
    partial_products: List[float]
    reason: str
    product_limit: Optional[float] = None

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict, "reason": self.reason,
               "partial_products": self.partial_products}
        if self.product_limit is not None:
            out["product_limit"] = self.product_limit
        return out


def _deficit_product(probs: ProbabilitySequence) -> float:
    # stop once the remaining log-mass, about alpha*beta^j/(1-beta), is below 1e-17
    tail = probs.tail
    total, j = 0.0, 1
    while j <= len(probs.prefix) or tail.alpha * tail.beta ** (j + probs.offset) / (1 - tail.beta) > 1e-17:
        total += math.log(probs.p(j))
        j += 1
    return math.exp(total)


def classify_recurrence(probs: ProbabilitySequence, depth: int = 16) -> RecurrenceVerdict:
    """Null recurrent iff prod p_j = 0, decided from the tail rule."""
    partial = []
    prod = 1.0
    for j in range(1, depth + 1):
        prod *= probs.p(j)
        partial.append(prod)
    if not probs.irreducible:
        return RecurrenceVerdict("NotIrreducible", partial, "p_j = 1 for all but finitely many j")
    tail = probs.tail
    if isinstance(tail, ConvergentDeficit):
        return RecurrenceVerdict(
            "Transient", partial,
            "sum of (1 - p_j) converges, so the infinite product is positive",
            _deficit_product(probs),
        )
    if isinstance(tail, Cycle):
        why = "a repeated entry below 1 drives the product to 0"
    elif isinstance(tail, IidUniform):
        why = "iid tail with lo < 1: sum of (1 - p_j) diverges almost surely"
    else:
        why = "constant tail below 1: the product of constants vanishes"
    return RecurrenceVerdict("NullRecurrent", partial, why, 0.0)


def log_prefix_product(probs: ProbabilitySequence, k: int) -> float:
    return sum(math.log(probs.p(j)) for j in range(1, k + 1))


def expected_visits_and_hitting(n: int, probs: ProbabilitySequence) -> Tuple[float, float]:
    """(E[N_n], E[tau_n]) for the chain started at 0.

    N_n counts visits to 0 before the first hit tau_n of d^n;
    E[N_n] = 1 / (p_1 ... p_{n+1}) and E[tau_n] = d^n E[N_n].
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n + 1 > 64:
        visits = math.exp(-log_prefix_product(probs, n + 1))
    else:
        prod = 1.0
        for j in range(1, n + 2):
            prod *= probs.p(j)
        visits = 1.0 / prod
    return visits, probs.d**n * visits
