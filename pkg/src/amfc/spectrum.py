"""Fibered maps f_j, g_j, h_r, escape tests for the set E, and eigenvectors of S.

All affine maps are evaluated in the form ``((w - 1) + p) / p`` so that the
common fixed point 1 is reproduced exactly for every p.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .adding_machine import to_digits
from .probs import ProbabilitySequence
from .transition import SparseTruncatedOperator

ESCAPE_TOL = 1e-12
MEMBERSHIP_LEVELS = 64
RENDER_LEVELS = 256
OVERFLOW_BOUND = 1e12


def ipow(w, d: int):
    """w**d by binary powering; identical operation order for scalars and arrays."""
    result = None
    base = w
    while d:
        if d & 1:
            result = base if result is None else result * base
        d >>= 1
        if d:
            base = base * base
    return result


def h(w, p: float):
    """Affine map sending the disk D(1-p, p) onto the unit disk."""
    return ((w - 1) + p) / p


def h_inv(w, p: float):
    return 1 + p * (w - 1)


class FiberedMaps:
    """The maps f_j, g_j and h_r attached to a parameter sequence."""

    def __init__(self, probs: ProbabilitySequence):
        self.probs = probs
        self.d = probs.d

    def h(self, r: int, z):
        return h(z, self.probs.p(r))

    def h_inv(self, r: int, w):
        return h_inv(w, self.probs.p(r))

    def f(self, j: int, z):
        return ipow(h(z, self.probs.p(j)), self.d)

    def g(self, j: int, w):
        return h(ipow(w, self.d), self.probs.p(j))

    def f_tilde(self, j: int, z):
        for i in range(1, j + 1):
            z = self.f(i, z)
        return z


@dataclass
class EscapeResult:
    """Outcome of following the fibered orbit of a point.

    ``level`` is the number of maps f_j applied when the orbit was seen to
    leave the disk D(1-p_{level+1}, p_{level+1}); then |f~_{level+1}(z)|,
    stored in ``modulus``, exceeds 1 + tol and the orbit diverges.
    """

    escaped: bool
    levels_run: int
    level: Optional[int] = None
    modulus: Optional[float] = None
    trace: List[float] = field(default_factory=list)

    @property
    def classification(self) -> str:
        return "Escaped" if self.escaped else "Inside"

    def to_dict(self) -> dict:
        out = {"classification": self.classification, "levels_run": self.levels_run}
        if self.escaped:
            out.update(level=self.level, modulus=self.modulus)
        if self.trace:
            out["trace"] = self.trace
        return out


def iterate_f(
    z: complex,
    probs: ProbabilitySequence,
    max_levels: int = MEMBERSHIP_LEVELS,
    tol: float = ESCAPE_TOL,
    trace: bool = False,
) -> EscapeResult:
    """Follow z, f_1(z), f_2(f_1(z)), ... for at most ``max_levels`` disk tests.

    At each level j the point f~_j(z) must lie in the closed disk
    D(1-p_{j+1}, p_{j+1}); leaving it pushes the next iterate outside the unit
    disk, after which the moduli grow at least like a d-th power per level.
    Points that never leave within the budget are reported Inside, which
    over-approximates E near its boundary.
    """
    if max_levels < 1:
        raise ValueError("max_levels must be >= 1")
    d = probs.d
    w = complex(z)
    moduli = [abs(w)] if trace else []
    for j in range(max_levels):
        q = h(w, probs.p(j + 1))
        w = ipow(q, d)
        if abs(q) > 1 + tol:
            if trace:
                moduli.append(abs(w))
            return EscapeResult(True, j + 1, j, abs(w), moduli)
        if trace:
            moduli.append(abs(w))
    return EscapeResult(False, max_levels, trace=moduli)


@dataclass
class QMembership:
    inside: bool
    q: List[complex]
    escape_index: Optional[int] = None  # first r with |q(r)| > 1 + tol

    @property
    def classification(self) -> str:
        return "Inside" if self.inside else "Escaped"


def membership_via_q(
    lam: complex,
    probs: ProbabilitySequence,
    max_levels: int = MEMBERSHIP_LEVELS,
    tol: float = ESCAPE_TOL,
) -> QMembership:
    """Decide membership from the eigenvector ratios q(r) = h_r(f~_{r-1}(lam)).

    lam is in E exactly when every |q(r)| <= 1.  The ratios obey
    q(r+1) = h_{r+1}(q(r)**d).
    """
    d = probs.d
    q = h(complex(lam), probs.p(1))
    qs = [q]
    for r in range(1, max_levels + 1):
        if abs(q) > 1 + tol:
            return QMembership(False, qs, r)
        if r == max_levels:
            break
        q = h(ipow(q, d), probs.p(r + 1))
        qs.append(q)
    return QMembership(True, qs)


def q_values(lam: complex, probs: ProbabilitySequence, count: int) -> np.ndarray:
    d = probs.d
    out = np.empty(count, dtype=complex)
    q = h(complex(lam), probs.p(1))
    for r in range(count):
        out[r] = q
        if r + 1 < count:
            q = h(ipow(q, d), probs.p(r + 2))
    return out


@dataclass
class EigenvectorSlice:
    lam: complex
    v: np.ndarray
    q: np.ndarray
    inside: bool
    overflow: bool

    def __len__(self):
        return len(self.v)


def eigenvector(
    lam: complex,
    probs: ProbabilitySequence,
    M: int,
    v0: complex = 1.0,
    max_levels: int = MEMBERSHIP_LEVELS,
) -> EigenvectorSlice:
    """v_0 .. v_{M-1} with v_n = v_0 * prod_r q(r)**a_r(n) over the d-adic digits of n."""
    if M < 2:
        raise ValueError("M must be >= 2")
    if v0 == 0:
        raise ValueError("v0 must be non-zero")
    d = probs.d
    ndigits = len(to_digits(M - 1, d))
    q = q_values(lam, probs, ndigits)
    inside = membership_via_q(lam, probs, max(max_levels, ndigits)).inside
    n = np.arange(M)
    v = np.full(M, complex(v0))
    # powers of q(r) overflowing to inf/nan are caught by the overflow flag
    with np.errstate(over="ignore", invalid="ignore"):
        for r in range(ndigits):
            powers = [1 + 0j]
            for _ in range(d - 1):
                powers.append(powers[-1] * q[r])
            digit = (n // d**r) % d
            v = v * np.asarray(powers)[digit]
        overflow = bool(not np.all(np.isfinite(v)) or np.max(np.abs(v)) > OVERFLOW_BOUND)
    return EigenvectorSlice(complex(lam), v, q, inside, overflow)


def eigen_residual(slice: EigenvectorSlice, op: SparseTruncatedOperator) -> float:
    """max |(S v)_n - lam v_n| over rows n with n + 1 < M (rows that never need v_M)."""
    M = op.size
    if len(slice.v) < M:
        raise ValueError("eigenvector slice shorter than the operator")
    v = slice.v[:M]
    resid = op.matvec(v) - slice.lam * v
    return float(np.max(np.abs(resid[: M - 1])))


def spectral_mapping_check(
    z: complex, probs: ProbabilitySequence, levels: int = MEMBERSHIP_LEVELS
) -> bool:
    """Compare the orbit of z under p with the orbit of f_1(z) under (p_2, p_3, ...).

    f~_1 carries the spectrum for p onto the spectrum for the shifted
    sequence, so both classifications must agree; escape levels differ by
    exactly one unless z already fails the first disk test.
    """
    here = iterate_f(z, probs, levels + 1)
    there = iterate_f(FiberedMaps(probs).f(1, complex(z)), probs.shift(1), levels)
    if here.escaped != there.escaped:
        return False
    if not here.escaped:
        return True
    if here.level == 0:
        return there.level == 0
    return here.level == there.level + 1


def escape_levels(
    points: np.ndarray,
    probs: ProbabilitySequence,
    max_levels: int = RENDER_LEVELS,
    coords: str = "E",
    tol: float = ESCAPE_TOL,
) -> np.ndarray:
    """Vectorised escape test on an array of points.

    Returns an int array: 0 where the point passed all ``max_levels`` tests,
    otherwise 1 + the escape level of :func:`iterate_f`.  In "K" coordinates
    the points are taken in the g-cascade frame, where membership means the
    orbit under g_2, g_3, ... stays in the closed unit disk.
    """
    d = probs.d
    p = probs.values(max_levels + 1)
    pts = np.asarray(points, dtype=complex)
    out = np.zeros(pts.shape, dtype=np.int32)
    alive = np.ones(pts.shape, dtype=bool)
    if coords == "E":
        q = h(pts, p[0])
    elif coords == "K":
        q = pts.copy()
    else:
        raise ValueError(f"coords must be 'E' or 'K', got {coords!r}")
    for r in range(1, max_levels + 1):
        esc = alive & (np.abs(q) > 1 + tol)
        out[esc] = r
        alive &= ~esc
        if not alive.any():
            break
        q = np.where(alive, q, 0)
        if r < max_levels:
            q = h(ipow(q, d), p[r])
    return out
