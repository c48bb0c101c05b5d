"""Connectedness of E via critical orbits, the monic conjugacy, Green function
and the quasicircle criterion."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from .probs import Constant, Cycle, IidUniform, ProbabilitySequence
from .spectrum import ESCAPE_TOL, h, ipow

CRITICAL_BUDGET = 256
TRAP_TOL = 1e-12
BIG_RADIUS = 1e8
CARDIOID_RHO = 2.0 * (math.sqrt(2.0) - 1.0)


class UnsupportedParameterError(ValueError):
    pass


# -- thresholds ---------------------------------------------------------------


def theta_d(d: int):
    """Root theta in (0, 1) of d x^{d-1} + (d-1) x^d = 1 and vartheta = d theta^{d-1}.

    For odd d, a constant tail p >= vartheta gives a connected set E.
    """
    if d < 3 or d % 2 == 0:
        raise ValueError(f"theta_d is defined for odd d >= 3, got {d}")

    def poly(x):
        return d * x ** (d - 1) + (d - 1) * x**d - 1

    theta = brentq(poly, 1e-9, 1 - 1e-9, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return theta, d * theta ** (d - 1)


def connectedness_threshold(d: int) -> float:
    return 0.5 if d % 2 == 0 else theta_d(d)[1]


def trap_floor(d: int) -> float:
    """Lower end of the real interval [floor, 1] that every g_j with p_j above
    the threshold maps into itself."""
    return -1.0 if d % 2 == 0 else -theta_d(d)[0]


def rho_d(d: int) -> float:
    """Root of (1/rho - 1)(1/rho)^{1/(d-1)} = (1/2)^{d/(d-1)}; diagnostic only."""
    target = 0.5 ** (d / (d - 1))
    return brentq(lambda r: (1 / r - 1) * (1 / r) ** (1 / (d - 1)) - target, 1e-6, 1.0)


# -- critical orbits ---------------------------------------------------------


@dataclass
class CriticalOrbitReport:
    """Orbit of the critical point 0 pushed through g_{k+1}, g_{k+2}, ...

    ``level`` k = 1 is the orbit of 1 - p_1 in E-coordinates.  ``certified``
    marks a Bounded verdict backed by a trapping interval rather than by the
    budget running out.
    """

    level: int
    status: str
    escaped_at: Optional[int] = None
    certified: bool = False
    trace: List[float] = field(default_factory=list)

    @property
    def escaped(self) -> bool:
        return self.status == "Escaped"

    @property
    def decided(self) -> bool:
        return self.escaped or self.certified

    def to_dict(self) -> dict:
        out = {"level": self.level, "status": self.status, "certified": self.certified}
        if self.escaped:
            out["escaped_at"] = self.escaped_at
        return out


def critical_orbit(
    probs: ProbabilitySequence,
    k: int,
    budget: int = CRITICAL_BUDGET,
    tol: float = ESCAPE_TOL,
    stable_from: Optional[int] = -1,
) -> CriticalOrbitReport:
    """Iterate w = 0 through g_{k+1}, g_{k+2}, ... for up to ``budget`` maps.

    Escape is declared once |w| > 1 + tol.  Once every remaining parameter is
    at or above the connectedness threshold and w sits in the trapping
    interval, the orbit is bounded for good and the report is certified.
    """
    if k < 1:
        raise ValueError("critical level starts at 1")
    d = probs.d
    if stable_from == -1:
        stable_from = probs.stable_index(connectedness_threshold(d))
    floor = trap_floor(d) - TRAP_TOL
    w = 0.0
    trace = []
    for j in range(k + 1, k + 1 + budget):
        w = h(ipow(w, d), probs.p(j))
        trace.append(w)
        if abs(w) > 1 + tol:
            return CriticalOrbitReport(k, "Escaped", j, True, trace)
        if stable_from is not None and j + 1 >= stable_from and floor <= w <= 1.0:
            return CriticalOrbitReport(k, "Bounded", None, True, trace)
    return CriticalOrbitReport(k, "Bounded", None, False, trace)


def pullback_count(reports: List[CriticalOrbitReport], d: int) -> int:
    """Component count of E from the critical levels, innermost level last.

    Pulling a full compact set with N components back through g_{k+1}:
    if the critical value lies outside it every component has d preimages
    (N -> dN); otherwise the component holding it lifts to a single one
    (N -> 1 + d(N - 1)).  Undecided levels are counted as bounded, which
    gives a lower bound.
    """
    n = 1
    for rep in sorted(reports, key=lambda r: r.level, reverse=True):
        n = d * n if rep.escaped else 1 + d * (n - 1)
    return n


@dataclass
class ConnectednessVerdict:
    kind: str  # Connected | ComponentsExactly | ComponentsAtLeast | InfinitelyMany | Cantor
    count: Optional[int]
    evidence: List[CriticalOrbitReport]
    rule: str
    caveat: Optional[str] = None

    @property
    def escaped_levels(self) -> List[int]:
        return [r.level for r in self.evidence if r.escaped]

    def label(self) -> str:
        if self.kind in ("ComponentsExactly", "ComponentsAtLeast"):
            return f"{self.kind}({self.count})"
        return self.kind

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "rule": self.rule, "escaped_levels": self.escaped_levels,
               "evidence": [r.to_dict() for r in self.evidence]}
        if self.count is not None:
            out["count"] = self.count
        if self.caveat:
            out["caveat"] = self.caveat
        return out


def classify_connectedness(
    probs: ProbabilitySequence, budget: int = CRITICAL_BUDGET
) -> ConnectednessVerdict:
    d = probs.d
    threshold = connectedness_threshold(d)
    stable = probs.stable_index(threshold)
    parity = "even" if d % 2 == 0 else "odd"

    if stable is not None:
        if stable <= 2:
            rule = ("d even, no p_i < 1/2 for i >= 2" if parity == "even"
                    else "d odd, p_i >= vartheta_d for all i >= 2")
            return ConnectednessVerdict("Connected", 1, [], rule)
        reports = [critical_orbit(probs, k, budget, stable_from=stable) for k in range(1, stable - 1)]
        count = pullback_count(reports, d)
        undecided = [r.level for r in reports if not r.decided]
        rule = ("critical orbits through the last index below 1/2, pulled back level by level"
                if parity == "even"
                else "orbit of 1 - p_1 decides connectedness; levels pulled back one by one")
        if undecided:
            return ConnectednessVerdict(
                "ComponentsAtLeast", count, reports, rule,
                f"critical levels {undecided} neither escaped nor trapped within {budget} maps",
            )
        if count == 1:
            return ConnectednessVerdict("Connected", 1, reports, rule)
        return ConnectednessVerdict("ComponentsExactly", count, reports, rule)

    tail = probs.tail
    L = len(probs.prefix)
    if probs.eventually_constant:
        reports = [critical_orbit(probs, k, budget, stable_from=None) for k in range(1, L + 2)]
        return ConnectednessVerdict(
            "Cantor", None, reports,
            "eventually constant tail below the threshold: the tail fiber is a Cantor set "
            "and its polynomial preimages stay totally disconnected",
        )
    if isinstance(tail, Cycle):
        period = len(tail.values)
        reports = [critical_orbit(probs, k, budget, stable_from=None) for k in range(1, L + period + 1)]
        periodic = reports[L:]
        if all(r.escaped for r in periodic):
            return ConnectednessVerdict(
                "Cantor", None, reports,
                "periodic parameters with every critical orbit escaping (hyperbolic period map)",
            )
        if any(r.escaped for r in periodic):
            return ConnectednessVerdict(
                "InfinitelyMany", None, reports,
                "a critical level inside the period escapes, so infinitely many levels escape",
            )
        return ConnectednessVerdict(
            "ComponentsAtLeast", pullback_count(reports, d), reports,
            "periodic parameters below the threshold with no escaping critical orbit in budget",
            f"periodic critical orbits stayed bounded for {budget} maps but are not trapped",
        )
    if isinstance(tail, IidUniform):
        reports = [critical_orbit(probs, k, budget, stable_from=None) for k in range(1, L + 2)]
        rule = ("d even, p_i < 1/2 infinitely often (almost surely)" if parity == "even"
                else "d odd, iid tail with P(p_i < vartheta_d) > 0")
        return ConnectednessVerdict("InfinitelyMany", None, reports, rule,
                                    "almost-sure statement about the iid tail")
    raise AssertionError(f"unhandled tail {tail!r}")


# -- monic conjugacy -----------------------------------------------------------


@dataclass
class FiberedConjugacy:
    """lambda(p) and c(tau^k p) for the conjugacy to z -> z^d + c(p)."""

    lambda_p: float
    c_values: List[float]
    truncation_error: float
    epsilon: float
    terms: int

    def to_dict(self) -> dict:
        return {"lambda": self.lambda_p, "c": self.c_values,
                "truncation_error": self.truncation_error, "epsilon": self.epsilon}


def _epsilon(probs: ProbabilitySequence) -> float:
    eps = probs.inf_from(1)
    if not eps > 0:
        raise UnsupportedParameterError("parameters accumulate at 0; the conjugacy is undefined")
    return eps


def _terms_for(d: int, eps: float, tol: float) -> int:
    # remaining log-mass after N terms: d^{-N} log(1/eps) / (d-1)
    mass = math.log(1 / eps) / (d - 1)
    if mass <= tol:
        return 1
    return max(1, math.ceil(math.log(mass / tol) / math.log(d)))


def log_lambda(probs: ProbabilitySequence, tol: float = 1e-15) -> float:
    """log lambda(p) = sum_{i>=1} d^{-i} log(1/p_i), truncated below ``tol``."""
    d = probs.d
    n = _terms_for(d, _epsilon(probs), tol)
    return sum(-math.log(probs.p(i)) / d**i for i in range(1, n + 1))


def conjugacy(probs: ProbabilitySequence, shifts: int = 8, tol: float = 1e-15) -> FiberedConjugacy:
    d = probs.d
    eps = _epsilon(probs)
    n = _terms_for(d, eps, tol)
    lam = math.exp(log_lambda(probs, tol))
    cs = []
    for k in range(shifts + 1):
        p = probs.p(k + 1)
        cs.append(-((1 - p) / p) * math.exp(log_lambda(probs.shift(k + 1), tol)))
    err = math.log(1 / eps) / (d - 1) / d**n
    return FiberedConjugacy(lam, cs, err, eps, n)


def monic_coefficients(probs: ProbabilitySequence, count: int, tol: float = 1e-16):
    """(lambda(tau^k p), c(tau^k p)) for k = 0..count-1, by the backward
    recursion log lambda(p) = (log(1/p_1) + log lambda(tau p)) / d."""
    d = probs.d
    eps = _epsilon(probs)
    extra = _terms_for(d, eps, tol)
    total = count + extra + 1
    p = probs.values(total)
    # start mid-range at the far end; the error shrinks by d per step back
    log_lam = math.log(1 / eps) / (2 * (d - 1))
    logs = np.empty(total + 1)
    logs[total] = log_lam
    for k in range(total - 1, -1, -1):
        logs[k] = (-math.log(p[k]) + logs[k + 1]) / d
    lam = np.exp(logs[: count + 1])
    c = -((1 - p[:count]) / p[:count]) * lam[1: count + 1]
    return lam[:count], c


# -- quasicircle criterion -----------------------------------------------------------


@dataclass
class QuasicircleReport:
    verdict: str  # GuaranteedQuasicircle | CriterionFails
    sup_c: float
    tail_bound: float
    threshold: float
    rule: str
    rho_d: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def quasicircle_check(probs: ProbabilitySequence, shifts: int = 64) -> QuasicircleReport:
    """Check max |c| < (1/2)^{d/(d-1)} over the fibers tau^k p, k >= 1.

    E is an affine image of the filled set of the fiber tau p, so p_1 plays
    no role.  Beyond ``shifts`` the bound (1/rho - 1)(1/rho)^{1/(d-1)} with
    rho = inf of the remaining p_i is used.
    """
    d = probs.d
    threshold = 0.5 ** (d / (d - 1))
    _, c = monic_coefficients(probs, shifts + 1)
    sup_c = float(np.max(np.abs(c[1:])))
    rho = probs.inf_from(shifts + 2)
    tail_bound = (1 / rho - 1) * (1 / rho) ** (1 / (d - 1))
    inf2 = probs.inf_from(2)
    # at d = 2 the cardioid bound is attained at rho itself, so require a strict margin
    if inf2 > CARDIOID_RHO or (d > 2 and inf2 >= CARDIOID_RHO):
        return QuasicircleReport("GuaranteedQuasicircle", sup_c, tail_bound, threshold,
                                 "all p_i >= 2(sqrt(2)-1) for i >= 2", rho_d(d))
    bound = max(sup_c, tail_bound)
    verdict = "GuaranteedQuasicircle" if bound < threshold else "CriterionFails"
    return QuasicircleReport(verdict, sup_c, tail_bound, threshold,
                             "sup |c| over computed fibers plus tail bound", rho_d(d))


# -- Green function --------------------------------------------------------------


def green_function(
    z: complex, probs: ProbabilitySequence, n_max: int = 512, big_radius: float = BIG_RADIUS
) -> float:
    """G_p(z) = lim d^{-n} log+|P_p^n(z)| for the monic maps P_p(z) = z^d + c(p)."""
    d = probs.d
    _, c = monic_coefficients(probs, n_max)
    w = complex(z)
    for n in range(n_max):
        if abs(w) > big_radius:
            return math.log(abs(w)) / d**n
        w = ipow(w, d) + c[n]
    if abs(w) > big_radius:
        return math.log(abs(w)) / d**n_max
    return 0.0


def green_grid(
    points: np.ndarray, probs: ProbabilitySequence, n_max: int = 512, big_radius: float = BIG_RADIUS
) -> np.ndarray:
    d = probs.d
    _, c = monic_coefficients(probs, n_max)
    w = np.asarray(points, dtype=complex).copy()
    G = np.zeros(w.shape)
    alive = np.ones(w.shape, dtype=bool)
    for n in range(n_max + 1):
        big = alive & (np.abs(w) > big_radius)
        G[big] = np.log(np.abs(w[big])) / float(d) ** n
        alive &= ~big
        if n == n_max or not alive.any():
            break
        w = np.where(alive, w, 0)
        w = ipow(w, d) + c[n]
    return G


def to_monic(z, probs: ProbabilitySequence):
    """Map E-coordinates to the monic frame of the fiber tau p: z -> lambda(tau p) h_1(z)."""
    lam = math.exp(log_lambda(probs.shift(1)))
    return lam * h(z, probs.p(1))


def green_E(z, probs: ProbabilitySequence, n_max: int = 512) -> float:
    """Green function pulled back to E-coordinates; vanishes exactly on E."""
    return green_function(to_monic(complex(z), probs), probs.shift(1), n_max)


def green_E_grid(points: np.ndarray, probs: ProbabilitySequence, n_max: int = 512) -> np.ndarray:
    return green_grid(to_monic(np.asarray(points, dtype=complex), probs), probs.shift(1), n_max)
