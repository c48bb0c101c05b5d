import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from amfc.probs import ConvergentDeficit, ProbabilitySequence
from amfc.transition import (CapacityError, MAX_STATES, build_truncated, check_self_similarity,
                             classify_recurrence, expected_visits_and_hitting, row_entries,
                             transition_prob)

p1, p2, p3, p4 = sp.symbols("p1:5")

# the displayed upper-left blocks, row by row as {column: entry}
S2_BLOCK = [
    {0: 1 - p1, 1: p1},
    {0: p1 * (1 - p2), 1: 1 - p1, 2: p1 * p2},
    {2: 1 - p1, 3: p1},
    {0: p1 * p2 * (1 - p3), 2: p1 * (1 - p2), 3: 1 - p1, 4: p1 * p2 * p3},
    {4: 1 - p1, 5: p1},
    {4: p1 * (1 - p2), 5: 1 - p1, 6: p1 * p2},
    {6: 1 - p1, 7: p1},
    {0: p1 * p2 * p3 * (1 - p4), 4: p1 * p2 * (1 - p3), 6: p1 * (1 - p2), 7: 1 - p1,
     8: p1 * p2 * p3 * p4},
]
S3_BLOCK = [
    {0: 1 - p1, 1: p1},
    {1: 1 - p1, 2: p1},
    {0: p1 * (1 - p2), 2: 1 - p1, 3: p1 * p2},
    {3: 1 - p1, 4: p1},
    {4: 1 - p1, 5: p1},
    {3: p1 * (1 - p2), 5: 1 - p1, 6: p1 * p2},
    {6: 1 - p1, 7: p1},
    {7: 1 - p1, 8: p1},
    {0: p1 * p2 * (1 - p3), 6: p1 * (1 - p2), 8: 1 - p1, 9: p1 * p2 * p3},
]


class SymbolicProbs:
    def __init__(self, d):
        self.d = d

    def p(self, j):
        return sp.Symbol(f"p{j}")


@pytest.mark.parametrize("d,block", [(2, S2_BLOCK), (3, S3_BLOCK)])
def test_symbolic_blocks(d, block):
    probs = SymbolicProbs(d)
    for n, row in enumerate(block):
        for m in range(len(block) + 1):
            got = transition_prob(n, m, probs)
            assert sp.simplify(got - row.get(m, 0)) == 0, (n, m)


@pytest.mark.parametrize("d,block", [(2, S2_BLOCK), (3, S3_BLOCK)])
def test_numeric_blocks_are_bit_exact(d, block):
    vals = (0.9, 0.7, 0.55, 0.35)
    probs = ProbabilitySequence.from_prefix(d, [0.9, 0.7, 0.55, 0.35], 0.5)
    dense = build_truncated(probs, 16).to_dense()
    rows = len(block)
    expected = np.zeros((rows, rows + 1))
    for n, row in enumerate(block):
        for m, expr in row.items():
            # evaluated in plain floats, left to right as displayed
            expected[n, m] = sp.lambdify((p1, p2, p3, p4), expr)(*vals)
    assert np.max(np.abs(dense[:rows, : rows + 1] - expected)) == 0.0


@given(st.integers(0, 500), st.sampled_from([2, 3, 5]))
def test_row_entries_match_pointwise(n, d):
    probs = ProbabilitySequence.from_prefix(d, [0.9, 0.6, 0.7, 0.8], 0.65)
    entries = dict(row_entries(n, probs))
    for m in range(max(0, n - d**5), n + 3):
        assert entries.get(m, 0) == transition_prob(n, m, probs)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_rows_and_columns_sum(d):
    probs = ProbabilitySequence.from_prefix(d, [0.9, 0.6, 0.7], 0.65)
    M = d**5
    S = build_truncated(probs, M).to_dense()
    assert np.max(np.abs(S[: M - 1].sum(axis=1) - 1)) < 1e-14
    assert abs(S[M - 1].sum() + transition_prob(M - 1, M, probs) - 1) < 1e-14
    # column m >= 1 gets mass only from rows < d^k when m < d^{k-1}
    cols = S[:, 1 : d**4].sum(axis=0)
    assert np.max(np.abs(cols - 1)) < 1e-14


def test_first_column_partial_sums_increase_toward_limit():
    probs = ProbabilitySequence(2, (), ConvergentDeficit(1.0, 0.5))
    limit = 1 - classify_recurrence(probs).product_limit
    sums = [build_truncated(probs, 2**k).to_dense()[: 2**k - 1, 0].sum() for k in (3, 4, 5)]
    assert sums[0] < sums[1] < sums[2] < limit + 1e-15


@pytest.mark.parametrize("d", [2, 3])
def test_self_similarity(d):
    probs = ProbabilitySequence.from_prefix(d, [0.9, 0.6, 0.7, 0.8], 0.65)
    M = d**5
    op = build_truncated(probs, M)
    for j in range(2, 6):
        assert check_self_similarity(probs, j, M, op) == []


def test_self_similarity_detects_corruption():
    probs = ProbabilitySequence.constant(2, 0.7)
    op = build_truncated(probs, 32).with_entry(5, 4, 0.123)
    assert check_self_similarity(probs, 3, 32, op)


def test_capacity_guard():
    with pytest.raises(CapacityError):
        build_truncated(ProbabilitySequence.constant(2, 0.5), MAX_STATES + 1)


def test_recurrence_verdicts():
    assert classify_recurrence(ProbabilitySequence.constant(2, 0.4)).verdict == "NullRecurrent"
    assert classify_recurrence(ProbabilitySequence.cyclic(2, [1.0, 0.9])).verdict == "NullRecurrent"
    assert classify_recurrence(ProbabilitySequence.constant(2, 1.0)).verdict == "NotIrreducible"
    v = classify_recurrence(ProbabilitySequence(2, (), ConvergentDeficit(1.0, 0.5)))
    assert v.verdict == "Transient"
    # prod (1 - 2^-j) = 0.288788095...
    assert abs(v.product_limit - 0.28878809508660242) < 1e-15


def test_transience_witness():
    # v_m = P(0 is never visited | start m): constant on [d^l, d^{l+1}), v_{d^l} = v_1 / (p_2...p_{l+1})
    d = 2
    probs = ProbabilitySequence(d, (), ConvergentDeficit(1.0, 0.5))
    tail_prod = classify_recurrence(probs.shift(1)).product_limit
    M = d**10
    v = np.zeros(M)
    for l in range(10):
        v[d**l : d ** (l + 1)] = tail_prod / math.exp(sum(math.log(probs.p(j)) for j in range(2, l + 2)))
    S = build_truncated(probs, M).to_csr()
    resid = S[1 : M - 1, 1:] @ v[1:] - v[1 : M - 1]
    assert np.max(np.abs(resid)) < 1e-14
    assert 0 < v[1:].min() and v.max() <= 1


@pytest.mark.parametrize("n,expected", [(0, (2, 2)), (1, (4, 8)), (2, (8, 32))])
def test_hitting_formula(n, expected):
    assert expected_visits_and_hitting(n, ProbabilitySequence.constant(2, 0.5)) == expected


def test_hitting_formula_log_space():
    probs = ProbabilitySequence.constant(2, 0.99)
    visits, tau = expected_visits_and_hitting(100, probs)
    assert math.isclose(visits, 0.99**-101, rel_tol=1e-12)
    assert math.isclose(tau, 2**100 * 0.99**-101, rel_tol=1e-12)
