import json

import pytest
from hypothesis import given, strategies as st

from amfc.probs import ConfigError, ConvergentDeficit, Cycle, IidUniform, ProbabilitySequence


def test_prefix_then_tail():
    p = ProbabilitySequence.from_prefix(3, [0.5, 0.6], 0.9)
    assert p.values(4).tolist() == [0.5, 0.6, 0.9, 0.9]
    with pytest.raises(IndexError):
        p.p(0)


def test_cycle_repeats_pattern():
    p = ProbabilitySequence.cyclic(2, [0.3, 0.7, 0.9])
    assert p.values(7).tolist() == [0.3, 0.7, 0.9, 0.3, 0.7, 0.9, 0.3]


@given(st.integers(0, 12), st.integers(1, 20))
def test_shift_agrees_with_parent(k, j):
    for p in (
        ProbabilitySequence.from_prefix(2, [0.4, 0.5, 0.6, 0.7], 0.8),
        ProbabilitySequence.cyclic(3, [0.6, 0.9]),
        ProbabilitySequence(2, (0.5,), IidUniform(0.3, 0.9, 7)),
        ProbabilitySequence(2, (), ConvergentDeficit(1.0, 0.5)),
    ):
        assert p.shift(k).p(j) == p.p(j + k)
        assert p.shift(k).shift(1).p(j) == p.p(j + k + 1)


def test_iid_is_reproducible_and_in_range():
    a = ProbabilitySequence(2, (), IidUniform(0.83, 0.9, 11))
    b = ProbabilitySequence(2, (), IidUniform(0.83, 0.9, 11))
    c = ProbabilitySequence(2, (), IidUniform(0.83, 0.9, 12))
    va = a.values(200)
    assert (va == b.values(200)).all()
    assert (va != c.values(200)).any()
    assert va.min() >= 0.83 and va.max() <= 0.9


@pytest.mark.parametrize("p", [
    ProbabilitySequence.from_prefix(3, [0.75, 2 / 3], 0.75),
    ProbabilitySequence.cyclic(2, [0.3, 0.7]),
    ProbabilitySequence(2, (0.5,), IidUniform(0.2, 0.9, 3)),
    ProbabilitySequence(2, (), ConvergentDeficit(1.0, 0.5)).shift(3),
])
def test_json_round_trip(p, tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps(p.to_dict()))
    q = ProbabilitySequence.load(path)
    assert q == p and q.digest() == p.digest()


@pytest.mark.parametrize("bad", [
    {"d": 1, "tail": {"kind": "constant", "value": 0.5}},
    {"d": 2, "prefix": [0.0], "tail": {"kind": "constant", "value": 0.5}},
    {"d": 2, "tail": {"kind": "constant", "value": 1.5}},
    {"d": 2, "tail": {"kind": "nope"}},
    {"d": 2, "tail": {"kind": "iid_uniform", "lo": 0.9, "hi": 0.5, "seed": 1}},
    {"prefix": []},
])
def test_bad_configs(bad):
    with pytest.raises(ConfigError):
        ProbabilitySequence.from_dict(bad)


def test_stable_index_and_inf():
    p = ProbabilitySequence.from_prefix(2, [0.9, 0.4, 0.6, 0.3], 0.7)
    assert p.stable_index(0.5) == 5
    assert p.inf_from(2) == 0.3 and p.inf_from(5) == 0.7
    assert ProbabilitySequence.constant(2, 0.4).stable_index(0.5) is None
    assert ProbabilitySequence.constant(2, 0.6).stable_index(0.5) == 1
    deficit = ProbabilitySequence(2, (), ConvergentDeficit(1.0, 0.5))
    # p_j = 1 - 2^{-j}: p_1 = 0.5, p_2 = 0.75
    assert deficit.stable_index(0.7) == 2


def test_irreducible_flags():
    assert not ProbabilitySequence.constant(2, 1.0).irreducible
    assert ProbabilitySequence.cyclic(2, [1.0, 0.9]).irreducible
    assert isinstance(ProbabilitySequence.cyclic(2, [1.0, 0.9]).tail, Cycle)
