import pytest

from amfc.probs import ProbabilitySequence

# degree-3 sequences around theta_3 = 1/2, all with p_1 = 3/4 and a tail of 3/4
TRAPPED_AT_HALF = ProbabilitySequence.from_prefix(3, [3 / 4, 2 / 3], 3 / 4)
TWO_ESCAPES = ProbabilitySequence.from_prefix(3, [3 / 4, 2 / 3, 9 / 14], 3 / 4)
RECAPTURED = ProbabilitySequence.from_prefix(3, [3 / 4, 2 / 3, 9 / 14, 126 / 128], 3 / 4)
# iid uniform parameters in [0.83, 0.9]
NEAR_ONE_IID = ProbabilitySequence.from_dict(
    {"d": 2, "tail": {"kind": "iid_uniform", "lo": 0.83, "hi": 0.9, "seed": 2024}}
)


@pytest.fixture
def const08_d2():
    return ProbabilitySequence.constant(2, 0.8)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line, then assert the outcome."""
    def report(number, ok, detail):
        line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
