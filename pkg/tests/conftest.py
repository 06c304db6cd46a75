import numpy as np
import pytest

from meanhad.domain import build_preset

PRESET_PARAMS = {
    "canonical": {"c": 4.0},
    "half": {"M": 4.0},
    "thin": {"M": 3.0, "k": 2},
    "neumann": {"c": -4.0, "delta": 1.0},
    "neumann0": {"c": -4.0, "delta": 0.0},
}

_acceptance_lines = []


def preset(name):
    key = "neumann" if name == "neumann0" else name
    return build_preset(key, PRESET_PARAMS[name])


@pytest.fixture(params=sorted(PRESET_PARAMS))
def any_preset(request):
    return preset(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion():
    """Record a pass/fail line for the acceptance summary."""
    def record(number, title, passed, detail=""):
        _acceptance_lines.append((number, title, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_acceptance_lines):
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{mark}] {number:>2}. {title}: {detail}")
