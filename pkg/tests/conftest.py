import numpy as np
import pytest

from fmhnn import DEFAULT_PARAMS, SolverConfig, SystemDef, two_neuron_system


@pytest.fixture
def default_system():
    return two_neuron_system(DEFAULT_PARAMS)


@pytest.fixture
def relaxation():
    """``D^a x = -x``, the scalar Mittag-Leffler test problem."""
    return SystemDef(1, lambda t, x, p: -x, jacobian=lambda x, p: np.array([[-1.0]]))


@pytest.fixture
def short_cfg():
    return SolverConfig(step_size=0.01, t_end=5.0)


_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)``; lines are printed at the end of the session."""

    def record(number: int, passed: bool, detail: str) -> bool:
        _CRITERIA[number] = (passed, detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
