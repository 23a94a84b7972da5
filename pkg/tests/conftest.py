import numpy as np
import pytest
from hypothesis import strategies as st

from dicke2.model import MeanFieldState, ModelParams


@st.composite
def params_strategy(draw, max_n=10):
    n = draw(st.integers(1, max_n))
    return ModelParams(
        omega0=draw(st.floats(0.2, 3.0)),
        omega_q=draw(st.floats(0.01, 2.0)),
        g=draw(st.floats(0.0, 2.5)),
        lam=draw(st.floats(0.0, 2.5)),
        kappa=draw(st.floats(0.0, 2.0)),
        n_qubits=n,
    )


@st.composite
def state_strategy(draw):
    theta = draw(st.floats(0.0, np.pi))
    phi = draw(st.floats(0.0, 2 * np.pi))
    return MeanFieldState.from_bloch(
        theta, phi, n=draw(st.floats(0.0, 20.0)),
        x=draw(st.floats(-5.0, 5.0)), y=draw(st.floats(-5.0, 5.0)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
