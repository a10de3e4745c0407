import numpy as np
import pytest

from vstate import FourierBoundary, PatchState, from_ellipse, kirchhoff_omega, normalize_mean

A_KIRCHHOFF = 1.2


def kirchhoff_state(a: float = A_KIRCHHOFF, n_modes: int = 32) -> PatchState:
    b = normalize_mean(from_ellipse(a, 1 / a, n_modes, tol=np.inf))
    return PatchState(b, kirchhoff_omega(a, 1 / a))


@pytest.fixture(scope="session")
def kirchhoff():
    return kirchhoff_state()


@pytest.fixture(scope="session")
def disk16():
    return FourierBoundary.disk(1.0, 16)


@pytest.fixture(scope="session")
def branch_m2():
    from vstate import continue_branch

    return continue_branch(2, 8, ds=0.02, n_modes=32)


@pytest.fixture(scope="session")
def amplitude_solves_m2():
    from vstate import amplitude_constrained_solve

    return {c: amplitude_constrained_solve(2, c, n_modes=32) for c in (0.02, 0.05, 0.1)}


ACCEPTANCE_LINES = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
