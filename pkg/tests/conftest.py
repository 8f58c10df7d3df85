import numpy as np
import pytest

from vortgrowth.spectral import ScalarField, make_grid


def eigenfunction(n: int) -> ScalarField:
    grid = make_grid(n)
    a = np.zeros((grid.half, grid.half))
    a[0, 0] = 2 * np.pi**2
    return ScalarField.from_spectrum(grid, a)


def smooth_spectrum(n: int) -> np.ndarray:
    """Low-amplitude band-limited data used for transport checks."""
    N = n // 2
    a = np.zeros((N, N))
    a[0, 0], a[1, 0], a[0, 2], a[2, 1] = 1.0, 0.5, 0.3, 0.2
    return a


@pytest.fixture
def eig128():
    return eigenfunction(128)


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
