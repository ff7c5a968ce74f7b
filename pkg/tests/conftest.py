import numpy as np
import pytest

from entropy_lab.profiles import gaussian, mixture


@pytest.fixture(scope="session")
def std_gaussian():
    return gaussian(1.0, L=10.0, n=2048)


@pytest.fixture(scope="session")
def fine_gaussian():
    return gaussian(1.0, L=10.0, n=4096)


@pytest.fixture(scope="session")
def bimodal():
    return mixture([(0.5, -1.5, 0.5), (0.5, 1.5, 0.5)], L=10.0, n=2048)


def random_density(rng: np.random.Generator, n: int = 1024):
    """Positive three-component Gaussian mixture with random weights, centres and widths."""
    k = 3
    comps = list(zip(rng.uniform(0.2, 1.0, k), rng.uniform(-2.0, 2.0, k), rng.uniform(0.3, 1.5, k)))
    return mixture(comps, L=12.0, n=n)


ACCEPTANCE: dict = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Store and print one acceptance verdict, then fail the test if it did not hold."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
