import numpy as np
import pytest

from nsmreg import Dataset, DomainBox, NnModel, NormSpec, NsmModel, sample_synthetic

NORMS = [NormSpec(1), NormSpec(2), NormSpec("inf")]


@pytest.fixture
def two_point():
    """D = {(0 -> 0), (1 -> 1)} on [0, 1]."""
    return Dataset(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]), DomainBox((0.0,), (1.0,)))


@pytest.fixture(scope="session")
def example_data():
    return sample_synthetic("cos_plus_sin", DomainBox((0, 0), (10, 10)), 30, 7)


def random_dataset(rng, dim, n, lo=0.0, hi=1.0):
    X = rng.uniform(lo, hi, size=(n, dim))
    y = rng.normal(size=n)
    return Dataset(X, y, DomainBox.cube(lo, hi, dim))


def models(d, L, norm=NormSpec(2)):
    return NsmModel(d, L, norm), NnModel(d, norm)


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    """Print and remember one PASS/FAIL line for the acceptance summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2} {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
