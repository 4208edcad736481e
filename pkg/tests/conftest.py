from pathlib import Path

import numpy as np
import pytest

from nifslab.catalog import cantor, load_family, paper_example

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def example():
    return paper_example()


@pytest.fixture(scope="session")
def cantor_family():
    return cantor()


@pytest.fixture(scope="session")
def slopes():
    """1-D maps x/2 and x/4 + 3/4."""
    return load_family(CONFIGS / "slopes.yaml")


def nonreal(modulus, angle=1.0):
    return modulus * np.exp(1j * angle)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
