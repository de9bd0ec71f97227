import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def random_complex(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def random_antihermitian(rng, n, scale=1.0):
    A = random_complex(rng, n)
    return scale * (A - A.conj().T) / 2


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", [])
    if lines:
        terminalreporter.section("acceptance verdicts")
        for line in sorted(lines):
            terminalreporter.write_line(line)
