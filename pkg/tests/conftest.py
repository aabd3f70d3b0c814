import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from coupled_rotors.grid import GridSpec

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid16():
    return GridSpec(16, 16, 1.0)


def random_amplitudes(rng, shape):
    a = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return a / np.linalg.norm(a)


# (criterion, passed, detail) lines collected by the acceptance suite
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: int(r[0][1:])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {cid}: {detail}")
