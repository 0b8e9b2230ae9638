import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from twolayer.channel_model import NoiseField, OfdmLayout

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

VERDICTS: list[str] = []


def static_field(z, re_counts=None) -> NoiseField:
    z = np.atleast_2d(np.asarray(z, dtype=float))
    layout = OfdmLayout(re_counts or (1,) * z.shape[1])
    return NoiseField(z, layout)


def random_field(rng, K, M, lo=-2.0, hi=1.0) -> NoiseField:
    """Static field with log-uniform effective noise in ``[10^lo, 10^hi]``."""
    return static_field(10.0 ** rng.uniform(lo, hi, (K, M)))


@pytest.fixture
def verdict():
    """Record a one-line PASS/FAIL verdict shown in the terminal summary."""
    def record(number, name, ok, detail=""):
        line = f"criterion {number} [{name}]: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        VERDICTS.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
