import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_VERDICTS = []


class Verdicts:
    """Collects one PASS/FAIL line per acceptance criterion."""

    def record(self, number, title, passed, detail=""):
        _VERDICTS.append((number, title, bool(passed), detail))
        return bool(passed)


@pytest.fixture
def verdicts():
    return Verdicts()


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_VERDICTS, key=lambda v: v[0]):
        line = f"{'PASS' if passed else 'FAIL'} [{number:>2}] {title}"
        if detail:
            line += f" :: {detail}"
        terminalreporter.write_line(line)
