from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from cascade.core import PhysicalParams

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def params() -> PhysicalParams:
    return PhysicalParams(omega=1.0, gamma=0.1, g=0.005)


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_report

    lines = acceptance_report.lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
