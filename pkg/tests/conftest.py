from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from tiersim.core import TierModel

from helpers import ACCEPTANCE

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:5s} {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def small_tiers() -> TierModel:
    return TierModel(fast_capacity_pages=4, slow_capacity_pages=64)
