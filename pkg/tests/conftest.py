import os

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from smotkit.geometry import BBox

settings.register_profile(
    "default", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

coord = st.floats(min_value=-500, max_value=500, allow_nan=False, allow_infinity=False)
side = st.floats(min_value=0.5, max_value=200, allow_nan=False, allow_infinity=False)
boxes = st.builds(BBox, coord, coord, side, side)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
