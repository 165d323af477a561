import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def say(capsys):
    """Print a line straight to the terminal, bypassing output capture."""

    def _say(line: str) -> None:
        with capsys.disabled():
            print(line)

    return _say
