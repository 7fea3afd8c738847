import os
import re

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CRITERIA_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: (int(re.match(r"\d+", s.split()[1]).group()), s)):
            terminalreporter.write_line(line)
