import os
from collections import defaultdict

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ci", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

# criterion number -> [(passed, detail)], filled by the acceptance tests
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = defaultdict(list)


@pytest.fixture
def criterion():
    def record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE[number].append((bool(passed), detail))
        return bool(passed)

    return record


def acceptance_lines() -> list[str]:
    lines = []
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        lines.append(f"CRITERION {number}: {verdict} " + "; ".join(d for _, d in parts))
    return lines


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_lines()
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
