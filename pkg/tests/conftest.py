import os

import pytest

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# --- acceptance summary ---------------------------------------------------------
# tests/test_acceptance.py records (criterion, part, passed, detail) through the
# ``acceptance_log`` fixture; one line per criterion is printed after the run.

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_log():
    def record(criterion: int, part: str, passed: bool, detail: str):
        _ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
        print(f"criterion {criterion} [{part}]: {'PASS' if passed else 'FAIL'} - {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[n]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAIL'} ({d})" for name, good, d in parts)
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} | {detail}")
