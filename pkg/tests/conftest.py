import pytest

from seglm.numerics import set_float_mode

# Verdict lines appended by test_acceptance, echoed after the pytest
# summary so each criterion's outcome is visible in one place.
ACCEPTANCE_VERDICTS: list[str] = []


@pytest.fixture(autouse=True)
def float64_default():
    # Oracle mode for every test; tests that exercise float32 switch inside
    # and this resets them afterwards.
    set_float_mode("float64")
    yield
    set_float_mode("float64")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)
