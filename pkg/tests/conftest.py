from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# One line per acceptance criterion, filled in by test_acceptance.py.
CRITERIA: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: (len(k), k)):
        terminalreporter.write_line(CRITERIA[key])
