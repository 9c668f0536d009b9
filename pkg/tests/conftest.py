"""Pytest wiring: collect acceptance verdict lines and print them at the end."""

import pytest

acceptance_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if (rep.when == "call" and rep.failed
            and getattr(item.module, "__name__", "") == "test_acceptance"):
        acceptance_results.append(f"{item.name}: FAIL ({rep.longreprtext.splitlines()[-1]})")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_results:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_results:
            terminalreporter.write_line(line)
