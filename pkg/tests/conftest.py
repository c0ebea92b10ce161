"""Shared pytest hooks: collect acceptance verdicts and print them at the end."""

from __future__ import annotations

import pytest

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def record_criterion(request):
    """record_criterion(n, ok, detail) prints one line and stores it for the summary."""
    store = request.config.stash[ACCEPTANCE]
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def record(n, ok, detail):
        line = "criterion %2d: %s  %s" % (n, "PASS" if ok else "FAIL", detail)
        store[n] = line
        with capman.global_and_fixture_disabled():
            print("\n" + line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(store):
        terminalreporter.write_line(store[n])
