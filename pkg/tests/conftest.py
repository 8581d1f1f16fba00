"""Shared fixtures and the acceptance-criteria reporting hook."""

from __future__ import annotations

import re

import pytest

from iris.config import RunConfig
from iris.synthetic import make_fixture

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _ACCEPTANCE_RESULTS[name] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _ACCEPTANCE_RESULTS[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        match = re.match(r"test_criterion_(\d+)_(.*)", name)
        if match:
            label = f"criterion {match.group(1)}: {match.group(2).replace('_', ' ')}"
        else:
            label = name
        outcome = _ACCEPTANCE_RESULTS[name]
        line = f"{label:<55s} [{'PASS' if outcome == 'passed' else outcome.upper()}]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fixture_world(tmp_path_factory):
    """One synthetic corpus shared by the pipeline-level tests.

    Individual tests run in their own output directories but share the
    provider cache, so only the first end-to-end run pays the (mock)
    provider cost.
    """
    root = tmp_path_factory.mktemp("fixture-world")
    paths = make_fixture(root, n_train=300, n_dev=60, n_test=100,
                         epochs=30, lr=0.01)
    return paths


@pytest.fixture()
def fixture_cfg(fixture_world):
    """A fresh config for the shared corpus (callers set run.out_dir)."""
    return RunConfig.load(fixture_world.config)
