"""Shared test fixtures and the acceptance-summary reporter.

Tests in test_acceptance.py record a verdict per numbered criterion;
after the run, one PASS/FAIL/WARN line per criterion is printed so the
gate can be read at a glance without digging through pytest output.
"""

from __future__ import annotations

import numpy as np
import pytest

RESULTS: dict[int, tuple[str, str, str]] = {}


def record_criterion(number: int, title: str, status: str, detail: str = "") -> None:
    """Store one criterion's verdict for the end-of-run summary."""
    assert status in ("PASS", "FAIL", "WARN")
    RESULTS[number] = (title, status, detail)


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(RESULTS):
        title, status, detail = RESULTS[number]
        line = f"[{status}] criterion {number:2d}: {title}"
        if detail:
            line += f" ({detail})"
        markup = {"PASS": {"green": True}, "FAIL": {"red": True},
                  "WARN": {"yellow": True}}[status]
        tr.write_line(line, **markup)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
