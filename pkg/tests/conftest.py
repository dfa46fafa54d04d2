"""Shared fixtures and the acceptance summary hook."""

from __future__ import annotations

import sys

import pytest

from pns_engine.judges import build_cot_reply, build_judge_reply
from pns_engine.clients import TableJudgeMock, TableRmMock


@pytest.fixture
def passing_judge():
    """Judge that passes everything with top quality scores."""
    return TableJudgeMock({}, default={
        "format-judge": build_judge_reply("pass"),
        "cot-judge": build_cot_reply(3, 3, 3, 3),
    })


@pytest.fixture
def neutral_rm():
    return TableRmMock({}, default=0.0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None) if mod else None
    if not results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria")
    for num in sorted(results):
        name, status, elapsed = results[num]
        terminalreporter.write_line(f"  criterion {num} ({name}): {status} [{elapsed:.2f}s]")
