"""Shared fixtures, plus one PASS/FAIL line per acceptance criterion after the run."""

import pytest

_VERDICTS = {}


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
    # scenario outputs are relative to the working directory
    monkeypatch.chdir(tmp_path)


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::test_criterion_")[1]
    if report.when == "call" or (report.when == "setup" and report.failed):
        _VERDICTS[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_VERDICTS):
        num, _, label = name.partition("_")
        terminalreporter.write_line(f"{_VERDICTS[name]}  criterion {int(num):2d}: "
                                    f"{label.replace('_', ' ')}")
