import pytest

_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            number, title = value
            detail = dict(report.user_properties).get("detail", "")
            _results()[number] = (title, report.passed, detail)


_config = None


def pytest_sessionstart(session):
    global _config
    _config = session.config


def _results() -> dict:
    return _config.stash[_ACCEPTANCE]


def pytest_terminal_summary(terminalreporter):
    results = _results()
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed, detail = results[number]
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
