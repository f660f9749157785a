import pytest

_CRITERIA = {}


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="also run tests marked slow (large 2D patches)")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running or memory-heavy test, needs --runslow")
    config.addinivalue_line("markers", "acceptance(number, text): acceptance criterion")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, text = mark.args
    entry = _CRITERIA.setdefault(number, {"text": text, "passed": 0, "failed": 0, "skipped": 0})
    if rep.failed:
        entry["failed"] += 1
    elif rep.skipped:
        entry["skipped"] += 1
    elif rep.when == "call":
        entry["passed"] += 1


def _status(entry):
    if entry["failed"]:
        return "FAIL"
    return "PASS" if entry["passed"] else "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {_status(entry)}  {entry['text']}")
