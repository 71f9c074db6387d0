import pytest

_VERDICTS = {}


@pytest.fixture
def detail(request):
    """Attach a one-line measurement summary to an acceptance test."""

    def record(text):
        request.node.user_properties.append(("detail", text))

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    number = marker.args[0]
    text = "; ".join(v for k, v in item.user_properties if k == "detail")
    _VERDICTS[number] = ("PASS" if report.passed else "FAIL", item.name, text)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        verdict, name, text = _VERDICTS[number]
        line = f"criterion {number:>2}: {verdict}  {name}"
        if text:
            line += f"  [{text}]"
        terminalreporter.write_line(line)
