import pytest

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    if report.when == "call" or report.outcome != "passed":
        props = dict(report.user_properties)
        if "criterion" not in props:
            return
        entry = _criteria.setdefault(props["criterion"], {"ok": True, "name": props["name"], "details": []})
        entry["ok"] = entry["ok"] and report.outcome == "passed"
        entry["details"] += [v for k, v in report.user_properties if k == "detail"]


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        item.user_properties.append(("criterion", mark.args[0]))
        item.user_properties.append(("name", mark.args[1]))


@pytest.fixture
def record(request):
    """Attach a one-line result detail to the current acceptance criterion."""

    def _record(detail: str):
        request.node.user_properties.append(("detail", detail))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        detail = "; ".join(e["details"])
        line = f"criterion {n:2d} {'PASS' if e['ok'] else 'FAIL'}  {e['name']}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
