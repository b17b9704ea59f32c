import pytest

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        _ACCEPTANCE.append((props["criterion"], report.outcome, props.get("detail", ""), report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail, duration in sorted(_ACCEPTANCE, key=lambda row: int(row[0].split()[0])):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  ({duration:.2f} s)  {detail}")


@pytest.fixture
def criterion(request):
    """Tag a test as an acceptance criterion and attach a one-line detail."""

    def tag(name: str, detail: str = ""):
        request.node.user_properties.append(("criterion", name))
        if detail:
            request.node.user_properties.append(("detail", detail))

    return tag
