import pytest

_ACCEPTANCE_RESULTS = []


def record_criterion(number, name, passed, detail=""):
    """Collect one acceptance-criterion verdict for the end-of-run table."""
    _ACCEPTANCE_RESULTS.append((number, name, passed, detail))


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        line = f"criterion {number} [{name}]: {verdict}"
        if detail:
            line += f" ({detail})"
        tr.write_line(line)
