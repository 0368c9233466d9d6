"""Collects the acceptance verdicts and prints them after the run."""

ACCEPTANCE_LINES = {}


def record(key, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}"
    ACCEPTANCE_LINES[key] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(str(k).split()[0])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
