VERDICT_LINES = []


def pytest_terminal_summary(terminalreporter):
    """Show one verdict line per acceptance criterion, immune to capture."""
    if VERDICT_LINES:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICT_LINES:
            terminalreporter.write_line(line)
