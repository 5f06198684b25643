def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one PASS/FAIL line per acceptance criterion after the run."""
    try:
        from tests import test_acceptance
    except ImportError:
        try:
            import test_acceptance
        except ImportError:
            return
    lines = getattr(test_acceptance, "VERDICT_LINES", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
