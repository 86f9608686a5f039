def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[key].line())
        for c in RESULTS[key].checks:
            if not c.passed:
                dev = "" if c.deviation is None else f" deviation {c.deviation:.3e}"
                terminalreporter.write_line(f"    failing: {c.name}{dev} {c.note}".rstrip())
