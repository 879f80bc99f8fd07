def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS, TITLES
    except ImportError:
        return
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, total, failed = RESULTS[n]
        tr.write_line(f"criterion {n:>2} {TITLES[n]}: {'PASS' if ok else 'FAIL'} "
                      f"({total - len(failed)}/{total} clauses)")
        for line in failed:
            tr.write_line(f"    {line}")
