import warnings

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_configure(config):
    # cvxpy's "solution may be inaccurate" notices from the reference solvers
    warnings.filterwarnings("ignore", message="Solution may be inaccurate")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {text}")
