import sys


def pytest_terminal_summary(terminalreporter):
    suite = sys.modules.get("test_acceptance")
    if suite is None:
        return
    ran = {int(r.nodeid.split("::test_c")[1][:2])
           for key in ("passed", "failed", "error")
           for r in terminalreporter.stats.get(key, [])
           if "test_acceptance.py::test_c" in getattr(r, "nodeid", "") and r.when == "call"}
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ran):
        terminalreporter.write_line(suite.RESULTS.get(n, f"criterion {n:2d}: FAIL  (error before a verdict)"))
