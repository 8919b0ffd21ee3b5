from hypothesis import HealthCheck, settings

settings.register_profile("ppplab", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ppplab")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_acceptance_results", None)
    if not store:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(store):
        checks = store[k]
        ok = all(c.passed for c in checks)
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k}")
        for c in checks:
            tr.write_line("    " + c.line())
