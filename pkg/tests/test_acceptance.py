"""Acceptance criteria, each at its stated tolerance.

Every criterion prints one summary line plus one line per individual check.
Checks that cannot be met are reported as failures rather than relaxed.
"""

import pytest

from ppplab.verify import CRITERIA



@pytest.fixture(scope="session")
def results(request):
    store = {}
    request.config._acceptance_results = store
    return store


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, results):
    checks = CRITERIA[k]()
    results[k] = checks
    ok = all(c.passed for c in checks)
    failed = [c.name for c in checks if not c.passed]
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {k}: "
          f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    for c in checks:
        print("  " + c.line())
    assert checks, f"criterion {k} produced no checks"
    assert ok, f"criterion {k} failed checks: {', '.join(failed)}"
