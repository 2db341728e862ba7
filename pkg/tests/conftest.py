import pytest

# criterion id -> (passed, description), filled from tests tagged with @criterion
ACCEPTANCE_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    cid = getattr(getattr(item, "function", None), "criterion", None)
    if cid and rep.when == "call":
        doc = (item.function.__doc__ or "").strip().splitlines()
        # parametrized criteria pass only if every case passes
        prev = ACCEPTANCE_RESULTS.get(cid, (True, ""))[0]
        ACCEPTANCE_RESULTS[cid] = (prev and rep.passed, doc[0] if doc else "")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_RESULTS, key=lambda c: int(c[2:])):
        ok, desc = ACCEPTANCE_RESULTS[cid]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {cid}: {desc}")
