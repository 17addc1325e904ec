import pytest

from mixnorm.acceptance import SuiteConfig, run_suite, summary_line

_MANIFEST_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def manifest(request):
    """One full acceptance run (with the determinism rerun), shared by the session."""
    m = run_suite(SuiteConfig())
    request.config.stash[_MANIFEST_KEY] = m
    return m


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    m = config.stash.get(_MANIFEST_KEY, None)
    if m is None:
        return
    terminalreporter.section("acceptance criteria")
    for entry in m["checks"]:
        terminalreporter.write_line(summary_line(entry))
    terminalreporter.write_line(f"{len(m['checks']) - len(m['failed'])}/{len(m['checks'])} criteria passed")
