import pytest


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="also run the long reproduction tests")


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow reproduction run; pass --runslow")
    for item in items:
        # acceptance criteria report their own skip line
        if "slow" in item.keywords and item.module.__name__.split(".")[-1] != "test_acceptance":
            item.add_marker(skip)


@pytest.fixture
def criterion(request):
    """``criterion(label, ok, detail)`` records a PASS/FAIL line and asserts ``ok``."""

    def report(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        request.config.acceptance_lines.append(line)
        print(line)
        assert ok, line

    def skip(label, why):
        line = f"SKIP  criterion {label}: {why}"
        request.config.acceptance_lines.append(line)
        pytest.skip(why)

    report.skip = skip
    report.runslow = request.config.getoption("--runslow")
    return report


def pytest_terminal_summary(terminalreporter, config):
    if config.acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in config.acceptance_lines:
            terminalreporter.write_line(line)
