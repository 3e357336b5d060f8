import numpy as np
import pytest

from psiec.windows import default_windows, load_window_config, shipped_config


@pytest.fixture(scope="session")
def iso():
    return default_windows()


@pytest.fixture(scope="session")
def directional():
    return default_windows(directional=True)


@pytest.fixture(scope="session")
def polar():
    return load_window_config(shipped_config("polar"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and getattr(mod, "RESULTS", None):
        terminalreporter.section("acceptance criteria")
        for line in mod.report_lines():
            terminalreporter.write_line(line)
