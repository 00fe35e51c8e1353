import numpy as np
import pytest

from nvdnp.config import load_config, load_samples
from nvdnp.spin_model import HyperfineTensor, NvParameters

SAMPLE_LABELS = ("D1", "D2", "D3", "D4", "D5")


@pytest.fixture(scope="session")
def config():
    return load_config()


@pytest.fixture(scope="session")
def samples():
    return load_samples()


@pytest.fixture
def nv():
    return NvParameters()


@pytest.fixture
def secular_sites():
    """Three equivalent secular 130 MHz couplings."""
    return (HyperfineTensor.secular(130.0),) * 3


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance summary --------------------------------------------------------

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = dict(item.user_properties).get("detail", "")
        item.config.stash[ACCEPTANCE].append((marker.args[0], report.passed, detail))


def pytest_terminal_summary(terminalreporter, config):
    rows = sorted(config.stash.get(ACCEPTANCE, []), key=lambda r: r[0])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in rows:
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
