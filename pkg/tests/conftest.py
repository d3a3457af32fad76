import pytest

from convopt.model import ALEXNET_CONV1, ConvParams, KernelKind
from convopt.mplp import cnn_partition


@pytest.fixture(scope="session")
def alexnet():
    return ALEXNET_CONV1


@pytest.fixture(scope="session")
def conv_partition():
    return cnn_partition(KernelKind.CONV, seed=0)


@pytest.fixture(scope="session")
def pool_partition():
    return cnn_partition(KernelKind.POOL, seed=0)


@pytest.fixture
def small_conv():
    return ConvParams(B=2, C=2, K=2, W=4, H=4, R=2, S=2)


@pytest.fixture
def layer_file(tmp_path):
    def write(p):
        path = tmp_path / "layer.json"
        path.write_text(p.to_json())
        return str(path)
    return write


def pytest_terminal_summary(terminalreporter):
    lines = [value for reports in terminalreporter.stats.values() for r in reports
             for key, value in getattr(r, "user_properties", ()) if key == "acceptance"
             and getattr(r, "when", "call") == "call"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
