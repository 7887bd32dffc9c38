import numpy as np
import pytest

from ewb.geometry import EuclideanBall, HyperbolicDisk, QuantileSpace, SPDSpace, SphereCap


def all_spaces():
    return [
        EuclideanBall(2, 1.0),
        EuclideanBall(3, 2.0),
        SphereCap(0.6),
        SphereCap(1.2),
        HyperbolicDisk(1.0),
        HyperbolicDisk(2.0),
        SPDSpace(2, 1.0),
        SPDSpace(3, 0.5),
        QuantileSpace(8, 0.0, 1.0),
    ]


@pytest.fixture(params=all_spaces(), ids=lambda s: repr(s))
def space(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.fixture(scope="session")
def criterion():
    """Record one acceptance line: ``criterion(k, passed, detail)``."""

    def record(k, passed, detail=""):
        line = f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        _CRITERIA[k] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])
