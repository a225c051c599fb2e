import numpy as np
import pytest
from hypothesis import settings, strategies as st
from hypothesis.extra import numpy as hnp

from ipsclass.events import DeviceStream

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

coord = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)


@st.composite
def positions(draw, min_n=0, max_n=60):
    n = draw(st.integers(min_n, max_n))
    return draw(hnp.arrays(np.float64, (n, 3), elements=coord))


@st.composite
def streams(draw, min_n=0, max_n=60):
    """Streams with timestamps on a quarter-second lattice, so shifts stay exact."""
    pos = draw(positions(min_n, max_n))
    steps = draw(hnp.arrays(np.int64, len(pos), elements=st.integers(0, 400)))
    t = 1000.0 + np.cumsum(steps) * 0.25
    return DeviceStream("dev", pos, t)


def brute_mscw(pos, k):
    """Direct double loop over events and lags."""
    import math

    out = []
    for i in range(k, len(pos)):
        out.append(max(math.dist(pos[i], pos[i - p]) for p in range(1, k + 1)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
