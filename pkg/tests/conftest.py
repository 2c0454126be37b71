import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_tet(rng, scale=1.0):
    """Random tetrahedron with a comfortable volume."""
    while True:
        v = rng.normal(size=(4, 3)) * scale
        e = v[1:] - v[0]
        vol = abs(np.linalg.det(e)) / 6
        diam = max(np.linalg.norm(a - b) for a in v for b in v)
        if vol > 0.02 * diam ** 3:
            return v


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
