import numpy as np
import pytest

from qutrit_roof.curve import GridSpec, MinimizerConfig, sweep_grid
from qutrit_roof.envelope import lower_envelope


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_surface():
    return sweep_grid(GridSpec(31, 31), MinimizerConfig())


@pytest.fixture(scope="session")
def small_envelope(small_surface):
    return lower_envelope(small_surface)


def random_tetra_points(rng, count):
    """Rejection draws from the coordinate box, kept if physical."""
    from qutrit_roof.states import R_RANGE, X_RANGE, Y_RANGE, in_tetrahedron

    out = []
    while len(out) < count:
        p = (rng.uniform(*X_RANGE), rng.uniform(*Y_RANGE), rng.uniform(*R_RANGE))
        if in_tetrahedron(*p, tol=0.0):
            out.append(p)
    return np.array(out)


ACCEPTANCE = []


def record(number, name, ok, detail):
    """Log one acceptance line; printed again in the terminal summary."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
