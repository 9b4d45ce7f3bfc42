import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fourvol.spectrum import TickSeries
from fourvol.trigkernels import ObservationGrid

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def regular_grid(n, T=1.0, offset=0.0):
    return ObservationGrid(np.arange(n + 1) * (T / n) + offset, T)


def random_grid(rng, n, T=1.0, lattice=None):
    """Strictly increasing random times in [0, T] including 0 and T.

    With ``lattice`` the interior times are drawn from ``k T / lattice``.
    """
    if lattice is None:
        inner = np.sort(rng.uniform(0, T, n - 1))
    else:
        inner = np.sort(rng.choice(np.arange(1, lattice), n - 1, replace=False)) * (T / lattice)
    return ObservationGrid(np.concatenate([[0.0], inner, [T]]), T)


def brownian_ticks(rng, grid, sigma2=0.16, asset_id="1"):
    dx = rng.standard_normal(grid.n) * np.sqrt(sigma2 * grid.spacings)
    return TickSeries(asset_id, grid, np.concatenate([[0.0], np.cumsum(dx)]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail, seconds):
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail} [{seconds:.1f} s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
