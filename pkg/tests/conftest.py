import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from csslab.discretization import make_grid
from csslab.state import EquivariantState

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

COUPLINGS = (-1.0, 0.0, 0.5, 1.0, 2.0)


def smooth_state(grid, m, g, amps, widths, chirps, centre=0.0):
    """Sum of r^m Gaussians (optionally ring-shaped) with even chirps; smooth at the origin."""
    r = grid.nodes
    u = np.zeros_like(r, dtype=complex)
    for a, w, c in zip(amps, widths, chirps):
        u += a * (r / w) ** m * np.exp(-0.5 * ((r - centre) / w) ** 2 - 0.5 * (centre / w) ** 2
                                       + 1j * c * r ** 2)
    return EquivariantState(m=m, g=g, grid=grid, u=u)


@st.composite
def random_states(draw, couplings=COUPLINGS, n=512, rmax=16.0):
    m = draw(st.sampled_from((0, 1, 2)))
    g = draw(st.sampled_from(couplings))
    k = draw(st.integers(1, 3))
    amps = [draw(st.floats(-2.0, 2.0).filter(lambda a: abs(a) > 0.05)) for _ in range(k)]
    widths = [draw(st.floats(0.5, 2.0)) for _ in range(k)]
    chirps = [draw(st.floats(-0.5, 0.5)) for _ in range(k)]
    grid = make_grid(n, rmax, "uniform-midpoint", m)
    return smooth_state(grid, m, g, amps, widths, chirps)


@pytest.fixture(scope="session")
def gaussian_grid():
    return make_grid(512, 12.0, "uniform-midpoint")
