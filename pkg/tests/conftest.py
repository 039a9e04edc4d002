import numpy as np
import pytest

from rnls.grid import make_grid
from rnls.groundstate import solve_Q_radial


@pytest.fixture(scope="session")
def grid64():
    return make_grid(2, 8.0, 64)


@pytest.fixture(scope="session")
def grid128():
    return make_grid(2, 8.0, 128)


@pytest.fixture(scope="session")
def q_profile():
    """Mass-critical free profile, 2d cubic, unit coupling."""
    return solve_Q_radial(3.0, 1.0, 2)


def random_field(grid, seed=0, smooth=True):
    """Deterministic random complex field; the smooth variant is band-limited
    with a localized envelope (negligible mass at the box edge)."""
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(grid.points) + 1j * rng.standard_normal(grid.points)
    if smooth:
        import scipy.fft as sfft

        coeffs = sfft.fftn(vals)
        k_cut = 0.4 * np.pi / max(grid.spacing)
        coeffs[grid.k_sq > k_cut**2] = 0.0
        vals = sfft.ifftn(coeffs) * np.exp(-0.5 * grid.radius_sq)
    return vals
