import numpy as np
import pytest

from csop.schrodinger import Grid1D, PotentialSpec, build_hamiltonian, find_gap


def random_complex_symmetric(n, rng, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (a + a.T)


@pytest.fixture(scope="session")
def kp_grid_2000():
    """Kronig-Penney comb v0 = 3 on L = 40 with n = 2000, eigensystem cached.

    Shared by the schrodinger tests and the acceptance suite; the eigh runs
    once per session.
    """
    grid = Grid1D(length=40.0, n=2000)
    pot = PotentialSpec.delta_comb(np.arange(1.0, 40.0), 3.0)
    ham = build_hamiltonian(grid, pot)
    ham.eigensystem()
    gap = find_gap(ham, energy_ceiling=35.0)
    return ham, gap
