import numpy as np
import pytest

from kinmix import DistributionField, MixtureParams, SpatialGrid, VelocityGrid, discrete_maxwellian


def uniform_field(vgrid, sgrid, params, densities, velocities, temperatures):
    """Field of spatially uniform species Maxwellians."""
    rows = []
    for p, m in enumerate(params.masses):
        n = np.full(sgrid.shape, float(densities[p]))
        u = np.broadcast_to(np.asarray(velocities[p], dtype=float), sgrid.shape + (vgrid.dim,))
        T = np.full(sgrid.shape, float(temperatures[p]))
        rows.append(discrete_maxwellian(n, u, T, m, vgrid, params.maxwellian_correction))
    return DistributionField(np.stack(rows), vgrid, sgrid, params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def one_cell():
    return SpatialGrid((1,), (0.0,), (1.0,), (("periodic", "periodic"),))


@pytest.fixture
def two_species():
    return MixtureParams((1.0, 2.0), knudsen=1.0)


@pytest.fixture
def vgrid_1d():
    return VelocityGrid.from_spacing(0.25, 10.0)
