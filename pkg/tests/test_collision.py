import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinmix import (MixtureParams, SpatialGrid, VelocityGrid, bgk_rhs, discrete_maxwellian, entropy, species_moments,
                    total_moments)
from kinmix.collision import equilibrium_projection

from conftest import uniform_field


def _bimodal(rng, vg, cells, masses):
    """Positive non-equilibrium profiles: each species a sum of two shifted Maxwellians."""
    rows = []
    for m in masses:
        f = 0
        for _ in range(2):
            n = rng.uniform(0.2, 1.0, cells)
            u = rng.uniform(-0.5, 0.5, (cells, vg.dim))
            T = rng.uniform(0.5, 1.5, cells)
            f = f + discrete_maxwellian(n, u, T, m, vg, "none")
        rows.append(f)
    return np.stack(rows)


def test_common_maxwellian_is_fixed_point(one_cell):
    vg = VelocityGrid.from_spacing(0.25, 8.0)
    params = MixtureParams((1.0, 2.0), 1.0)
    f = uniform_field(vg, one_cell, params, (1.0, 0.5), ([0.3], [0.3]), (1.0, 1.0))
    assert np.abs(bgk_rhs(f)).max() <= 1e-10


def test_single_species_is_classic_bgk(rng, one_cell):
    vg = VelocityGrid.from_spacing(0.3, 8.0)
    params = MixtureParams((1.3,), 1.0, collision_frequency=2.5)
    f = _bimodal(rng, vg, 1, (1.3,))
    mom = species_moments(f, params, vg)
    M = discrete_maxwellian(mom.density[0], mom.velocity[0], mom.temperature[0], 1.3, vg, True)
    np.testing.assert_allclose(bgk_rhs(f, params, vg)[0], 2.5 * (M - f[0]), atol=1e-15)


@pytest.mark.parametrize("D", [1, 2])
def test_species_mass_and_momentum(rng, D):
    masses = (1.0, 2.0)
    vg = VelocityGrid.from_spacing(0.25 if D == 1 else 0.4, 8.0 * np.sqrt(4.0), D)
    params = MixtureParams(masses, 1.0)
    f = _bimodal(rng, vg, 6, masses)
    Q = bgk_rhs(f, params, vg)
    vaxes = tuple(range(2, 2 + D))
    dv = vg.cell_volume
    mass_rate = Q.sum(axis=vaxes) * dv
    assert np.abs(mass_rate).max() <= 1e-13 * f.sum(axis=vaxes).max() * dv
    m = np.asarray(masses).reshape((2,) + (1,) * (D + 1))
    for d in range(D):
        mom_rate = (m * vg.component(d) * Q).sum(axis=(0,) + vaxes) * dv
        assert np.abs(mom_rate).max() <= 1e-6


def test_moment_mode_conserves_momentum_and_energy(rng):
    masses = (1.0, 3.0)
    vg = VelocityGrid.from_spacing(0.7, 6.0, 2)
    params = MixtureParams(masses, 1.0, maxwellian_correction="moments")
    f = _bimodal(rng, vg, 3, masses)
    Q = bgk_rhs(f, params, vg)
    m = np.asarray(masses).reshape(2, 1, 1, 1)
    dv = vg.cell_volume
    scale = (m * vg.speed_squared() * f).sum() * dv
    for d in range(2):
        assert abs((m * vg.component(d) * Q).sum() * dv) <= 1e-13 * scale
    assert abs((m * vg.speed_squared() * Q).sum() * dv) <= 1e-13 * scale


def test_equilibrium_residual_shrinks_with_width(one_cell):
    params = MixtureParams((1.0, 4.0), 1.0, maxwellian_correction="none")
    residuals = []
    for L in (3.0, 4.0, 5.0):
        vg = VelocityGrid.from_spacing(0.25, L)
        f = uniform_field(vg, one_cell, params, (1.0, 1.0), ([0.0], [0.0]), (1.0, 1.0))
        residuals.append(np.abs(bgk_rhs(f)).max())
    assert residuals[0] > residuals[1] > residuals[2]


def test_linear_in_density(rng):
    vg = VelocityGrid.from_spacing(0.25, 8.0)
    params = MixtureParams((1.0, 2.0), 1.0)
    f = _bimodal(rng, vg, 4, params.masses)
    np.testing.assert_allclose(bgk_rhs(3.7 * f, params, vg), 3.7 * bgk_rhs(f, params, vg), rtol=1e-12, atol=1e-14)


def test_threads_do_not_change_result(rng):
    vg = VelocityGrid.from_spacing(0.25, 6.0)
    params = MixtureParams((1.0, 2.0), 1.0)
    f = _bimodal(rng, vg, 17, params.masses)
    serial = bgk_rhs(f, params, vg, threads=1)
    np.testing.assert_array_equal(bgk_rhs(f, params, vg, threads=4), serial)


def test_equilibrium_projection_keeps_invariants(rng):
    vg = VelocityGrid.from_spacing(0.25, 8.0)
    params = MixtureParams((1.0, 2.0), 1.0, maxwellian_correction="moments")
    f = _bimodal(rng, vg, 3, params.masses)
    g = equilibrium_projection(f, vg, params)
    a, b = species_moments(f, params, vg), species_moments(g, params, vg)
    np.testing.assert_allclose(b.density, a.density, rtol=1e-13)
    ta, tb = total_moments(a, f, vg), total_moments(b, g, vg)
    np.testing.assert_allclose(tb.velocity, ta.velocity, atol=1e-13)
    np.testing.assert_allclose(tb.temperature, ta.temperature, rtol=1e-12)
    np.testing.assert_allclose(bgk_rhs(g, params, vg), 0.0, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8), st.floats(0.5, 2.0), st.floats(0.5, 2.0), st.floats(1.0, 5.0))
def test_homogeneous_relaxation_forward_euler(u1, u2, T1, T2, m2):
    masses = (1.0, m2)
    vg = VelocityGrid.from_spacing(0.25, 8.0 * np.sqrt(2.0) + 1.0)
    sg = SpatialGrid((1,), (0.0,), (1.0,))
    params = MixtureParams(masses, 1.0)
    f = uniform_field(vg, sg, params, (1.0, 0.5), ([u1], [u2]), (T1, T2)).values
    m = np.asarray(masses).reshape(2, 1, 1)
    dv = vg.spacing

    def totals(g):
        return (m * vg.axis * g).sum() * dv, (0.5 * m * vg.axis**2 * g).sum() * dv

    p0, e0 = totals(f)
    Q0 = bgk_rhs(f, params, vg)
    tol_p = abs((m * vg.axis * Q0).sum() * dv)
    tol_e = abs((0.5 * m * vg.axis**2 * Q0).sum() * dv)
    dt, steps = 0.02, 100
    H = [entropy(f, vg)[0]]
    for _ in range(steps):
        f = f + dt * bgk_rhs(f, params, vg)
        H.append(entropy(f, vg)[0])
    p1, e1 = totals(f)
    t = dt * steps
    assert abs(p1 - p0) / t <= 2 * tol_p + 1e-13
    assert abs(e1 - e0) / t <= 2 * tol_e + 1e-13
    assert np.all(np.diff(H) <= 1e-13)
