import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from kinmix import (BoundarySpec, DistributionField, InfluxState, MixtureParams, SpatialGrid, VelocityGrid,
                    cfl_max_step, discrete_maxwellian, transport_rhs, upwind_flux)
from kinmix.transport import fill_ghost_cells

PERIODIC = ("periodic", "periodic")
ZG = ("zero_gradient", "zero_gradient")


def test_upwind_flux_examples():
    assert upwind_flux(2.0, 5.0, 1.0) == 2.0
    assert upwind_flux(2.0, 5.0, -1.0) == -5.0
    assert upwind_flux(2.0, 5.0, 0.0) == 0.0


def _field(values, sg, vg, params=None):
    params = params or MixtureParams((1.0,) * values.shape[0], 1.0)
    return DistributionField(values, vg, sg, params)


def _reference_rate(values, sg, vg, bspec):
    """Flux-form rate from :func:`upwind_flux` on the ghost-extended array."""
    field = _field(values, sg, vg)
    g = fill_ghost_cells(field, bspec)
    rate = np.zeros_like(values)
    for d in range(sg.dim):
        axis = 1 + d
        core = [slice(1, -1)] * sg.dim
        core[d] = slice(None)
        gd = g[(slice(None), *core)]
        n = gd.shape[axis]
        lo = np.take(gd, range(0, n - 1), axis=axis)
        hi = np.take(gd, range(1, n), axis=axis)
        flux = upwind_flux(lo, hi, vg.component(d))
        rate -= (np.take(flux, range(1, n - 1), axis=axis) - np.take(flux, range(0, n - 2), axis=axis)) / sg.spacing[d]
    return rate


@pytest.mark.parametrize("sdim, vdim, kinds", [(1, 1, (PERIODIC,)), (1, 1, (ZG,)), (1, 2, (ZG,)),
                                               (2, 2, (PERIODIC, ZG)), (2, 2, (ZG, PERIODIC))])
def test_matches_flux_form(rng, sdim, vdim, kinds):
    sg = SpatialGrid((5, 4)[:sdim], (0.0,) * sdim, (1.0, 2.0)[:sdim], kinds)
    vg = VelocityGrid(2.0, 3, vdim)
    values = rng.random((2, *sg.shape, *vg.shape))
    bspec = BoundarySpec(kinds)
    np.testing.assert_allclose(transport_rhs(values, bspec, sg, vg), _reference_rate(values, sg, vg, bspec),
                               rtol=1e-13, atol=1e-13)


def test_constant_is_steady_periodic():
    sg = SpatialGrid((8,), (0.0,), (1.0,), (PERIODIC,))
    vg = VelocityGrid(3.0, 4)
    values = np.full((1, 8, vg.nodes_per_axis), 0.7)
    np.testing.assert_allclose(transport_rhs(values, BoundarySpec((PERIODIC,)), sg, vg), 0.0, atol=1e-13)


def test_indicator_moves_right():
    sg = SpatialGrid((6,), (0.0,), (1.5,), (PERIODIC,))
    vg = VelocityGrid(1.5, 1)  # nodes -1, 0, 1
    values = np.zeros((1, 6, 3))
    values[0, 2, 2] = 2.0
    rate = transport_rhs(values, BoundarySpec((PERIODIC,)), sg, vg)
    dx = sg.spacing[0]
    assert rate[0, 2, 2] == pytest.approx(-2.0 / dx)
    assert rate[0, 3, 2] == pytest.approx(2.0 / dx)
    assert rate.sum() == pytest.approx(0.0, abs=1e-12)


def test_ghost_cells():
    sg = SpatialGrid((3,), (0.0,), (1.0,), (PERIODIC,))
    vg = VelocityGrid(1.5, 1)
    values = np.arange(9.0).reshape(1, 3, 3)
    g = fill_ghost_cells(_field(values, sg, vg), BoundarySpec((PERIODIC,)))
    np.testing.assert_array_equal(g[0, 0], values[0, -1])
    np.testing.assert_array_equal(g[0, -1], values[0, 0])
    g = fill_ghost_cells(_field(values, sg.with_boundary((ZG,)), vg), BoundarySpec((ZG,)))
    np.testing.assert_array_equal(g[0, 0], values[0, 0])
    np.testing.assert_array_equal(g[0, -1], values[0, -1])


def test_influx_ghost_is_maxwellian():
    vg = VelocityGrid.from_spacing(0.5, 6.0)
    kinds = (("influx", "zero_gradient"),)
    sg = SpatialGrid((4,), (0.0,), (1.0,), kinds)
    state = InfluxState((1.0,), ((0.0,),), (1.0,))
    bspec = BoundarySpec(kinds, {(0, 0): state})
    values = np.zeros((1, 4, vg.nodes_per_axis))
    g = fill_ghost_cells(_field(values, sg, vg), bspec)
    np.testing.assert_allclose(g[0, 0], discrete_maxwellian(1.0, 0.0, 1.0, 1.0, vg, True))
    with pytest.raises(ValueError):
        BoundarySpec(kinds)


def _advect_error(cells):
    sg = SpatialGrid((cells,), (0.0,), (1.0,), (PERIODIC,))
    vg = VelocityGrid(1.5, 1)
    x = sg.centers(0)
    profile = lambda s: np.exp(-((s - 0.5 + 0.5) % 1.0 - 0.5) ** 2 / (2 * 0.1**2))
    values = np.zeros((1, cells, 3))
    values[0, :, 2] = profile(x)
    dx = sg.spacing[0]
    dt = 0.5 * dx
    bspec = BoundarySpec((PERIODIC,))
    steps = int(round(0.25 / dt))
    for _ in range(steps):
        values = values + dt * transport_rhs(values, bspec, sg, vg)
    return np.abs(values[0, :, 2] - profile(x - steps * dt)).sum() * dx


def test_advection_first_order():
    errs = [_advect_error(2**k) for k in (6, 7, 8)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 0.8), orders


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 2), st.integers(2, 6), st.integers(1, 3), st.data())
def test_periodic_conservation_and_monotonicity(sdim, cells, half, data):
    vdim = data.draw(st.integers(sdim, 2))
    sg = SpatialGrid((cells,) * sdim, (0.0,) * sdim, (1.0,) * sdim, (PERIODIC,) * sdim)
    vg = VelocityGrid(2.0, half, vdim)
    shape = (2, *sg.shape, *vg.shape)
    values = data.draw(hnp.arrays(float, shape, elements=st.floats(0.0, 10.0)))
    bspec = BoundarySpec((PERIODIC,) * sdim)
    rate = transport_rhs(values, bspec, sg, vg)
    total = values.sum(axis=tuple(range(1, values.ndim)))
    drift = rate.sum(axis=tuple(range(1, values.ndim)))
    assert np.all(np.abs(drift) <= 1e-12 * (np.abs(rate).sum(axis=tuple(range(1, values.ndim))) + total + 1e-300))
    new = values + cfl_max_step(vg, sg) * rate
    assert new.min() >= -1e-12
    saxes = tuple(range(1, 1 + sdim))
    assert np.all(new.max(axis=saxes) <= values.max(axis=saxes) + 1e-12)
    assert np.all(new.min(axis=saxes) >= values.min(axis=saxes) - 1e-12)


def test_mirror_symmetry(rng):
    sg = SpatialGrid((7,), (0.0,), (1.0,), (ZG,))
    vg = VelocityGrid(2.0, 3)
    values = rng.random((1, 7, vg.nodes_per_axis))
    bspec = BoundarySpec((ZG,))
    rate = transport_rhs(values, bspec, sg, vg)
    mirrored = transport_rhs(values[:, ::-1, ::-1], bspec, sg, vg)
    np.testing.assert_allclose(mirrored, rate[:, ::-1, ::-1], rtol=1e-14, atol=1e-14)
