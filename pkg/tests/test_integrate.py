import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinmix import (BlowupError, DistributionField, IntegratorLadder, MixtureParams, SemiDiscreteOperator,
                    SpatialGrid, VelocityGrid, efficiency_factor, forward_euler_step, pfe_step, run_simulation,
                    species_moments, tpfe_step)
from kinmix.config import default_config
from kinmix.integrate import conserved_totals
from kinmix.scenarios import build_initial

from conftest import uniform_field


def scalar(lam):
    return lambda y: lam * y


def test_forward_euler_examples():
    y = np.array([2.0])
    np.testing.assert_array_equal(forward_euler_step(y, 0.3, lambda f: np.zeros_like(f)), y)
    assert forward_euler_step(y, 0.1, scalar(-1.0))[0] == pytest.approx(1.8)


def test_forward_euler_keeps_homogeneous_maxwellian(one_cell):
    vg = VelocityGrid.from_spacing(0.25, 8.0)
    params = MixtureParams((1.0, 2.0), 1e-3)
    f = uniform_field(vg, one_cell, params, (1.0, 0.5), ([0.1], [0.1]), (1.0, 1.0))
    op = SemiDiscreteOperator(one_cell, vg, params)
    np.testing.assert_allclose(forward_euler_step(f.values, 5e-4, op), f.values, atol=1e-9)


def test_forward_euler_blowup():
    with pytest.raises(BlowupError):
        forward_euler_step(np.array([1.0]), 1.0, lambda f: np.array([np.inf]))


def test_pfe_formula():
    inner = lambda y: forward_euler_step(y, 0.1, scalar(-1.0))
    out = pfe_step(np.array([1.0]), 0.4, 0.1, 1, inner)
    assert out[0] == pytest.approx(0.63, rel=1e-14)


def test_pfe_degenerate_is_composition():
    inner = lambda y: forward_euler_step(y, 0.1, scalar(-3.0))
    y = np.array([1.0, -2.0])
    comp = y
    for _ in range(4):
        comp = inner(comp)
    np.testing.assert_array_equal(pfe_step(y, 0.4, 0.1, 3, inner), comp)
    with pytest.raises(ValueError):
        pfe_step(y, 0.3, 0.1, 3, inner)


@pytest.mark.parametrize("z, stable", [(-0.99, True), (-0.05, True), (-0.02, True), (-0.4, False)])
def test_pfe_scalar_stability(z, stable):
    # dt_in = 1, K = 2, M = 20: fast disk D(-1, 0.224), slow disk D(-0.05, 0.05)
    inner = lambda y: y + z * y
    y = np.array([1.0])
    for _ in range(100):
        y = pfe_step(y, 23.0, 1.0, 2, inner)
    assert (abs(y[0]) <= 1.0) == stable


def test_single_level_tpfe_is_pfe(rng):
    A = rng.normal(size=(5, 5)) - 5 * np.eye(5)
    op = lambda y: A @ y
    y = rng.normal(size=5)
    ladder = IntegratorLadder((0.01, 0.07), (2,))
    inner = lambda g: forward_euler_step(g, 0.01, op)
    np.testing.assert_array_equal(tpfe_step(y, ladder, op), pfe_step(y, 0.07, 0.01, 2, inner))


def test_degenerate_two_level_is_euler_composition(rng):
    A = rng.normal(size=(4, 4))
    op = lambda y: A @ y
    y = rng.normal(size=4)
    ladder = IntegratorLadder((2.0**-7, 2.0**-6, 7 * 2.0**-6), (1, 6))
    assert ladder.extrapolation_factors == (0.0, 0.0)
    comp = y
    for _ in range(14):
        comp = forward_euler_step(comp, 2.0**-7, op)
    np.testing.assert_array_equal(tpfe_step(y, ladder, op), comp)


def test_knudsen_scaled_ladder():
    ladder = IntegratorLadder.knudsen_scaled(1e-6, 2.0**-8 / 16)
    assert ladder.steps[:2] == (5e-7, 2e-6)
    assert ladder.extrapolation_factors[0] == pytest.approx(2.0)
    assert ladder.inner_evaluations() == 14


def test_efficiency_factor():
    assert efficiency_factor(IntegratorLadder((1.0, 4.0), (1,))) == pytest.approx(2.0)
    assert efficiency_factor(IntegratorLadder.direct(0.1)) == 1.0
    assert efficiency_factor(IntegratorLadder.knudsen_scaled(1e-7, 2.0**-8 / 16)) == pytest.approx(348.77, abs=0.01)
    assert efficiency_factor(IntegratorLadder.knudsen_scaled(1e-6, 2.0**-8 / 16)) == pytest.approx(34.88, abs=0.01)


def test_ladder_validation():
    with pytest.raises(ValueError):
        IntegratorLadder((1.0, 1.5), (1,))
    with pytest.raises(ValueError):
        IntegratorLadder((1.0, 4.0), ())
    with pytest.raises(ValueError):
        IntegratorLadder((1.0, 2.0, 4.0, 8.0), (0, 0, 0))
    with pytest.raises(ValueError):
        IntegratorLadder((-1.0,))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-3, 3), st.floats(-3, 3), st.integers(1, 3), st.integers(1, 4))
def test_steps_are_linear(seed, a, b, K0, K1):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(6, 6)) - 4 * np.eye(6)
    c = rng.normal(size=6)
    op = lambda y: A @ y
    f, g = rng.normal(size=6), rng.normal(size=6)
    ladder = IntegratorLadder((0.01, 0.05 * (K0 + 1), 0.3 * (K0 + 1) * (K1 + 1)), (K0, K1))
    step = lambda y: tpfe_step(y, ladder, op)
    lhs = step(a * f + b * g)
    rhs = a * step(f) + b * step(g)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (1 + np.abs(rhs).max()))
    # an affine operator keeps affine combinations
    aff = lambda y: A @ y + c
    step = lambda y: tpfe_step(y, ladder, aff)
    lhs = step(a * f + (1 - a) * g)
    rhs = a * step(f) + (1 - a) * step(g)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (1 + np.abs(rhs).max()))


def _periodic_mixture(eps=1e-4, mode="density"):
    sg = SpatialGrid((12,), (0.0,), (1.0,), (("periodic", "periodic"),))
    vg = VelocityGrid.from_spacing(0.5, 8.0)
    params = MixtureParams((1.0, 2.0), eps, maxwellian_correction=mode)
    x = sg.centers(0)
    rows = []
    from kinmix import discrete_maxwellian
    for p, m in enumerate(params.masses):
        n = 1.0 + 0.3 * np.sin(2 * np.pi * (x + 0.2 * p))
        u = 0.2 * np.cos(2 * np.pi * x)
        T = 1.0 + 0.2 * np.cos(4 * np.pi * x)
        rows.append(discrete_maxwellian(n, u, T, m, vg, mode))
    return DistributionField(np.stack(rows), vg, sg, params)


def test_tpfe_conserves_species_mass():
    field = _periodic_mixture()
    op = SemiDiscreteOperator(field.sgrid, field.vgrid, field.params)
    ladder = IntegratorLadder.knudsen_scaled(1e-4, 0.005)
    m0, _, _ = conserved_totals(field.values, field.vgrid, field.sgrid, field.params)
    f = field.values
    for _ in range(5):
        f = tpfe_step(f, ladder, op)
    m1, _, _ = conserved_totals(f, field.vgrid, field.sgrid, field.params)
    np.testing.assert_allclose(m1, m0, rtol=1e-11)


def test_run_simulation_zero_operator():
    field = _periodic_mixture()
    seen = []
    res = run_simulation(field, lambda y: np.zeros_like(y), IntegratorLadder.direct(0.03), 0.0, 0.1,
                         cadence=None, sinks=[seen.append], diagnostics=False)
    np.testing.assert_array_equal(res.final.values, field.values)
    assert [s.time for s in seen] == [0.0, 0.1]


def test_run_simulation_lands_on_end_time():
    field = _periodic_mixture()
    op = SemiDiscreteOperator(field.sgrid, field.vgrid, field.params)
    seen = []
    res = run_simulation(field, op, IntegratorLadder.knudsen_scaled(1e-4, 0.0043), 0.01, 0.031, cadence=0.01,
                         sinks=[seen.append])
    times = [s.time for s in seen]
    assert abs(times[-1] - 0.031) <= 1e-12 * 0.031
    assert res.diagnostics[-1].time == times[-1]
    assert times[0] == 0.01 and len(times) >= 3
    assert np.all(np.diff(times) > 0)
    mass = np.array([d.mass for d in res.diagnostics])
    np.testing.assert_allclose(mass, np.broadcast_to(mass[0], mass.shape), rtol=1e-11)


def test_blowup_flushes_last_state():
    field = _periodic_mixture()
    calls = {"n": 0}

    def bad(y):
        calls["n"] += 1
        return np.full_like(y, np.nan) if calls["n"] > 3 else np.zeros_like(y)

    seen = []
    with pytest.raises(BlowupError) as info:
        run_simulation(field, bad, IntegratorLadder.direct(0.01), 0.0, 1.0, sinks=[seen.append], diagnostics=False)
    assert info.value.step == 3
    assert seen[-1].time == pytest.approx(0.03)
    assert np.all(np.isfinite(seen[-1].field.values))


def test_relaxation_reaches_mixture_velocity(one_cell):
    vg = VelocityGrid.from_spacing(0.25, 10.0)
    params = MixtureParams((1.0, 2.0), 1.0)
    f0 = uniform_field(vg, one_cell, params, (1.0, 0.5), ([0.5], [-0.5]), (1.0, 2.0))
    op = SemiDiscreteOperator(one_cell, vg, params)
    res = run_simulation(f0, op, IntegratorLadder.direct(0.05), 0.0, 20.0, diagnostics=False)
    m0 = species_moments(f0)
    u_mix = (m0.mass_density[:, 0] * m0.velocity[:, 0, 0]).sum() / m0.mass_density[:, 0].sum()
    mom = species_moments(res.final)
    np.testing.assert_allclose(mom.velocity[:, 0, 0], u_mix, atol=1e-6)
    assert abs(mom.velocity[0, 0, 0] - mom.velocity[1, 0, 0]) < 1e-8


@pytest.mark.slow
def test_direct_and_telescopic_sod_agree():
    cfg = default_config("sod")
    cfg.grid.cells = (64,)
    cfg.grid.velocity_spacing = 0.25
    cfg.grid.velocity_half_width = 10.0
    cfg.physical.knudsen = 1e-5
    cfg = cfg.validate()
    field = build_initial(cfg)
    op = SemiDiscreteOperator(cfg.spatial_grid(), cfg.velocity_grid(), cfg.mixture_params())
    dx = cfg.spatial_grid().spacing[0]
    t_end = 0.02
    direct = run_simulation(field, op, IntegratorLadder.direct(5e-6), 0.0, t_end, diagnostics=False).final
    tele = run_simulation(field, op, IntegratorLadder.knudsen_scaled(1e-5, dx / 16), 0.0, t_end,
                          diagnostics=False).final
    rho = lambda f: species_moments(f, strict=False).mass_density.sum(axis=0)
    l1 = np.abs(rho(direct) - rho(tele)).sum() * dx
    assert l1 < 5e-3
