"""Initial data for the named scenarios.

Every builder returns a :class:`DistributionField` of discrete
Maxwellians.  Species absent from a region are seeded with the fraction
``density_floor`` of the local density, and the two species share the
temperature that gives the prescribed total pressure.
"""
from __future__ import annotations

import numpy as np

from .config import ConfigError, ScenarioConfig
from .grid import DistributionField
from .moments import discrete_maxwellian, species_moments, total_moments


def maxwellian_field(config: ScenarioConfig, densities, velocities, temperatures) -> DistributionField:
    """Field of per-species Maxwellians from number densities, velocities ``[..., D_v]`` and temperatures."""
    sg, vg, params = config.spatial_grid(), config.velocity_grid(), config.mixture_params()
    mode = params.maxwellian_correction
    rows = []
    for p, m in enumerate(params.masses):
        n = np.broadcast_to(np.asarray(densities[p], dtype=float), sg.shape)
        T = np.broadcast_to(np.asarray(temperatures[p], dtype=float), sg.shape)
        u = np.broadcast_to(np.asarray(velocities[p], dtype=float), sg.shape + (vg.dim,))
        rows.append(discrete_maxwellian(n, u, T, m, vg, mode))
    # the moment correction can leave roundoff-sized negative tails on coarse grids;
    # initial data must be nonnegative
    return DistributionField(np.maximum(np.stack(rows), 0.0), vg, sg, params)


def _require(config: ScenarioConfig, sdim: int, vdim: int, species: int = 2) -> None:
    sg, vg = config.spatial_grid(), config.velocity_grid()
    if sg.dim != sdim or vg.dim != vdim:
        raise ConfigError(f"scenario {config.scenario!r} needs {sdim}D space and {vdim}D velocity, "
                          f"got {sg.dim}D and {vg.dim}D")
    if len(config.physical.masses) != species:
        raise ConfigError(f"scenario {config.scenario!r} needs {species} species")


def _two_fluid(config, rho1, rho2, u, pressure):
    """Species fields from mass densities, a shared velocity and total pressure."""
    m1, m2 = config.physical.masses
    n1, n2 = rho1 / m1, rho2 / m2
    T = pressure / (n1 + n2)
    return maxwellian_field(config, [n1, n2], [u, u], [T, T])


def build_sod(config: ScenarioConfig) -> DistributionField:
    """Two-species shock tube: species 1 left of ``split``, species 2 right of it."""
    _require(config, 1, 1)
    s = config.setup
    d = config.physical.density_floor
    x = config.spatial_grid().centers(0)
    (rl, vl, pl), (rr, vr, pr) = s["left"], s["right"]
    left = x <= s["split"]
    rho = np.where(left, rl, rr)
    frac1 = np.where(left, 1 - d, d)
    u = np.where(left, vl, vr)[:, None]
    return _two_fluid(config, frac1 * rho, (1 - frac1) * rho, u, np.where(left, pl, pr))


def build_shock_bubble(config: ScenarioConfig) -> DistributionField:
    """Light-gas normal shock running into a Gaussian bubble of heavy gas.

    Behind the shock both species carry the shocked temperature; elsewhere
    the common temperature ``1 / (n_1 + n_2)`` gives unit total pressure.
    """
    _require(config, 2, 2)
    s = config.setup
    d = config.physical.density_floor
    m1, m2 = config.physical.masses
    X, Y = config.spatial_grid().mesh()
    x0, y0 = s["bubble_center"]
    rho_s, u_s, T_s = s["shocked"]
    rho_q, u_q, T_q = s["quiescent"]
    behind = X <= s["shock_position"]
    rho1 = np.where(behind, rho_s, rho_q)
    rho2 = np.exp(-s["bubble_sharpness"] * ((X - x0) ** 2 + (Y - y0) ** 2)) + d
    n1, n2 = rho1 / m1, rho2 / m2
    # the quiescent light-gas pressure is kept as the total pressure around the bubble
    T = np.where(behind, T_s, (rho_q / m1) * T_q / (n1 + n2))
    u1 = np.zeros(X.shape + (2,))
    u1[..., 0] = np.where(behind, u_s, u_q)
    u2 = np.zeros(X.shape + (2,))
    return maxwellian_field(config, [n1, n2], [u1, u2], [T, T])


def build_kelvin_helmholtz(config: ScenarioConfig) -> DistributionField:
    """Light gas moving right above ``y = 0``, heavy gas moving left below, unit pressure."""
    _require(config, 2, 2)
    sg = config.spatial_grid()
    if sg.boundary[0][0] != "periodic":
        raise ConfigError("kelvin_helmholtz needs periodic boundaries along x")
    s = config.setup
    d = config.physical.density_floor
    X, Y = sg.mesh()
    top = Y >= 0
    r1, r2 = s["densities"]
    rho1 = np.where(top, r1, d * r2)
    rho2 = np.where(top, d * r1, r2)
    u = np.zeros(X.shape + (2,))
    u[..., 0] = np.where(top, s["shear_velocity"], -s["shear_velocity"])
    u[..., 1] = s["amplitude"] * np.sin(s["wavenumber"] * X)
    return _two_fluid(config, rho1, rho2, u, np.ones(X.shape))


def build_richtmyer_meshkov(config: ScenarioConfig) -> DistributionField:
    """Light-gas shock approaching a sinusoidally perturbed interface with a heavy gas.

    The interface is ``x = -amplitude sin(frequency y)``.  All horizontal
    velocities are shifted by ``velocity_shift`` before the Maxwellians are
    built.
    """
    _require(config, 2, 2)
    s = config.setup
    d = config.physical.density_floor
    X, Y = config.spatial_grid().mesh()
    interface = -s["amplitude"] * np.sin(s["frequency"] * Y)
    light = X <= interface
    behind = X <= s["shock_position"]
    rho_s, u_s, p_s = s["shocked"]
    rho_q, u_q, p_q = s["quiescent"]
    rho_light = np.where(behind, rho_s, rho_q)
    p_light = np.where(behind, p_s, p_q)
    rho1 = np.where(light, rho_light, d * s["heavy_density"])
    rho2 = np.where(light, d * rho_light, s["heavy_density"])
    P = np.where(light, p_light, s["heavy_pressure"])
    u = np.zeros(X.shape + (2,))
    u[..., 0] = np.where(light & behind, u_s, np.where(light, u_q, 0.0)) + s["velocity_shift"]
    return _two_fluid(config, rho1, rho2, u, P)


def _uniform_states(config: ScenarioConfig) -> DistributionField:
    s = config.setup
    sg, vg = config.spatial_grid(), config.velocity_grid()
    P = len(config.physical.masses)
    dens, vels, temps = s.get("densities"), s.get("velocities"), s.get("temperatures")
    if dens is None or vels is None or temps is None or not len(dens) == len(vels) == len(temps) == P:
        raise ConfigError("setup needs densities, velocities and temperatures for every species")
    u = []
    for v in vels:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        full = np.zeros(vg.dim)
        full[:v.size] = v
        u.append(np.broadcast_to(full, sg.shape + (vg.dim,)))
    return maxwellian_field(config, dens, u, temps)


def build_homogeneous_relaxation(config: ScenarioConfig) -> DistributionField:
    """Spatially uniform species with their own velocity and temperature."""
    return _uniform_states(config)


BUILDERS = {
    "sod": build_sod,
    "shock_bubble": build_shock_bubble,
    "kelvin_helmholtz": build_kelvin_helmholtz,
    "richtmyer_meshkov": build_richtmyer_meshkov,
    "homogeneous_relaxation": build_homogeneous_relaxation,
    "custom": _uniform_states,
}


def build_initial(config: ScenarioConfig) -> DistributionField:
    return BUILDERS[config.scenario](config)


def linearization_field(config: ScenarioConfig) -> tuple[DistributionField, dict]:
    """Uniform field carrying the domain-averaged species moments of the initial data.

    Species densities, the mixture velocity and the mixture temperature
    are averaged (through momentum and energy, so the state is the one
    the collisions relax to).  For the shock tube this is the mean of the
    left and right states.  Returns the field and a descriptor.
    """
    f0 = build_initial(config)
    params, vg = f0.params, f0.vgrid
    mom = species_moments(f0.values, params, vg)
    tot = total_moments(mom, f0.values, vg)
    saxes = tuple(range(mom.density.ndim - 1))
    n = mom.density.mean(axis=tuple(a + 1 for a in saxes))
    rho = tot.mass_density
    u = (rho[..., None] * tot.velocity).mean(axis=saxes) / rho.mean()
    # total energy density: (D/2) n T + rho |u|^2 / 2
    D = vg.dim
    e = (0.5 * D * tot.density * tot.temperature + 0.5 * rho * (tot.velocity**2).sum(-1)).mean()
    T = (e - 0.5 * rho.mean() * (u**2).sum()) / (0.5 * D * n.sum())
    shape = f0.sgrid.shape
    field = maxwellian_field(config, [np.full(shape, k) for k in n],
                             [np.broadcast_to(u, shape + (D,))] * len(n), [np.full(shape, T)] * len(n))
    state = {"densities": n.tolist(), "velocity": u.tolist(), "temperature": float(T),
             "source": "domain-averaged initial moments"}
    return field, state
