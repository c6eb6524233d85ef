"""Discrete multispecies BGK collision operator (without the 1/epsilon factor)."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .grid import DistributionField, MixtureParams, VelocityGrid
from .moments import discrete_maxwellian, mixture_pair_moments, species_moments, total_moments


def _bgk_block(values: np.ndarray, vgrid: VelocityGrid, params: MixtureParams, mode: str) -> np.ndarray:
    moments = species_moments(values, params, vgrid)
    mix = mixture_pair_moments(moments, params)
    nu = params.collision_frequency
    out = np.empty_like(values)
    for p in range(params.species):
        acc = -nu[p].sum() * values[p]
        for q in range(params.species):
            # T_pq >= 0 is guaranteed up to roundoff; keep the Gaussian well defined
            T = np.maximum(mix.temperature[p, q], 1e-300)
            acc += nu[p, q] * discrete_maxwellian(moments.density[p], mix.velocity[p, q], T,
                                                  params.masses[p], vgrid, mode)
        out[p] = acc
    return out


def bgk_rhs(field: DistributionField | np.ndarray, params: MixtureParams | None = None,
            vgrid: VelocityGrid | None = None, threads: int = 1) -> np.ndarray:
    """``Q_p = sum_q nu_pq (M_pq - f_p)`` for every species, cell and velocity node.

    The operator is local in space, so with ``threads > 1`` the cells are
    split into contiguous slabs evaluated concurrently; each cell's
    arithmetic is unchanged by the split.
    """
    if isinstance(field, DistributionField):
        values, vgrid = field.values, field.vgrid
        params = params or field.params
    else:
        values = np.asarray(field, dtype=float)
    mode = params.maxwellian_correction
    P = values.shape[0]
    vshape = values.shape[values.ndim - vgrid.dim:]
    sshape = values.shape[1:values.ndim - vgrid.dim]
    if threads <= 1 or int(np.prod(sshape)) < 2 * threads:
        return _bgk_block(values, vgrid, params, mode)
    flat = values.reshape((P, -1) + vshape)
    bounds = np.linspace(0, flat.shape[1], threads + 1).astype(int)
    out = np.empty_like(flat)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        jobs = {pool.submit(_bgk_block, flat[:, a:b], vgrid, params, mode): (a, b)
                for a, b in zip(bounds[:-1], bounds[1:]) if b > a}
        for job, (a, b) in jobs.items():
            out[:, a:b] = job.result()
    return out.reshape(values.shape)


def equilibrium_projection(values: np.ndarray, vgrid: VelocityGrid, params: MixtureParams) -> np.ndarray:
    """Replace each species by the Maxwellian with its own density and the mixture velocity and temperature.

    These are the only equilibria of the multispecies operator; the map
    conserves species mass, total momentum and total energy up to the
    Maxwellian correction mode.
    """
    moments = species_moments(values, params, vgrid)
    tot = total_moments(moments, values, vgrid)
    out = np.empty_like(values)
    for p, m in enumerate(params.masses):
        out[p] = discrete_maxwellian(moments.density[p], tot.velocity, tot.temperature, m, vgrid,
                                     params.maxwellian_correction)
    return out
