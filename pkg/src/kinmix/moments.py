"""Discrete moments, pair mixture moments, Maxwellians and entropy.

All reductions are numpy sums along the velocity axes, so the summation
order inside one cell is fixed and independent of how cells are batched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DistributionField, MixtureParams, VelocityGrid

EXP_CLAMP = 700.0
PAIR_TEMPERATURE_TOL = 1e-12
ENTROPY_NEGATIVE_TOL = 1e-13
# Species below this fraction of the local density floor are treated as vacuum.
VACUUM_FRACTION = 1e-3


class DegenerateMomentsError(ValueError):
    """A species has nonpositive density in some cell."""

    def __init__(self, species: int, cell: tuple[int, ...], density: float):
        self.species = species
        self.cell = cell
        self.density = density
        super().__init__(f"species {species} has nonpositive density {density:g} in cell {cell}")


@dataclass
class MomentSet:
    """Per-species moments; arrays have a leading species axis.

    ``velocity`` has a trailing component axis of length ``D_v``.
    """

    density: np.ndarray
    mass_density: np.ndarray
    velocity: np.ndarray
    temperature: np.ndarray
    pressure: np.ndarray
    masses: tuple[float, ...]

    @property
    def species(self) -> int:
        return self.density.shape[0]


@dataclass
class TotalMoments:
    density: np.ndarray
    mass_density: np.ndarray
    velocity: np.ndarray
    temperature: np.ndarray
    pressure: np.ndarray


@dataclass
class MixtureMoments:
    """Pair velocities ``velocity[p, q, ..., d]`` and temperatures ``temperature[p, q, ...]``."""

    velocity: np.ndarray
    temperature: np.ndarray


def _velocity_axes(values: np.ndarray, vgrid: VelocityGrid) -> tuple[int, ...]:
    return tuple(range(values.ndim - vgrid.dim, values.ndim))


def _marginals(f: np.ndarray, vgrid: VelocityGrid) -> list[np.ndarray]:
    """1D marginals of ``f`` along each velocity axis (summed over the others)."""
    if vgrid.dim == 1:
        return [f]
    return [f.sum(axis=-1), f.sum(axis=-2)]


def _raw_moments(f: np.ndarray, vgrid: VelocityGrid):
    dv = vgrid.cell_volume
    v = vgrid.axis
    marg = _marginals(f, vgrid)
    n = marg[0].sum(axis=-1) * dv
    flux = np.stack([(mk * v).sum(axis=-1) * dv for mk in marg], axis=-1)
    return n, flux, marg


def species_moments(field: DistributionField | np.ndarray, params: MixtureParams | None = None,
                    vgrid: VelocityGrid | None = None, strict: bool = True) -> MomentSet:
    """Number density, velocity, temperature and pressure of every species.

    With ``strict`` a species with ``n <= 0`` in any cell raises
    :class:`DegenerateMomentsError`; otherwise its velocity and temperature
    are set to zero there.
    """
    if isinstance(field, DistributionField):
        values, vgrid = field.values, field.vgrid
        params = params or field.params
    else:
        values = np.asarray(field)
    masses = np.asarray(params.masses)
    n, flux, marg = _raw_moments(values, vgrid)
    bad = ~(n > 0)
    if strict and bad.any():
        idx = tuple(int(k) for k in np.argwhere(bad)[0])
        raise DegenerateMomentsError(idx[0], idx[1:], float(n[idx]))
    safe_n = np.where(bad, 1.0, n)
    u = flux / safe_n[..., None]
    u[bad] = 0.0
    v = vgrid.axis
    dv = vgrid.cell_volume
    spread = sum(((v - u[..., d, None]) ** 2 * marg[d]).sum(axis=-1) for d in range(vgrid.dim)) * dv
    shape = (-1,) + (1,) * (n.ndim - 1)
    m = masses.reshape(shape)
    T = m * spread / (vgrid.dim * safe_n)
    T[bad] = 0.0
    return MomentSet(n, m * n, u, T, n * T, tuple(params.masses))


def total_moments(moments: MomentSet, field: DistributionField | np.ndarray,
                  vgrid: VelocityGrid | None = None) -> TotalMoments:
    """Mixture density, mass-weighted velocity and temperature about that velocity."""
    if isinstance(field, DistributionField):
        values, vgrid = field.values, field.vgrid
    else:
        values = np.asarray(field)
    n = moments.density.sum(axis=0)
    rho = moments.mass_density.sum(axis=0)
    u = (moments.mass_density[..., None] * moments.velocity).sum(axis=0) / rho[..., None]
    v = vgrid.axis
    dv = vgrid.cell_volume
    spread = np.zeros_like(n)
    for p in range(moments.species):
        marg = _marginals(values[p], vgrid)
        s = sum(((v - u[..., d, None]) ** 2 * marg[d]).sum(axis=-1) for d in range(vgrid.dim))
        spread += moments.masses[p] * s * dv
    T = spread / (vgrid.dim * n)
    return TotalMoments(n, rho, u, T, moments.pressure.sum(axis=0))


def mixture_pair_moments(moments: MomentSet, params: MixtureParams) -> MixtureMoments:
    """Pair velocities and temperatures that balance momentum and energy exchange.

    Each off-diagonal pair is computed once and stored in both ``(p, q)``
    and ``(q, p)``, so the symmetry is exact.  A species whose density is
    below ``VACUUM_FRACTION * density_floor`` times the cell density borrows
    the mixture velocity and temperature so that empty cells stay finite.
    """
    P = moments.species
    nu = params.collision_frequency
    n = moments.density
    rho = moments.mass_density
    u = moments.velocity.copy()
    T = moments.temperature.copy()
    D = u.shape[-1]
    n_tot = n.sum(axis=0)
    vacuum = n <= VACUUM_FRACTION * params.density_floor * n_tot
    if vacuum.any():
        rho_tot = rho.sum(axis=0)
        u_mix = (rho[..., None] * moments.velocity).sum(axis=0) / rho_tot[..., None]
        T_mix = moments.pressure.sum(axis=0) / n_tot
        for p in range(P):
            u[p][vacuum[p]] = u_mix[vacuum[p]]
            T[p][vacuum[p]] = T_mix[vacuum[p]]

    shape = moments.density.shape[1:]
    up = np.empty((P, P, *shape, D))
    Tp = np.empty((P, P, *shape))
    for p in range(P):
        up[p, p] = u[p]
        Tp[p, p] = T[p]
        for q in range(p + 1, P):
            wp = rho[p] * nu[p, q]
            wq = rho[q] * nu[q, p]
            upq = (wp[..., None] * u[p] + wq[..., None] * u[q]) / (wp + wq)[..., None]
            ap = n[p] * nu[p, q]
            aq = n[q] * nu[q, p]
            corr = (wp * ((u[p] ** 2).sum(-1) - (upq**2).sum(-1))
                    + wq * ((u[q] ** 2).sum(-1) - (upq**2).sum(-1)))
            Tpq = (ap * T[p] + aq * T[q]) / (ap + aq) + corr / (D * (ap + aq))
            low = Tpq.min() if Tpq.size else 0.0
            if low < -PAIR_TEMPERATURE_TOL:
                raise RuntimeError(f"negative pair temperature {low:g} for species ({p}, {q})")
            up[p, q] = up[q, p] = upq
            Tp[p, q] = Tp[q, p] = Tpq
    return MixtureMoments(up, Tp)


def _gaussian_factors(u: np.ndarray, T: np.ndarray, m: float, vgrid: VelocityGrid):
    """Per-axis 1D Gaussian factors ``exp(-m (v_d - u_d)^2 / 2T)`` (clamped)."""
    v = vgrid.axis
    scale = m / (2.0 * T)
    out = []
    for d in range(vgrid.dim):
        z = scale[..., None] * (v - u[..., d, None]) ** 2
        out.append(np.exp(-np.minimum(z, EXP_CLAMP)))
    return out


def _combine(factors: list[np.ndarray]) -> np.ndarray:
    if len(factors) == 1:
        return factors[0]
    return factors[0][..., :, None] * factors[1][..., None, :]


def _as_velocity(u, shape: tuple[int, ...], D: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if D == 1 and u.shape == shape:
        u = u[..., None]
    return np.broadcast_to(u, shape + (D,))


def maxwellian_eval(n, u, T, m: float, vgrid: VelocityGrid) -> np.ndarray:
    """Pointwise Maxwellian ``n (m / 2 pi T)^{D/2} exp(-m |u - v|^2 / 2T)`` on the nodes.

    ``n`` and ``T`` may be arrays of any common shape ``S``; ``u`` then has
    shape ``S + (D_v,)`` (a trailing axis may be omitted when ``D_v = 1``).
    The result has shape ``S + vgrid.shape``.
    """
    n = np.asarray(n, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(~(T > 0)):
        raise ValueError("Maxwellian temperature must be positive")
    D = vgrid.dim
    n, T = np.broadcast_arrays(n, T)
    u = _as_velocity(u, n.shape, D)
    amp = n * (m / (2.0 * np.pi * T)) ** (D / 2.0)
    g = _combine(_gaussian_factors(u, T, m, vgrid))
    return amp.reshape(amp.shape + (1,) * D) * g


def _moment_correction(factors, n, u, T, m, vgrid) -> np.ndarray:
    """Multiply ``M`` by ``c . (1, v, |v|^2)`` so its discrete n, n u, energy match the targets."""
    D = vgrid.dim
    v = vgrid.axis
    dv = vgrid.spacing
    # Power sums of each 1D factor: S[d][k] = sum_j g_d(v_j) v_j^k dv
    S = [[(g * v**k).sum(axis=-1) * dv for k in range(5)] for g in factors]

    def mono(powers):
        out = np.ones_like(n)
        for d in range(D):
            out = out * S[d][powers[d]]
        return out

    def e(d, k):
        p = [0] * D
        p[d] = k
        return p

    basis = [[0] * D] + [e(d, 1) for d in range(D)] + ["sq"]
    nb = len(basis)

    def moment(a, b):
        # sum M * phi_a * phi_b, with phi = monomial or |v|^2
        if a == "sq" and b == "sq":
            tot = 0
            for d1 in range(D):
                for d2 in range(D):
                    p = [0] * D
                    p[d1] += 2
                    p[d2] += 2
                    tot = tot + mono(p)
            return tot
        if a == "sq" or b == "sq":
            other = b if a == "sq" else a
            tot = 0
            for d in range(D):
                p = list(other)
                p[d] += 2
                tot = tot + mono(p)
            return tot
        return mono([x + y for x, y in zip(a, b)])

    shape = n.shape
    G = np.empty(shape + (nb, nb))
    for a in range(nb):
        for b in range(a, nb):
            G[..., a, b] = G[..., b, a] = moment(basis[a], basis[b])
    rhs = np.empty(shape + (nb,))
    rhs[..., 0] = n
    rhs[..., 1:1 + D] = n[..., None] * u
    rhs[..., -1] = n * (D * T / m + (u**2).sum(-1))
    ok = n > 0
    c = np.zeros(shape + (nb,))
    if ok.any():
        try:
            c[ok] = np.linalg.solve(G[ok], rhs[ok][..., None])[..., 0]
        except np.linalg.LinAlgError:
            # a Gaussian narrower than the grid spacing makes G singular
            c[ok] = np.stack([np.linalg.lstsq(g, r, rcond=None)[0] for g, r in zip(G[ok], rhs[ok])])
    # c0 + c.v + c_sq |v|^2 splits into one 1D polynomial per axis, so the
    # corrected Maxwellian is a sum of D separable products
    coef = [c[..., k, None] for k in range(nb)]
    if D == 1:
        return factors[0] * (coef[0] + coef[1] * v + coef[2] * v**2)
    ax = factors[0] * (coef[0] + coef[1] * v + coef[3] * v**2)
    ay = factors[1] * (coef[2] * v + coef[3] * v**2)
    return _combine([ax, factors[1]]) + _combine([factors[0], ay])


def discrete_maxwellian(n, u, T, m: float, vgrid: VelocityGrid, normalize: bool | str = True) -> np.ndarray:
    """Maxwellian on the grid with an optional discrete-conservation correction.

    ``normalize`` is ``True``/``"density"`` (rescale so the discrete density
    equals ``n``), ``False``/``"none"`` (plain pointwise evaluation) or
    ``"moments"`` (density, momentum and energy all matched exactly by a
    quadratic polynomial factor).
    """
    mode = {True: "density", False: "none"}.get(normalize, normalize)
    if mode not in ("none", "density", "moments"):
        raise ValueError(f"unknown normalization {normalize!r}")
    n = np.asarray(n, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(~(T > 0)):
        raise ValueError("Maxwellian temperature must be positive")
    D = vgrid.dim
    n, T = np.broadcast_arrays(n, T)
    u = _as_velocity(u, n.shape, D)
    factors = _gaussian_factors(u, T, m, vgrid)
    amp = n * (m / (2.0 * np.pi * T)) ** (D / 2.0)
    if mode == "none":
        return amp.reshape(amp.shape + (1,) * D) * _combine(factors)
    if mode == "moments":
        return _moment_correction(factors, n, u, T, m, vgrid)
    raw = np.ones_like(n)
    floor = np.exp(-EXP_CLAMP) * (1 + 1e-12)
    vanished = np.zeros(n.shape, dtype=bool)
    for g in factors:
        raw = raw * g.sum(axis=-1) * vgrid.spacing
        # every node at the clamp floor: the Gaussian fits between the nodes
        vanished |= g.max(axis=-1) <= floor
    if np.any((vanished | (raw <= 0)) & (n != 0)):
        raise ValueError("discrete Maxwellian vanishes on the grid; the velocity grid is too coarse or narrow")
    scale = np.where(n != 0, n / np.where(raw > 0, raw, 1.0), 0.0)
    return scale.reshape(scale.shape + (1,) * D) * _combine(factors)


def entropy(field: DistributionField | np.ndarray, vgrid: VelocityGrid | None = None,
            strict: bool = True) -> np.ndarray:
    """Per-cell total entropy ``sum_p sum_j f log f dv``; zero entries contribute zero.

    With ``strict`` negative values below ``-1e-13`` raise; otherwise they
    are ignored.
    """
    if isinstance(field, DistributionField):
        values, vgrid = field.values, field.vgrid
    else:
        values = np.asarray(field)
    low = values.min()
    if strict and low < -ENTROPY_NEGATIVE_TOL:
        raise ValueError(f"entropy undefined for negative distribution value {low:g}")
    pos = np.where(values > 0, values, 1.0)
    integrand = np.where(values > 0, values * np.log(pos), 0.0)
    axes = _velocity_axes(values, vgrid)
    return integrand.sum(axis=axes).sum(axis=0) * vgrid.cell_volume
