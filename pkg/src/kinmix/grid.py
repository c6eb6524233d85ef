"""Phase-space grids, mixture parameters and the distribution container.

State layout
------------
A multispecies distribution is stored as one C-contiguous float64 array of
shape ``(P, *spatial_shape, *velocity_shape)``: species-major, then space,
then velocity, each block row-major.  Velocity index ``j`` along an axis runs
over ``-N_v .. N_v`` and is stored at position ``j + N_v``.  Raw dumps and
:func:`flatten_index` follow the same convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

BOUNDARY_KINDS = ("periodic", "zero_gradient", "influx")


@dataclass(frozen=True)
class VelocityGrid:
    """Cartesian velocity grid on ``(-L_v, L_v)^D_v`` with ``2 N_v + 1`` nodes per axis."""

    half_width: float
    half_count: int
    dim: int = 1

    def __post_init__(self):
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ValueError(f"velocity half-width must be positive, got {self.half_width}")
        if int(self.half_count) != self.half_count or self.half_count < 1:
            raise ValueError(f"velocity half-count must be an integer >= 1, got {self.half_count}")
        if self.dim not in (1, 2):
            raise ValueError(f"velocity dimension must be 1 or 2, got {self.dim}")
        object.__setattr__(self, "half_count", int(self.half_count))

    @classmethod
    def from_spacing(cls, spacing: float, half_width: float, dim: int = 1) -> "VelocityGrid":
        """Grid with exactly ``spacing`` whose domain covers at least ``(-half_width, half_width)``.

        The node count must be odd, so the returned half-width is
        ``(2 N_v + 1) * spacing / 2 >= half_width``.
        """
        if spacing <= 0 or half_width <= 0:
            raise ValueError("spacing and half_width must be positive")
        n = math.ceil((2.0 * half_width / spacing - 1.0) / 2.0 - 1e-9)
        n = max(n, 1)
        return cls((2 * n + 1) * spacing / 2.0, n, dim)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (2 * self.half_count + 1)

    @property
    def nodes_per_axis(self) -> int:
        return 2 * self.half_count + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.nodes_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def axis(self) -> np.ndarray:
        j = np.arange(-self.half_count, self.half_count + 1)
        return j * self.spacing

    @property
    def vmax(self) -> float:
        return self.half_count * self.spacing

    def component(self, d: int) -> np.ndarray:
        """Velocity component ``d`` of every node, shaped ``self.shape``."""
        shape = [1] * self.dim
        shape[d] = self.nodes_per_axis
        return np.broadcast_to(self.axis.reshape(shape), self.shape)

    def speed_squared(self) -> np.ndarray:
        return sum(self.component(d) ** 2 for d in range(self.dim))


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-centred grid on a box ``prod_d (lower_d, upper_d)``.

    ``boundary`` holds one ``(left, right)`` pair of boundary kinds per
    dimension; an influx face also needs a state in the transport
    :class:`~kinmix.transport.BoundarySpec`.
    """

    cells: tuple[int, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    boundary: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        lower = tuple(float(a) for a in self.lower)
        upper = tuple(float(b) for b in self.upper)
        if not 1 <= len(cells) <= 2 or len(lower) != len(cells) or len(upper) != len(cells):
            raise ValueError("spatial grid needs 1 or 2 dimensions with matching bounds")
        if any(c < 1 for c in cells):
            raise ValueError(f"cell counts must be >= 1, got {cells}")
        if any(not b > a for a, b in zip(lower, upper)):
            raise ValueError(f"empty spatial extent: lower={lower}, upper={upper}")
        bnd = self.boundary or tuple(("zero_gradient", "zero_gradient") for _ in cells)
        bnd = tuple(tuple(pair) for pair in bnd)
        if len(bnd) != len(cells):
            raise ValueError("one boundary pair per spatial dimension is required")
        for left, right in bnd:
            if left not in BOUNDARY_KINDS or right not in BOUNDARY_KINDS:
                raise ValueError(f"unknown boundary kind in {bnd}")
            if (left == "periodic") != (right == "periodic"):
                raise ValueError("periodic faces must come in matched pairs")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "boundary", bnd)

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def extent(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / n for e, n in zip(self.extent, self.cells))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def centers(self, d: int) -> np.ndarray:
        dx = self.spacing[d]
        return self.lower[d] + (np.arange(self.cells[d]) + 0.5) * dx

    def mesh(self) -> list[np.ndarray]:
        """Cell-centre coordinates, one array of shape ``self.shape`` per dimension."""
        return np.meshgrid(*[self.centers(d) for d in range(self.dim)], indexing="ij")

    def with_boundary(self, boundary) -> "SpatialGrid":
        return SpatialGrid(self.cells, self.lower, self.upper, boundary)


@dataclass(frozen=True)
class MixtureParams:
    """Physical constants of a ``P``-species BGK mixture.

    ``collision_frequency`` is the full ``P x P`` matrix ``nu[p, q]``;
    ``maxwellian_correction`` selects how pair Maxwellians are corrected on
    the discrete grid: ``"none"`` (pointwise evaluation), ``"density"``
    (rescaled to the exact discrete density) or ``"moments"`` (density,
    momentum and energy matched exactly).
    """

    masses: tuple[float, ...]
    knudsen: float
    collision_frequency: np.ndarray = None
    density_floor: float = 1e-5
    maxwellian_correction: str = "density"

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        if not masses or any(not m > 0 for m in masses):
            raise ValueError(f"masses must be positive, got {masses}")
        if not self.knudsen > 0:
            raise ValueError(f"Knudsen number must be positive, got {self.knudsen}")
        P = len(masses)
        nu = self.collision_frequency
        if nu is None:
            nu = np.ones((P, P))
        else:
            nu = np.asarray(nu, dtype=float)
            if nu.ndim == 0:
                nu = np.full((P, P), float(nu))
        if nu.shape != (P, P) or not np.all(nu > 0):
            raise ValueError("collision frequencies must be a positive PxP matrix")
        if self.maxwellian_correction not in ("none", "density", "moments"):
            raise ValueError(f"unknown Maxwellian correction {self.maxwellian_correction!r}")
        nu = nu.copy()
        nu.setflags(write=False)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "collision_frequency", nu)

    @property
    def species(self) -> int:
        return len(self.masses)


@dataclass
class DistributionField:
    """Discrete distribution ``f[p, i..., j...]`` together with its grids."""

    values: np.ndarray
    vgrid: VelocityGrid
    sgrid: SpatialGrid
    params: MixtureParams = field(repr=False, default=None)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        expected = shape_of(self.species, self.sgrid, self.vgrid)
        if self.values.shape != expected:
            raise ValueError(f"field shape {self.values.shape} does not match grids {expected}")

    @property
    def species(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "DistributionField":
        return DistributionField(self.values.copy(), self.vgrid, self.sgrid, self.params)

    def with_values(self, values: np.ndarray) -> "DistributionField":
        return DistributionField(values, self.vgrid, self.sgrid, self.params)


def shape_of(species: int, sgrid: SpatialGrid, vgrid: VelocityGrid) -> tuple[int, ...]:
    return (species, *sgrid.shape, *vgrid.shape)


def build_velocity_grid(L_v: float, N_v: int, D_v: int = 1) -> VelocityGrid:
    return VelocityGrid(L_v, N_v, D_v)


def flatten_index(p: int, i: Sequence[int] | int, j: Sequence[int] | int, species: int,
                  sgrid: SpatialGrid, vgrid: VelocityGrid) -> int:
    """Linear offset of ``f[p, i, j]`` in the flat state vector.

    ``i`` holds zero-based cell indices; ``j`` holds signed velocity indices
    in ``-N_v .. N_v``.
    """
    i = (i,) if np.isscalar(i) else tuple(i)
    j = (j,) if np.isscalar(j) else tuple(j)
    if len(i) != sgrid.dim or len(j) != vgrid.dim:
        raise ValueError("index dimensionality does not match the grids")
    if not 0 <= p < species:
        raise ValueError(f"species index {p} out of range")
    for ik, n in zip(i, sgrid.shape):
        if not 0 <= ik < n:
            raise ValueError(f"cell index {i} out of range for {sgrid.shape}")
    for jk in j:
        if not -vgrid.half_count <= jk <= vgrid.half_count:
            raise ValueError(f"velocity index {j} out of range")
    jj = tuple(jk + vgrid.half_count for jk in j)
    return int(np.ravel_multi_index((p, *i, *jj), shape_of(species, sgrid, vgrid)))


def cfl_max_step(vgrid: VelocityGrid, sgrid: SpatialGrid) -> float:
    """Largest forward-Euler step allowed by the upwind transport CFL condition."""
    rate = sum(vgrid.vmax / dx for dx in sgrid.spacing)
    return 1.0 / rate
