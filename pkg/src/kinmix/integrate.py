"""Forward Euler, projective and telescopic projective forward Euler integrators.

An :class:`IntegratorLadder` with ``L`` projective levels holds the step
sizes ``dt_0 < dt_1 < ... < dt_L`` and the inner step counts
``K_0 .. K_{L-1}``.  Level 0 is plain forward Euler; level ``l`` runs
``K_{l-1} + 1`` steps of level ``l - 1`` and extrapolates the last
difference over the rest of ``dt_l``.  ``L = 0`` is the direct baseline.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .collision import bgk_rhs, equilibrium_projection
from .grid import DistributionField, MixtureParams, SpatialGrid, VelocityGrid
from .moments import DegenerateMomentsError, entropy
from .transport import BoundarySpec, transport_rhs

log = logging.getLogger(__name__)

Stepper = Callable[[np.ndarray], np.ndarray]


class BlowupError(RuntimeError):
    """A step produced non-finite values."""

    def __init__(self, message: str, time: float | None = None, step: int | None = None, level: int | None = None):
        self.time = time
        self.step = step
        self.level = level
        super().__init__(message)


class SemiDiscreteOperator:
    """``D[f] = -Phi[f] + Q[f] / epsilon`` on fixed grids and boundaries.

    The ``transport`` and ``collisions`` switches drop either term, which the
    spectrum tools use to study each part alone.
    """

    def __init__(self, sgrid: SpatialGrid, vgrid: VelocityGrid, params: MixtureParams,
                 bspec: BoundarySpec | None = None, threads: int = 1,
                 transport: bool = True, collisions: bool = True):
        self.sgrid = sgrid
        self.vgrid = vgrid
        self.params = params
        self.bspec = bspec or BoundarySpec.from_grid(sgrid)
        self.threads = threads
        self.use_transport = transport
        self.use_collisions = collisions
        self.evaluations = 0

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.params.species, *self.sgrid.shape, *self.vgrid.shape)

    def transport(self, values: np.ndarray) -> np.ndarray:
        return transport_rhs(values, self.bspec, self.sgrid, self.vgrid, self.params)

    def collision(self, values: np.ndarray) -> np.ndarray:
        return bgk_rhs(values, self.params, self.vgrid, self.threads)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        self.evaluations += 1
        out = np.zeros(values.shape)
        if self.use_transport:
            out += self.transport(values)
        if self.use_collisions:
            out += self.collision(values) / self.params.knudsen
        return out


@dataclass(frozen=True)
class IntegratorLadder:
    steps: tuple[float, ...]
    inner_counts: tuple[int, ...] = ()

    def __post_init__(self):
        steps = tuple(float(s) for s in self.steps)
        counts = tuple(int(k) for k in self.inner_counts)
        if not 1 <= len(steps) <= 3:
            raise ValueError("a ladder has between 0 and 2 projective levels")
        if len(counts) != len(steps) - 1:
            raise ValueError("one inner step count is needed per projective level")
        if any(not s > 0 for s in steps) or any(k < 0 for k in counts):
            raise ValueError("step sizes must be positive and step counts nonnegative")
        for l, K in enumerate(counts):
            if steps[l + 1] < steps[l] * (K + 1) * (1 - 1e-12):
                raise ValueError(f"level {l + 1} step {steps[l + 1]:g} is shorter than "
                                 f"{K + 1} inner steps of {steps[l]:g}")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "inner_counts", counts)

    @classmethod
    def direct(cls, dt: float) -> "IntegratorLadder":
        return cls((dt,))

    @classmethod
    def knudsen_scaled(cls, knudsen: float, outer_step: float, K0: int = 1, K1: int = 6) -> "IntegratorLadder":
        """Two levels with ``4 dt_0 = 2 eps = dt_1`` and the given outermost step."""
        return cls((knudsen / 2, 2 * knudsen, outer_step), (K0, K1))

    @property
    def levels(self) -> int:
        return len(self.steps) - 1

    @property
    def outer_step(self) -> float:
        return self.steps[-1]

    @property
    def extrapolation_factors(self) -> tuple[float, ...]:
        """``M_l = dt_{l+1} / dt_l - (K_l + 1)`` for each projective level."""
        return tuple(self.steps[l + 1] / self.steps[l] - (K + 1) for l, K in enumerate(self.inner_counts))

    def inner_evaluations(self) -> int:
        """Operator evaluations per outermost step."""
        return int(np.prod([K + 1 for K in self.inner_counts])) if self.inner_counts else 1


def _check_finite(f: np.ndarray, level: int) -> None:
    if not np.all(np.isfinite(f)):
        raise BlowupError(f"non-finite state produced at level {level}", level=level)


def forward_euler_step(f: np.ndarray, dt: float, operator: Stepper) -> np.ndarray:
    out = f + dt * operator(f)
    _check_finite(out, 0)
    return out


def pfe_step(f: np.ndarray, dt_out: float, dt_in: float, K: int, inner: Stepper) -> np.ndarray:
    """One projective forward Euler step of size ``dt_out`` built from ``inner``.

    ``inner`` advances by ``dt_in``.  The last two of the ``K + 1`` inner
    states give the slope used to extrapolate over ``dt_out - (K + 1) dt_in``.
    """
    if dt_out < (K + 1) * dt_in * (1 - 1e-12):
        raise ValueError("outer step is shorter than the inner burst")
    prev = f
    cur = f
    for _ in range(K + 1):
        prev, cur = cur, inner(cur)
    weight = (dt_out - (K + 1) * dt_in) / dt_in
    if weight == 0.0:
        return cur
    out = cur + weight * (cur - prev)
    _check_finite(out, -1)
    return out


def _level_step(f: np.ndarray, ladder: IntegratorLadder, operator: Stepper, level: int, dt: float) -> np.ndarray:
    """Advance exactly ``dt <= steps[level]`` with the given ladder level."""
    if level == 0:
        return forward_euler_step(f, dt, operator)
    dt_in = ladder.steps[level - 1]
    K = ladder.inner_counts[level - 1]
    if dt >= (K + 1) * dt_in * (1 - 1e-12):
        return pfe_step(f, dt, dt_in, K, lambda g: _level_step(g, ladder, operator, level - 1, dt_in))
    # a final partial step shorter than the inner burst: fall back to the level below
    remaining = dt
    while remaining > 1e-14 * dt:
        h = min(dt_in, remaining)
        f = _level_step(f, ladder, operator, level - 1, h)
        remaining -= h
    return f


def tpfe_step(f: np.ndarray, ladder: IntegratorLadder, operator: Stepper, dt: float | None = None) -> np.ndarray:
    """One outermost step of the (telescopic) projective forward Euler method.

    ``dt`` shortens the step; for a projective outermost level only its
    extrapolation weight shrinks.
    """
    dt = ladder.outer_step if dt is None else dt
    return _level_step(f, ladder, operator, ladder.levels, dt)


def efficiency_factor(ladder: IntegratorLadder) -> float:
    """Ratio of forward-Euler steps saved: ``prod_l (dt_{l+1} / dt_l) / (K_l + 1)``."""
    S = 1.0
    for l, K in enumerate(ladder.inner_counts):
        S *= ladder.steps[l + 1] / ladder.steps[l] / (K + 1)
    return S


@dataclass
class Diagnostics:
    time: float
    mass: np.ndarray
    momentum: np.ndarray
    energy: float
    entropy: float
    min_value: float
    wall_clock: float
    evaluations: int


@dataclass
class Snapshot:
    time: float
    field: DistributionField


@dataclass
class SimulationResult:
    final: DistributionField
    diagnostics: list[Diagnostics]
    snapshots: list[float] = field(default_factory=list)
    steps: int = 0


def conserved_totals(values: np.ndarray, vgrid: VelocityGrid, sgrid: SpatialGrid,
                     params: MixtureParams):
    """Per-species mass, total momentum vector and total kinetic energy."""
    vol = vgrid.cell_volume * sgrid.cell_volume
    vaxes = tuple(range(values.ndim - vgrid.dim, values.ndim))
    saxes = tuple(range(1, 1 + sgrid.dim))
    m = np.asarray(params.masses)
    weight = values.sum(axis=saxes)  # (P, *V)
    dens = weight.sum(axis=tuple(a - sgrid.dim for a in vaxes)) * vol
    mass = m * dens
    mom = np.array([(m.reshape((-1,) + (1,) * vgrid.dim) * vgrid.component(d) * weight).sum() * vol
                    for d in range(vgrid.dim)])
    energy = float((0.5 * m.reshape((-1,) + (1,) * vgrid.dim) * vgrid.speed_squared() * weight).sum() * vol)
    return mass, mom, energy


def momentum_scale(values: np.ndarray, vgrid: VelocityGrid, sgrid: SpatialGrid, params: MixtureParams) -> float:
    """``sum m |v| f`` over phase space; the reference for relative momentum drift."""
    vol = vgrid.cell_volume * sgrid.cell_volume
    speed = np.sqrt(vgrid.speed_squared())
    m = np.asarray(params.masses).reshape((-1,) + (1,) * (values.ndim - 1))
    return float((m * np.abs(values) * speed).sum() * vol)


def diagnose(values: np.ndarray, t: float, op: SemiDiscreteOperator, started: float) -> Diagnostics:
    mass, mom, energy = conserved_totals(values, op.vgrid, op.sgrid, op.params)
    H = float(entropy(values, op.vgrid, strict=False).sum() * op.sgrid.cell_volume)
    return Diagnostics(t, mass, mom, energy, H, float(values.min()), time.perf_counter() - started,
                       op.evaluations)


def run_simulation(initial: DistributionField, operator: SemiDiscreteOperator, ladder: IntegratorLadder,
                   t_begin: float, t_end: float, cadence: float | None = None,
                   sinks: Iterable[Callable[[Snapshot], None]] = (), diagnostics: bool = True) -> SimulationResult:
    """Advance ``initial`` from ``t_begin`` to exactly ``t_end``.

    Each outermost step is a :func:`tpfe_step` (plain forward Euler for a
    direct ladder).  The last step is shortened to land on ``t_end``.
    Snapshots are handed to every sink at ``t_begin``, at each multiple of
    ``cadence`` that is crossed, and at ``t_end``.  On blowup the last good
    snapshot is flushed to the sinks before the error propagates.
    """
    if not t_end > t_begin:
        raise ValueError("t_end must exceed t_begin")
    if cadence is not None and not cadence > 0:
        raise ValueError("snapshot cadence must be positive")
    sinks = list(sinks)
    started = time.perf_counter()
    f = initial.values.copy()
    t = t_begin
    dt = ladder.outer_step
    span = t_end - t_begin
    total_steps = math.ceil(span / dt * (1 - 1e-12))
    diags = [diagnose(f, t, operator, started)] if diagnostics else []
    snap_times: list[float] = []

    def emit(values, when):
        snap = Snapshot(when, initial.with_values(values.copy()))
        for sink in sinks:
            sink(snap)
        snap_times.append(when)

    emit(f, t)
    next_snap = t_begin + cadence if cadence else math.inf
    for n in range(total_steps):
        t_next = t_end if n == total_steps - 1 else t_begin + (n + 1) * dt
        try:
            try:
                f_new = tpfe_step(f, ladder, operator, t_next - t)
            except DegenerateMomentsError as err:
                # an unstable explicit step drives densities negative before they overflow
                raise BlowupError(f"step produced a degenerate state: {err}") from err
        except BlowupError as err:
            err.time, err.step = t, n
            log.error("blowup at t=%g (outer step %d); flushing last good state", t, n)
            emit(f, t)
            raise
        f, t = f_new, t_next
        if diagnostics:
            diags.append(diagnose(f, t, operator, started))
        if t >= next_snap * (1 - 1e-12) and n != total_steps - 1:
            emit(f, t)
            while next_snap <= t * (1 + 1e-12):
                next_snap += cadence
    emit(f, t_end)
    return SimulationResult(initial.with_values(f), diags, snap_times, total_steps)


def relaxed_transport_run(initial: DistributionField, operator: SemiDiscreteOperator, dt: float,
                          t_end: float, t_begin: float = 0.0) -> DistributionField:
    """Instantaneous-relaxation limit: forward Euler transport then projection onto equilibrium.

    Every species is reset to the Maxwellian sharing the mixture velocity
    and temperature after each transport step, which is the
    vanishing-Knudsen limit of the kinetic scheme (a kinetic flux-splitting
    Euler solver).
    """
    f = equilibrium_projection(initial.values, operator.vgrid, operator.params)
    t = t_begin
    while t < t_end * (1 - 1e-14):
        h = min(dt, t_end - t)
        f = f + h * operator.transport(f)
        f = equilibrium_projection(f, operator.vgrid, operator.params)
        t += h
    return initial.with_values(f)
