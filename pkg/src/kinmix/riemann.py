"""Exact solution of the (two-fluid) Sod tube: left rarefaction, contact, right shock.

Only the rarefaction-left / shock-right wave pattern is supported.  Data
with any other pattern raise :class:`UnsupportedWavePattern`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class UnsupportedWavePattern(ValueError):
    """The Riemann data do not produce a rarefaction on the left and a shock on the right."""


def gamma_for_dimension(D: int) -> float:
    """Adiabatic exponent of a monatomic ideal gas in ``D`` velocity dimensions."""
    return 1.0 + 2.0 / D


@dataclass(frozen=True)
class GasState:
    density: float
    velocity: float
    pressure: float
    gamma: float = 3.0

    def __post_init__(self):
        if not (self.density > 0 and self.pressure > 0):
            raise ValueError(f"gas state needs positive density and pressure, got {self}")
        if not self.gamma > 1:
            raise ValueError("adiabatic exponent must exceed 1")

    @property
    def sound_speed(self) -> float:
        return math.sqrt(self.gamma * self.pressure / self.density)


def v_rare(p_contact: float, left: GasState) -> float:
    """Contact velocity reached from ``left`` through a rarefaction to pressure ``p_contact``."""
    if not 0 < p_contact <= left.pressure * (1 + 1e-14):
        raise ValueError(f"rarefaction needs 0 < P_C <= P_L, got {p_contact}")
    g = left.gamma
    ratio = min(p_contact / left.pressure, 1.0)
    return left.velocity + 2 * left.sound_speed * (1 - ratio ** ((g - 1) / (2 * g))) / (g - 1)


def v_shock(p_contact: float, right: GasState) -> float:
    """Contact velocity behind a right-moving shock into ``right`` with pressure ``p_contact``.

    Increases with ``p_contact``: a stronger shock drives the gas faster to
    the right.
    """
    if not p_contact >= right.pressure * (1 - 1e-14):
        raise ValueError(f"shock needs P_C >= P_R, got {p_contact}")
    g = right.gamma
    ratio = max(p_contact / right.pressure, 1.0)
    return right.velocity + 2 * right.sound_speed * (ratio - 1) / math.sqrt(2 * g * (g - 1 + ratio * (g + 1)))


@dataclass(frozen=True)
class RiemannSolution:
    left: GasState
    right: GasState
    pressure: float
    velocity: float
    density_left: float
    density_right: float
    shock_speed: float

    @property
    def head_speed(self) -> float:
        return self.left.velocity - self.left.sound_speed

    @property
    def contact_sound_speed(self) -> float:
        return math.sqrt(self.left.gamma * self.pressure / self.density_left)

    @property
    def tail_speed(self) -> float:
        return self.velocity - self.contact_sound_speed


def solve_contact(left: GasState, right: GasState, rtol: float = 1e-12) -> RiemannSolution:
    """Contact pressure and velocity by bisection of ``v_rare - v_shock`` on ``[P_R, P_L]``."""
    def gap(p):
        return v_rare(p, left) - v_shock(p, right)

    lo, hi = right.pressure, left.pressure
    if lo > hi:
        raise UnsupportedWavePattern("P_R > P_L: the left wave cannot be a rarefaction")
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo < 0 or g_hi > 0:
        raise UnsupportedWavePattern(
            f"no rarefaction/shock solution on [P_R, P_L] (gap {g_lo:g} at P_R, {g_hi:g} at P_L)")
    if g_lo == 0:
        hi = lo
    elif g_hi == 0:
        lo = hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    p = 0.5 * (lo + hi)
    v = 0.5 * (v_rare(p, left) + v_shock(p, right))
    rho_l = left.density * (p / left.pressure) ** (1 / left.gamma)
    gr = right.gamma
    ratio = p / right.pressure
    rho_r = right.density * (ratio + (gr - 1) / (gr + 1)) / (ratio * (gr - 1) / (gr + 1) + 1)
    if abs(rho_r - right.density) <= 1e-14 * right.density:
        s = right.velocity + right.sound_speed  # vanishing shock travels as a sound wave
    else:
        s = (right.density * right.velocity - rho_r * v) / (right.density - rho_r)
    return RiemannSolution(left, right, p, v, rho_l, rho_r, s)


def sample(sol: RiemannSolution, x, t: float):
    """Density, velocity and pressure at positions ``x`` (discontinuity at 0) and time ``t``."""
    if not t > 0:
        raise ValueError("sampling time must be positive")
    xi = np.asarray(x, dtype=float) / t
    L, R = sol.left, sol.right
    g = L.gamma
    rho = np.empty_like(xi)
    vel = np.empty_like(xi)
    prs = np.empty_like(xi)

    far_left = xi <= sol.head_speed
    fan = (xi > sol.head_speed) & (xi <= sol.tail_speed)
    star_l = (xi > sol.tail_speed) & (xi <= sol.velocity)
    star_r = (xi > sol.velocity) & (xi <= sol.shock_speed)
    far_right = xi > sol.shock_speed

    rho[far_left], vel[far_left], prs[far_left] = L.density, L.velocity, L.pressure
    z = xi[fan]
    v_f = ((g - 1) * L.velocity + 2 * (L.sound_speed + z)) / (g + 1)
    c_f = v_f - z
    rho_f = (L.density**g * c_f**2 / (g * L.pressure)) ** (1 / (g - 1))
    rho[fan], vel[fan], prs[fan] = rho_f, v_f, rho_f**g * L.pressure * L.density ** (-g)
    rho[star_l], vel[star_l], prs[star_l] = sol.density_left, sol.velocity, sol.pressure
    rho[star_r], vel[star_r], prs[star_r] = sol.density_right, sol.velocity, sol.pressure
    rho[far_right], vel[far_right], prs[far_right] = R.density, R.velocity, R.pressure
    return rho, vel, prs


def mixture_sample(sol: RiemannSolution, x, t: float, seed: float = 0.0):
    """Two unmixed fluids: species 1 left of the contact, species 2 right of it.

    ``seed`` puts that fraction of the local density into the absent
    species, matching the density floor used by kinetic initial data.
    """
    rho, vel, prs = sample(sol, x, t)
    xi = np.asarray(x, dtype=float) / t
    left_fluid = xi <= sol.velocity
    rho1 = np.where(left_fluid, (1 - seed) * rho, seed * rho)
    rho2 = np.where(left_fluid, seed * rho, (1 - seed) * rho)
    return rho1, rho2, vel, prs


def write_profile_csv(path: str | Path, sol: RiemannSolution, x, t: float, origin: float = 0.0,
                      seed: float = 0.0) -> Path:
    """CSV with columns ``x, rho1, rho2, v, P``; the initial discontinuity sits at ``origin``."""
    path = Path(path)
    x = np.asarray(x, dtype=float)
    rho1, rho2, vel, prs = mixture_sample(sol, x - origin, t, seed)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "rho1", "rho2", "v", "P"])
        for row in zip(x, rho1, rho2, vel, prs):
            w.writerow([f"{val:.17g}" for val in row])
    return path
