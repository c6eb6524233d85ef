"""Scenario configuration: YAML schema, validation and desk/full-scale defaults.

A configuration has the sections ``physical``, ``grid``, ``ladder``,
``run`` and an optional scenario-specific ``setup`` block.  Unknown keys
anywhere are rejected at load time.
"""
from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .grid import BOUNDARY_KINDS, MixtureParams, SpatialGrid, VelocityGrid
from .integrate import IntegratorLadder

SCENARIOS = ("sod", "shock_bubble", "kelvin_helmholtz", "richtmyer_meshkov",
             "homogeneous_relaxation", "custom")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass
class PhysicalConfig:
    masses: list[float]
    knudsen: float
    collision_frequency: Any = 1.0
    density_floor: float = 1e-5
    maxwellian_correction: str = "density"


@dataclass
class GridConfig:
    cells: list[int]
    lower: list[float]
    upper: list[float]
    velocity_half_width: float
    velocity_dim: int = 1
    velocity_spacing: float | None = None
    velocity_half_count: int | None = None
    boundary: list[list[str]] | None = None


@dataclass
class LadderConfig:
    """``kind`` is ``direct``, ``telescopic`` (explicit steps) or ``knudsen_scaled``.

    ``outer_dx_divisor`` sets the outermost step to ``dx_min / divisor``
    and overrides ``outer_step``; ``cfl_fraction`` does the same for a
    direct ladder relative to the kinetic CFL bound.
    """

    kind: str = "knudsen_scaled"
    steps: list[float] | None = None
    inner_counts: list[int] | None = None
    outer_step: float | None = None
    outer_dx_divisor: float | None = None
    cfl_fraction: float | None = None
    K0: int = 1
    K1: int = 6


@dataclass
class RunConfig:
    t_begin: float = 0.0
    t_end: float = 0.1
    cadence: float | None = None
    output_dir: str = "out"
    raw_dump: bool = False
    threads: int | None = None


@dataclass
class ScenarioConfig:
    scenario: str
    physical: PhysicalConfig
    grid: GridConfig
    ladder: LadderConfig = field(default_factory=LadderConfig)
    run: RunConfig = field(default_factory=RunConfig)
    setup: dict = field(default_factory=dict)

    # ---- derived objects -------------------------------------------------
    def velocity_grid(self) -> VelocityGrid:
        g = self.grid
        if g.velocity_spacing is not None:
            return VelocityGrid.from_spacing(g.velocity_spacing, g.velocity_half_width, g.velocity_dim)
        if g.velocity_half_count is None:
            raise ConfigError("grid needs velocity_spacing or velocity_half_count")
        return VelocityGrid(g.velocity_half_width, g.velocity_half_count, g.velocity_dim)

    def spatial_grid(self) -> SpatialGrid:
        g = self.grid
        boundary = tuple(tuple(b) for b in g.boundary) if g.boundary else ()
        return SpatialGrid(tuple(g.cells), tuple(g.lower), tuple(g.upper), boundary)

    def mixture_params(self) -> MixtureParams:
        p = self.physical
        nu = p.collision_frequency
        return MixtureParams(tuple(p.masses), p.knudsen, nu, p.density_floor, p.maxwellian_correction)

    def integrator_ladder(self) -> IntegratorLadder:
        lad = self.ladder
        sg, vg = self.spatial_grid(), self.velocity_grid()
        dx = min(sg.spacing)
        outer = lad.outer_step
        if lad.outer_dx_divisor:
            outer = dx / lad.outer_dx_divisor
        if lad.kind == "direct":
            if lad.cfl_fraction:
                from .grid import cfl_max_step
                return IntegratorLadder.direct(lad.cfl_fraction * cfl_max_step(vg, sg))
            if lad.steps:
                return IntegratorLadder.direct(lad.steps[0])
            if outer is None:
                raise ConfigError("direct ladder needs steps, outer_step or cfl_fraction")
            return IntegratorLadder.direct(outer)
        if lad.kind == "telescopic":
            if not lad.steps:
                raise ConfigError("telescopic ladder needs explicit steps")
            steps = list(lad.steps)
            if outer is not None:
                steps[-1] = outer
            return IntegratorLadder(tuple(steps), tuple(lad.inner_counts or ()))
        if outer is None:
            raise ConfigError("knudsen_scaled ladder needs outer_step or outer_dx_divisor")
        return IntegratorLadder.knudsen_scaled(self.physical.knudsen, outer, lad.K0, lad.K1)

    def validate(self) -> "ScenarioConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.ladder.kind not in ("direct", "telescopic", "knudsen_scaled"):
            raise ConfigError(f"unknown ladder kind {self.ladder.kind!r}")
        if self.grid.boundary:
            for pair in self.grid.boundary:
                for kind in pair:
                    if kind not in BOUNDARY_KINDS:
                        raise ConfigError(f"unknown boundary kind {kind!r}")
        try:
            sg, vg = self.spatial_grid(), self.velocity_grid()
            self.mixture_params()
            self.integrator_ladder()
        except ConfigError:
            raise
        except ValueError as err:
            raise ConfigError(str(err)) from err
        if sg.dim > vg.dim:
            raise ConfigError("spatial dimension exceeds velocity dimension")
        r = self.run
        if not r.t_end > r.t_begin:
            raise ConfigError("run.t_end must exceed run.t_begin")
        if r.cadence is not None and not r.cadence > 0:
            raise ConfigError("run.cadence must be positive")
        if r.threads is not None and r.threads < 1:
            raise ConfigError("run.threads must be >= 1")
        return self

    # ---- serialisation ---------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self, path: str | Path | None = None) -> str:
        text = yaml.safe_dump(self.to_dict(), sort_keys=False)
        if path is not None:
            Path(path).write_text(text)
        return text


_SECTIONS = {"physical": PhysicalConfig, "grid": GridConfig, "ladder": LadderConfig, "run": RunConfig}


def _build_section(name: str, cls, data) -> Any:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    allowed = set(cls.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as err:
        raise ConfigError(f"section {name!r}: {err}") from err


def config_from_dict(data: dict, paper_scale: bool = False) -> ScenarioConfig:
    """Merge ``data`` over the scenario defaults and validate.

    ``paper_scale`` selects the published-resolution defaults as the base.
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    allowed = {"scenario", "setup", *_SECTIONS}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "scenario" not in data:
        raise ConfigError("configuration needs a 'scenario' key")
    name = data["scenario"]
    base = default_config(name, paper_scale) if name in SCENARIOS and name != "custom" else None
    sections = {}
    for key, cls in _SECTIONS.items():
        merged = asdict(getattr(base, key)) if base is not None else {}
        given = data.get(key) or {}
        if not isinstance(given, dict):
            raise ConfigError(f"section {key!r} must be a mapping")
        unknown = set(given) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown keys in {key!r}: {sorted(unknown)}")
        merged.update(given)
        if key != "run" and not merged and base is None:
            raise ConfigError(f"section {key!r} is required for scenario {name!r}")
        sections[key] = _build_section(key, cls, merged)
    setup = copy.deepcopy(base.setup) if base is not None else {}
    extra = data.get("setup") or {}
    if not isinstance(extra, dict):
        raise ConfigError("section 'setup' must be a mapping")
    allowed_setup = SETUP_KEYS.get(name)
    if allowed_setup is not None:
        bad = set(extra) - allowed_setup
        if bad:
            raise ConfigError(f"unknown keys in 'setup' for {name!r}: {sorted(bad)}")
    setup.update(extra)
    cfg = ScenarioConfig(name, sections["physical"], sections["grid"], sections["ladder"],
                         sections["run"], setup)
    return cfg.validate()


def load_config(path: str | Path, paper_scale: bool = False) -> ScenarioConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"malformed YAML in {path}: {err}") from err
    return config_from_dict(data, paper_scale)


SETUP_KEYS = {
    "sod": {"left", "right", "split"},
    "shock_bubble": {"bubble_center", "bubble_sharpness", "shock_position", "shocked", "quiescent"},
    "kelvin_helmholtz": {"amplitude", "wavenumber", "shear_velocity", "densities"},
    "richtmyer_meshkov": {"shock_position", "shocked", "quiescent", "heavy_density", "heavy_pressure",
                          "amplitude", "frequency", "velocity_shift"},
    "homogeneous_relaxation": {"densities", "velocities", "temperatures"},
    "custom": {"densities", "velocities", "temperatures"},
}


def default_config(name: str, paper_scale: bool = False) -> ScenarioConfig:
    """Desk-scale defaults for a named scenario; ``paper_scale`` restores the published grids."""
    if name == "sod":
        cells = 256
        dv = 2.0**-4 if paper_scale else 2.0**-3
        cfg = ScenarioConfig(
            "sod", PhysicalConfig([1.0, 1.0], 1e-6),
            GridConfig([cells], [0.0], [1.0], 20.0, 1, velocity_spacing=dv,
                       boundary=[["zero_gradient", "zero_gradient"]]),
            LadderConfig("knudsen_scaled", outer_dx_divisor=16, K0=1, K1=6),
            RunConfig(0.0, 0.15),
            {"left": [1.0, 0.0, 1.0], "right": [0.125, 0.0, 0.03125], "split": 0.5})
    elif name == "shock_bubble":
        cells, dv = ([180, 120], 0.25) if paper_scale else ([45, 30], 1.0)
        cfg = ScenarioConfig(
            "shock_bubble", PhysicalConfig([1.0, 5.0], 1e-5 if paper_scale else 1e-4,
                                           maxwellian_correction="density" if paper_scale else "moments"),
            GridConfig(cells, [-1.5, -1.5], [3.0, 1.5], 12.0, 2, velocity_spacing=dv,
                       boundary=[["zero_gradient", "zero_gradient"], ["zero_gradient", "zero_gradient"]]),
            LadderConfig("knudsen_scaled", outer_dx_divisor=20, K0=1, K1=6),
            RunConfig(0.0, 1.5),
            {"bubble_center": [0.0, 0.0], "bubble_sharpness": 16.0, "shock_position": -1.0,
             "shocked": [2.0, 1.414, 2.5], "quiescent": [1.0, 0.0, 1.0]})
    elif name == "kelvin_helmholtz":
        cells, dv = ([128, 128], 0.5) if paper_scale else ([32, 32], 1.0)
        cfg = ScenarioConfig(
            "kelvin_helmholtz", PhysicalConfig([1.0, 5.0], 1e-5 if paper_scale else 1e-4,
                                               maxwellian_correction="density" if paper_scale else "moments"),
            GridConfig(cells, [-0.5, -0.5], [0.5, 0.5], 8.0, 2, velocity_spacing=dv,
                       boundary=[["periodic", "periodic"], ["zero_gradient", "zero_gradient"]]),
            LadderConfig("knudsen_scaled", outer_dx_divisor=20 if paper_scale else 4, K0=2, K1=4),
            RunConfig(0.0, 3.0 if paper_scale else 1.0),
            {"amplitude": 1e-2, "wavenumber": 4 * math.pi, "shear_velocity": 0.5, "densities": [1.0, 2.0]})
    elif name == "richtmyer_meshkov":
        cells, dv = ([400, 200], 0.25) if paper_scale else ([100, 50], 1.0)
        cfg = ScenarioConfig(
            "richtmyer_meshkov", PhysicalConfig([1.0, 5.0], 1e-6,
                                                maxwellian_correction="density" if paper_scale else "moments"),
            GridConfig(cells, [-0.5, 0.0], [0.5, 0.5], 4.0, 2, velocity_spacing=dv,
                       boundary=[["zero_gradient", "zero_gradient"], ["zero_gradient", "zero_gradient"]]),
            LadderConfig("knudsen_scaled", outer_dx_divisor=40, K0=1, K1=6),
            RunConfig(-0.02, 1.0),
            {"shock_position": -0.0242, "shocked": [1.268, 0.256, 0.809], "quiescent": [1.0, 0.0, 0.5],
             "heavy_density": 5.0, "heavy_pressure": 0.5, "amplitude": 1e-2, "frequency": 20 * math.pi,
             "velocity_shift": -0.07})
    elif name == "homogeneous_relaxation":
        cfg = ScenarioConfig(
            "homogeneous_relaxation", PhysicalConfig([1.0, 2.0], 1.0),
            GridConfig([1], [0.0], [1.0], 10.0, 1, velocity_spacing=0.25,
                       boundary=[["periodic", "periodic"]]),
            LadderConfig("direct", outer_step=0.05),
            RunConfig(0.0, 5.0),
            {"densities": [1.0, 0.5], "velocities": [[0.5], [-0.5]], "temperatures": [1.0, 2.0]})
    elif name == "custom":
        raise ConfigError("the custom scenario has no defaults; give every section explicitly")
    else:
        raise ConfigError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")
    return cfg
