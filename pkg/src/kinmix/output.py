"""File emitters: moment CSVs, raw binary dumps, diagnostics and plot data.

Moment CSV columns are the cell coordinates, then for each species
``rho, v_1..v_D, T, P``, then the same four groups for the mixture, then
the cell entropy ``H``.  Values are printed with 17 significant digits so
the text round-trips to the same doubles.
"""
from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .grid import DistributionField, flatten_index
from .integrate import Diagnostics, Snapshot
from .moments import entropy, species_moments, total_moments

RAW_MAGIC = "kinmix-raw-v1"
AXIS_NAMES = ("x", "y", "z")


class OutputError(OSError):
    """Writing or reading an output file failed."""


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def moment_columns(species: int, sdim: int, vdim: int) -> list[str]:
    vel = [f"v{AXIS_NAMES[d]}" for d in range(vdim)]
    cols = list(AXIS_NAMES[:sdim])
    for p in range(1, species + 1):
        cols += [f"rho{p}"] + [f"{c}{p}" for c in vel] + [f"T{p}", f"P{p}"]
    cols += ["rho"] + vel + ["T", "P", "H"]
    return cols


def moment_table(field: DistributionField) -> tuple[list[str], np.ndarray]:
    """Header and ``(cells, columns)`` array of the moment CSV for ``field``."""
    sg, vg, params = field.sgrid, field.vgrid, field.params
    mom = species_moments(field.values, params, vg, strict=False)
    tot = total_moments(mom, field.values, vg)
    H = entropy(field.values, vg, strict=False)
    cols = [c.ravel() for c in np.meshgrid(*[sg.centers(d) for d in range(sg.dim)], indexing="ij")]
    for p in range(params.species):
        cols.append(mom.mass_density[p].ravel())
        cols += [mom.velocity[p][..., d].ravel() for d in range(vg.dim)]
        cols += [mom.temperature[p].ravel(), mom.pressure[p].ravel()]
    cols.append(tot.mass_density.ravel())
    cols += [tot.velocity[..., d].ravel() for d in range(vg.dim)]
    cols += [tot.temperature.ravel(), tot.pressure.ravel(), H.ravel()]
    return moment_columns(params.species, sg.dim, vg.dim), np.column_stack(cols)


def write_moments_csv(path: str | Path, field: DistributionField) -> Path:
    path = Path(path)
    header, table = moment_table(field)
    try:
        with path.open("w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in table:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as err:
        raise OutputError(f"cannot write moments CSV {path}: {err}") from err
    return path


def read_csv_columns(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        with path.open() as fh:
            rows = list(csv.reader(fh))
    except OSError as err:
        raise OutputError(f"cannot read {path}: {err}") from err
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]) if body else np.zeros((0, len(header)))
    return {name: data[:, k] for k, name in enumerate(header)}


def write_raw(path: str | Path, field: DistributionField) -> Path:
    """Text header line then little-endian float64 values in :func:`flatten_index` order."""
    path = Path(path)
    shape = field.values.shape
    header = (f"{RAW_MAGIC} shape={','.join(map(str, shape))} species={shape[0]} "
              f"sdim={field.sgrid.dim} vdim={field.vgrid.dim} order=species,space,velocity(C) "
              f"dtype=float64 endian=little\n")
    try:
        with path.open("wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())
    except OSError as err:
        raise OutputError(f"cannot write raw dump {path}: {err}") from err
    return path


def read_raw(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as err:
        raise OutputError(f"cannot read raw dump {path}: {err}") from err
    end = blob.index(b"\n")
    fields = dict(tok.split("=", 1) for tok in blob[:end].decode("ascii").split()[1:])
    if not blob.startswith(RAW_MAGIC.encode()) or fields.get("endian") != "little":
        raise OutputError(f"{path} is not a {RAW_MAGIC} file")
    shape = tuple(int(s) for s in fields["shape"].split(","))
    return np.frombuffer(blob[end + 1:], dtype="<f8").reshape(shape).astype(float)


def raw_offset(field: DistributionField, p: int, i, j) -> int:
    """Index of entry ``(p, i, j)`` in the raw payload."""
    return flatten_index(p, i, j, field.species, field.sgrid, field.vgrid)


class SnapshotWriter:
    """Sink for :func:`run_simulation` that writes numbered snapshot files into a directory."""

    def __init__(self, directory: str | Path, raw: bool = False):
        self.directory = Path(directory)
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as err:
            raise OutputError(f"cannot create output directory {self.directory}: {err}") from err
        self.raw = raw
        self.index: list[tuple[int, float, str, str]] = []

    def __call__(self, snap: Snapshot) -> None:
        k = len(self.index)
        csv_name = f"moments_{k:05d}.csv"
        write_moments_csv(self.directory / csv_name, snap.field)
        raw_name = ""
        if self.raw:
            raw_name = f"raw_{k:05d}.bin"
            write_raw(self.directory / raw_name, snap.field)
        self.index.append((k, snap.time, csv_name, raw_name))
        self._write_index()

    def _write_index(self) -> None:
        path = self.directory / "snapshots.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "time", "moments", "raw"])
            for k, t, c, r in self.index:
                w.writerow([k, _fmt(t), c, r])


def write_diagnostics(path: str | Path, diags: list[Diagnostics]) -> Path:
    path = Path(path)
    if not diags:
        return path
    P = len(diags[0].mass)
    D = len(diags[0].momentum)
    header = (["time"] + [f"mass{p + 1}" for p in range(P)] + [f"momentum_{AXIS_NAMES[d]}" for d in range(D)]
              + ["energy", "entropy", "min_value", "wall_clock", "evaluations"])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for d in diags:
            w.writerow([_fmt(d.time)] + [_fmt(v) for v in d.mass] + [_fmt(v) for v in d.momentum]
                       + [_fmt(d.energy), _fmt(d.entropy), _fmt(d.min_value), f"{d.wall_clock:.6f}",
                          d.evaluations])
    return path


def default_threads() -> int:
    """Worker count from ``KINMIX_THREADS`` (default 1)."""
    raw = os.environ.get("KINMIX_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"KINMIX_THREADS must be an integer, got {raw!r}") from None
    return max(n, 1)
