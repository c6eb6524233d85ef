"""Matplotlib renderings of the plot-data tables (written next to the CSVs)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_profile(table: dict[str, np.ndarray], path: str | Path, title: str = "") -> Path:
    """Four panels (density, velocity, temperature, pressure), kinetic against exact."""
    path = Path(path)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    x = table["x"]
    for ax, key, label in zip(axes.flat, ("rho", "v", "T", "P"), ("density", "velocity", "temperature", "pressure")):
        ax.plot(x, table[key], lw=1.2, label="kinetic")
        if f"{key}_exact" in table:
            ax.plot(x, table[f"{key}_exact"], "k--", lw=0.9, label="exact")
        ax.set_ylabel(label)
    for ax in axes[1]:
        ax.set_xlabel("x")
    if "rho1" in table:
        axes[0, 0].plot(x, table["rho1"], lw=0.8, alpha=0.7, label="species 1")
        axes[0, 0].plot(x, table["rho2"], lw=0.8, alpha=0.7, label="species 2")
    axes[0, 0].legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_fields(table: dict[str, np.ndarray], shape: tuple[int, int], path: str | Path,
                keys=("rho1", "rho2", "P"), title: str = "") -> Path:
    """Colour maps of cell quantities on a 2D grid (x along the horizontal axis)."""
    path = Path(path)
    x = table["x"].reshape(shape)
    y = table["y"].reshape(shape)
    fig, axes = plt.subplots(1, len(keys), figsize=(4.2 * len(keys), 3.6))
    for ax, key in zip(np.atleast_1d(axes), keys):
        im = ax.pcolormesh(x, y, table[key].reshape(shape), shading="nearest")
        ax.set_aspect("equal")
        ax.set_title(key)
        fig.colorbar(im, ax=ax, shrink=0.8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_spectrum(values: np.ndarray, labels: list[str], path: str | Path, disks=(), dt0: float = 1.0) -> Path:
    """Scaled eigenvalues ``dt_0 lambda`` over the stability disks."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    z = np.asarray(values) * dt0
    for name in dict.fromkeys(labels):
        sel = np.array([lab == name for lab in labels])
        ax.plot(z[sel].real, z[sel].imag, ".", ms=4, label=name)
    for d in disks:
        ax.add_patch(plt.Circle((d.center.real, d.center.imag), d.radius, fill=False, color="k", lw=0.8))
    ax.axhline(0, color="0.7", lw=0.5)
    ax.axvline(0, color="0.7", lw=0.5)
    ax.set_xlabel("Re dt0 lambda")
    ax.set_ylabel("Im dt0 lambda")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
