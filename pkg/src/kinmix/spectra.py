"""Spectra of the semi-discrete operator and stability disks of (telescopic) projective Euler.

The Jacobian is formed column by column with central differences and its
eigenvalues come from a dense nonsymmetric solver.  Eigenvalues scaled by
the innermost step ``dt_0`` are then tested against the asymptotic
large-``M`` stability disks of the ladder.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .grid import DistributionField
from .integrate import IntegratorLadder

JACOBIAN_CAP = 4096
# relative magnitude below which an eigenvalue counts as part of the kernel
KERNEL_TOL = 1e-8
CLUSTER_GAP = 10.0


class JacobianTooLarge(ValueError):
    """The state is too large for a dense Jacobian."""


class EigenvalueError(RuntimeError):
    """The dense eigensolver failed."""


class InfeasibleLadder(ValueError):
    """No ladder within the search bounds keeps the scaled spectrum inside the stable disks."""

    def __init__(self, message: str, blocking: Sequence[complex] = ()):
        self.blocking = list(blocking)
        super().__init__(message)


def jacobian_fd(operator: Callable[[np.ndarray], np.ndarray], base, h: float | None = None,
                cap: int = JACOBIAN_CAP, threads: int = 1) -> np.ndarray:
    """Dense Jacobian of ``operator`` at ``base`` by central differences.

    Column ``k`` is ``(D[f + h e_k] - D[f - h e_k]) / 2h`` in the flattened
    (C order) state.  The default step is ``1e-6 (1 + max|f|)``.
    """
    f0 = np.asarray(base.values if isinstance(base, DistributionField) else base, dtype=float)
    size = f0.size
    if size > cap:
        raise JacobianTooLarge(
            f"state dimension {size} exceeds the dense Jacobian cap {cap}; "
            "use fewer cells or velocity nodes")
    if h is None:
        h = 1e-6 * (1.0 + float(np.abs(f0).max()))
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    flat = f0.ravel()

    def column(k):
        e = np.zeros(size)
        e[k] = h
        up = np.asarray(operator((flat + e).reshape(f0.shape))).ravel()
        dn = np.asarray(operator((flat - e).reshape(f0.shape))).ravel()
        return (up - dn) / (2 * h)

    J = np.empty((size, size))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for k, col in enumerate(pool.map(column, range(size))):
                J[:, k] = col
    else:
        for k in range(size):
            J[:, k] = column(k)
    return J


def eigenvalues(matrix) -> np.ndarray:
    """All eigenvalues of a square real matrix (LAPACK via numpy)."""
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"eigenvalues need a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise EigenvalueError("matrix has non-finite entries")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as err:
        raise EigenvalueError(
            f"eigenvalue iteration did not converge for a {A.shape[0]}x{A.shape[0]} matrix "
            f"(Frobenius norm {np.linalg.norm(A):.3g}): {err}") from err


def _cluster_labels(values: np.ndarray, kernel_tol: float, gap: float):
    mags = np.abs(values)
    if mags.size == 0:
        return np.zeros(0, int), 0
    floor = kernel_tol * max(mags.max(), np.finfo(float).tiny)
    floored = np.maximum(mags, floor)
    order = np.argsort(floored, kind="stable")
    labels = np.empty(mags.size, int)
    group = 0
    for rank, k in enumerate(order):
        if rank and floored[k] > gap * floored[order[rank - 1]]:
            group += 1
        labels[k] = group
    return labels, group + 1


@dataclass
class SpectrumEstimate:
    """Eigenvalues with a magnitude-gap clustering.

    ``labels[i]`` is the cluster of ``values[i]``; clusters are numbered
    from the smallest to the largest magnitude.  ``kernel`` marks
    eigenvalues below ``kernel_tol`` times the largest magnitude.
    """

    values: np.ndarray
    labels: np.ndarray
    count: int
    kernel: np.ndarray
    state: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, values, state: dict | None = None, kernel_tol: float = KERNEL_TOL,
                    gap: float = CLUSTER_GAP) -> "SpectrumEstimate":
        values = np.asarray(values, dtype=complex).ravel()
        labels, count = _cluster_labels(values, kernel_tol, gap)
        top = np.abs(values).max() if values.size else 0.0
        kernel = np.abs(values) <= kernel_tol * top
        return cls(values, labels, count, kernel, dict(state or {}))

    @property
    def names(self) -> list[str]:
        if self.count == 3:
            return ["slow", "middle", "fast"]
        if self.count == 2:
            return ["slow", "fast"]
        return [f"group{k}" for k in range(self.count)]

    def cluster(self, k: int | str) -> np.ndarray:
        if isinstance(k, str):
            k = self.names.index(k)
        return self.values[self.labels == k]

    @property
    def fast(self) -> np.ndarray:
        return self.cluster(self.count - 1) if self.count else self.values

    def sizes(self) -> list[int]:
        return [int((self.labels == k).sum()) for k in range(self.count)]

    def conjugate_mismatch(self) -> float:
        """Largest distance from an eigenvalue's conjugate to the nearest eigenvalue, relative to max |lambda|."""
        if self.values.size == 0:
            return 0.0
        scale = max(np.abs(self.values).max(), 1.0)
        conj = np.conj(self.values)
        dist = np.abs(conj[:, None] - self.values[None, :]).min(axis=1)
        return float(dist.max() / scale)


def estimate_spectrum(operator, base, h: float | None = None, cap: int = JACOBIAN_CAP,
                      state: dict | None = None, threads: int = 1, **cluster_kw) -> SpectrumEstimate:
    J = jacobian_fd(operator, base, h, cap, threads)
    return SpectrumEstimate.from_values(eigenvalues(J), state, **cluster_kw)


@dataclass(frozen=True)
class StabilityDisk:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) <= self.radius * (1 + 1e-12)

    def scale_margin(self, z) -> np.ndarray:
        """Largest ``s`` such that ``a z`` stays in the disk for all ``a`` in ``[1 - s, 1 + s]``.

        Negative when ``z`` lies outside.  This is the relative change of
        ``dt_0`` the mode tolerates.
        """
        z = np.asarray(z, dtype=complex)
        a2 = np.abs(z) ** 2
        b = (z * np.conj(self.center)).real
        c = abs(self.center) ** 2 - self.radius**2
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = b**2 - a2 * c
            root = np.sqrt(np.maximum(disc, 0.0))
            lo = (b - root) / a2
            hi = (b + root) / a2
            inside = np.minimum(hi - 1.0, 1.0 - lo)
        # no real scaling puts z in the disk: measure the gap to the nearest approach
        miss = -(np.abs(z - self.center) - self.radius) / self.radius
        out = np.where(disc >= 0, inside, np.minimum(miss, -1e-300))
        return np.where(a2 > 0, out, np.where(c <= 0, np.inf, -np.inf))


def pfe_disks(M: float, K: int) -> tuple[StabilityDisk, StabilityDisk]:
    """Asymptotic stability disks of projective forward Euler in the ``dt_0 lambda`` plane."""
    if not M > 1 or K < 1:
        raise ValueError(f"projective disks need M > 1 and K >= 1, got M={M}, K={K}")
    return StabilityDisk(-1.0, M ** (-1.0 / K)), StabilityDisk(-1.0 / M, 1.0 / M)


def tpfe_disks(M0: float, K0: int, M1: float, K1: int) -> tuple[StabilityDisk, StabilityDisk, StabilityDisk]:
    """Asymptotic stability disks of two-level telescopic projective forward Euler."""
    if not (M0 > 1 and M1 > 1) or K0 < 1 or K1 < 1:
        raise ValueError(f"telescopic disks need M > 1 and K >= 1, got {(M0, K0, M1, K1)}")
    r1 = M1 ** (-1.0 / K1)
    return (StabilityDisk(-1.0, M0 ** (-1.0 / K0) * r1),
            StabilityDisk(-1.0 / M0, r1 / M0),
            StabilityDisk(-1.0 / (M0 * M1), 1.0 / (M0 * M1)))


def ladder_disks(ladder: IntegratorLadder) -> tuple[StabilityDisk, ...]:
    M = ladder.extrapolation_factors
    K = ladder.inner_counts
    if ladder.levels == 0:
        return (StabilityDisk(-1.0, 1.0),)
    if ladder.levels == 1:
        return pfe_disks(M[0], K[0])
    return tpfe_disks(M[0], K[0], M[1], K[1])


@dataclass
class LadderReport:
    passed: bool
    worst_margin: float
    required_margin: float
    coverage: dict[str, float]
    offenders: list[complex]
    disks: list[StabilityDisk]
    dt0: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_margin": _finite(self.worst_margin),
            "required_margin": self.required_margin,
            "coverage": self.coverage,
            "offenders": [[z.real, z.imag] for z in self.offenders],
            "disks": [{"center": [d.center.real, d.center.imag], "radius": d.radius} for d in self.disks],
            "dt0": self.dt0,
        }


def _finite(x: float):
    return x if np.isfinite(x) else None


def scaled_margins(spectrum: SpectrumEstimate, disks: Sequence[StabilityDisk], dt0: float) -> np.ndarray:
    """Per-eigenvalue best scale margin over the disk union; kernel modes get ``+inf``."""
    z = spectrum.values * dt0
    if z.size == 0:
        return np.zeros(0)
    best = np.max([d.scale_margin(z) for d in disks], axis=0)
    return np.where(spectrum.kernel, np.inf, best)


def check_ladder(spectrum: SpectrumEstimate, ladder: IntegratorLadder, margin: float = 0.0) -> LadderReport:
    """Test every ``dt_0 lambda`` against the ladder's stability disks.

    Kernel eigenvalues (conserved modes) always pass.  A mode's margin is
    the relative perturbation of ``dt_0`` it tolerates without leaving the
    union; the ladder passes when every margin is at least ``margin``.
    """
    disks = list(ladder_disks(ladder))
    dt0 = ladder.steps[0]
    m = scaled_margins(spectrum, disks, dt0)
    ok = m >= margin
    coverage = {}
    for k, name in enumerate(spectrum.names):
        sel = spectrum.labels == k
        coverage[name] = float(ok[sel].mean()) if sel.any() else 1.0
    worst = float(m.min()) if m.size else np.inf
    return LadderReport(bool(ok.all()), worst, margin, coverage,
                        [complex(z) for z in spectrum.values[~ok]], disks, dt0)


def suggest_ladder(spectrum: SpectrumEstimate, outer_step: float, cfl: float | None = None,
                   margin: float = 0.05, max_count: int = 32) -> IntegratorLadder:
    """Cheapest ladder (fewest evaluations per outer step) whose disks hold the spectrum.

    ``dt_0`` maps the centre of the fast cluster to ``-1``.  The outermost
    step is ``outer_step``, capped at ``cfl`` when given.  One projective
    level is tried first, then two levels with the middle step chosen from
    the magnitudes of the intermediate eigenvalues.
    """
    fast = spectrum.fast
    if fast.size == 0 or np.any(fast.real >= 0):
        raise InfeasibleLadder("the fast cluster must have negative real parts", list(fast[fast.real >= 0]))
    rates = -fast.real
    dt0 = 2.0 / (rates.max() + rates.min())
    dt_out = min(outer_step, cfl) if cfl else outer_step
    if dt_out <= dt0:
        return IntegratorLadder.direct(dt_out)

    best_report = None
    candidates = []
    for K in range(1, max_count + 1):
        if dt_out >= (K + 1) * dt0 and dt_out / dt0 - (K + 1) > 1:
            candidates.append(((K + 1), IntegratorLadder((dt0, dt_out), (K,))))
    # middle steps: place each intermediate eigenvalue magnitude at the centre of the middle disk
    inner = spectrum.values[~spectrum.kernel & (spectrum.labels != spectrum.count - 1)]
    targets = set()
    if inner.size:
        for lam in np.unique(np.round(np.abs(inner.real[inner.real < 0]), 12)):
            targets.add(1.0 / (dt0 * lam))
    targets.update(np.geomspace(2.0, max(dt_out / dt0, 4.0), 24))
    for M0 in sorted(targets):
        for K0 in range(1, max_count + 1):
            dt1 = (M0 + K0 + 1) * dt0
            if not M0 > 1 or dt1 >= dt_out:
                continue
            for K1 in range(1, max_count + 1):
                if dt_out / dt1 - (K1 + 1) <= 1:
                    break
                candidates.append(((K0 + 1) * (K1 + 1), IntegratorLadder((dt0, dt1, dt_out), (K0, K1))))
    candidates.sort(key=lambda c: (c[0], c[1].levels))
    for _, lad in candidates:
        rep = check_ladder(spectrum, lad, margin)
        if rep.passed:
            return lad
        if best_report is None or rep.worst_margin > best_report.worst_margin:
            best_report = rep
    blocking = best_report.offenders if best_report else list(fast)
    raise InfeasibleLadder(f"no ladder with K <= {max_count} reaches margin {margin}", blocking)


def spectrum_report(spectrum: SpectrumEstimate, ladder: IntegratorLadder | None = None,
                    margin: float = 0.0) -> dict:
    out = {
        "count": int(spectrum.values.size),
        "clusters": [
            {"name": name, "size": size,
             "min_abs": float(np.abs(spectrum.cluster(k)).min()),
             "max_abs": float(np.abs(spectrum.cluster(k)).max())}
            for k, (name, size) in enumerate(zip(spectrum.names, spectrum.sizes()))
        ],
        "kernel_size": int(spectrum.kernel.sum()),
        "conjugate_mismatch": spectrum.conjugate_mismatch(),
        "state": spectrum.state,
    }
    if ladder is not None:
        out["ladder"] = {"steps": list(ladder.steps), "inner_counts": list(ladder.inner_counts)}
        out["check"] = check_ladder(spectrum, ladder, margin).to_dict()
    return out


def write_spectrum_json(path: str | Path, report: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report, indent=2, default=float) + "\n")
    return path


def write_eigenvalue_csv(path: str | Path, spectrum: SpectrumEstimate, dt0: float | None = None) -> Path:
    """Columns ``re, im, abs, cluster`` (plus the ``dt_0``-scaled pair when ``dt0`` is given)."""
    path = Path(path)
    names = spectrum.names
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        head = ["re", "im", "abs", "cluster"]
        if dt0 is not None:
            head += ["scaled_re", "scaled_im"]
        w.writerow(head)
        for lam, lab in zip(spectrum.values, spectrum.labels):
            row = [f"{lam.real:.17g}", f"{lam.imag:.17g}", f"{abs(lam):.17g}", names[lab]]
            if dt0 is not None:
                row += [f"{lam.real * dt0:.17g}", f"{lam.imag * dt0:.17g}"]
            w.writerow(row)
    return path
