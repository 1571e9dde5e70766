"""Metocean statistics: ingestion, wind binning, joint KDE, sea-state selection.

Hourly records of 10-m wind speed, significant wave height and peak period
are converted to hub height with a power-law profile, partitioned into four
turbine operating bins, and each bin's (Hs, Tp) population is described by a
Gaussian-product kernel density on a regular grid.  Eight representative sea
states per bin are picked from density-weighted centers of a 4x2 partition
along the two principal components of the standardized data.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)

N_BINS = 4
BIN_LABELS = ("below cut-in", "below rated", "near rated", "above rated")
DEFAULT_BIN_EDGES = (3.0, 10.5, 12.4)
DEFAULT_HUB_HEIGHT = 90.0
DEFAULT_REF_HEIGHT = 10.0
DEFAULT_SHEAR_EXPONENT = 0.14
BANDWIDTH_FLOOR = 1e-3


@dataclass(frozen=True)
class MetoceanRecord:
    """One hourly sea-state observation."""

    timestamp: datetime
    u10: float   # mean wind speed at 10 m [m/s]
    hs: float    # significant wave height [m]
    tp: float    # wave peak period [s]

    def __post_init__(self):
        if self.u10 < 0.0:
            raise ValueError("u10 must be >= 0")
        if self.hs < 0.0:
            raise ValueError("hs must be >= 0")
        if self.tp <= 0.0:
            raise ValueError("tp must be positive")


@dataclass
class IngestResult:
    records: list[MetoceanRecord]
    rejected: list[tuple[int, str]]   # (line number, reason)

    @property
    def n_total(self) -> int:
        return len(self.records) + len(self.rejected)


def ingest_records(path, max_reject_fraction: float = 0.10) -> IngestResult:
    """Read a delimited-text metocean file (header: timestamp,u10,hs,tp).

    Malformed rows are collected with their line numbers rather than
    aborting, unless they exceed ``max_reject_fraction`` of all rows.
    """
    records: list[MetoceanRecord] = []
    rejected: list[tuple[int, str]] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot open metocean file {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        expected = {"timestamp", "u10", "hs", "tp"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise ConfigError(
                f"metocean file must have columns {sorted(expected)}, "
                f"got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                records.append(MetoceanRecord(
                    timestamp=datetime.fromisoformat(row["timestamp"]),
                    u10=float(row["u10"]),
                    hs=float(row["hs"]),
                    tp=float(row["tp"])))
            except (TypeError, ValueError) as exc:
                rejected.append((lineno, str(exc)))
    result = IngestResult(records, rejected)
    if result.n_total == 0:
        raise ConfigError(f"metocean file {path} contains no data rows")
    if len(rejected) > max_reject_fraction * result.n_total:
        raise ConfigError(
            f"{len(rejected)} of {result.n_total} rows malformed "
            f"(> {max_reject_fraction:.0%}); first: line {rejected[0][0]}: "
            f"{rejected[0][1]}")
    if rejected:
        log.warning("rejected %d malformed rows (lines %s%s)", len(rejected),
                    ", ".join(str(ln) for ln, _ in rejected[:5]),
                    ", ..." if len(rejected) > 5 else "")
    log.info("ingested %d metocean records from %s", len(records), path)
    return result


def to_hub_height(u10, z_hub: float = DEFAULT_HUB_HEIGHT,
                  z_ref: float = DEFAULT_REF_HEIGHT,
                  alpha: float = DEFAULT_SHEAR_EXPONENT):
    """Power-law profile: V = u10 (z_hub/z_ref)^alpha."""
    if z_hub <= 0.0 or z_ref <= 0.0:
        raise ValueError("heights must be positive")
    u10 = np.asarray(u10, dtype=float)
    if np.any(u10 < 0.0):
        raise ValueError("u10 must be >= 0")
    v = u10 * (z_hub / z_ref) ** alpha
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class WindBinSpec:
    """Four wind bins on hub-height speed, left-closed right-open.

    ``representatives`` may be given explicitly; otherwise the
    probability-weighted mean hub speed of each bin's members is used.
    """

    edges: tuple = DEFAULT_BIN_EDGES
    representatives: tuple | None = None
    labels: tuple = BIN_LABELS

    def __post_init__(self):
        if len(self.edges) != 3 or np.any(np.diff(self.edges) <= 0.0):
            raise ValueError("need 3 strictly increasing bin edges")
        if self.representatives is not None and len(self.representatives) != N_BINS:
            raise ValueError(f"need {N_BINS} representative wind speeds")

    def bin_index(self, v_hub) -> np.ndarray:
        """0: below cut-in, 1: below rated, 2: near rated, 3: above rated."""
        return np.searchsorted(np.asarray(self.edges), np.asarray(v_hub),
                               side="right")


@dataclass
class BinAssignment:
    subsets: list[list[MetoceanRecord]]
    probabilities: np.ndarray
    v_hub: list[np.ndarray]          # hub-height wind per subset
    representatives: np.ndarray      # representative hub wind speed per bin

    @property
    def empty_bins(self) -> list[int]:
        return [i for i, s in enumerate(self.subsets) if not s]


def assign_bins(records: list[MetoceanRecord], spec: WindBinSpec | None = None,
                z_hub: float = DEFAULT_HUB_HEIGHT,
                z_ref: float = DEFAULT_REF_HEIGHT,
                alpha: float = DEFAULT_SHEAR_EXPONENT) -> BinAssignment:
    """Partition records into the four wind bins (exhaustive and disjoint)."""
    spec = spec or WindBinSpec()
    if not records:
        raise ValueError("no records to bin")
    v = to_hub_height(np.array([r.u10 for r in records]), z_hub, z_ref, alpha)
    idx = spec.bin_index(v)
    subsets = [[] for _ in range(N_BINS)]
    v_sub = [[] for _ in range(N_BINS)]
    for rec, k, vk in zip(records, idx, v):
        subsets[k].append(rec)
        v_sub[k].append(vk)
    probabilities = np.array([len(s) for s in subsets], dtype=float) / len(records)
    if spec.representatives is not None:
        reps = np.asarray(spec.representatives, dtype=float)
    else:
        reps = np.array([np.mean(vs) if vs else np.nan for vs in v_sub])
    for k in range(N_BINS):
        if not subsets[k]:
            log.warning("wind bin %d (%s) is empty", k, spec.labels[k])
    return BinAssignment(subsets=subsets, probabilities=probabilities,
                         v_hub=[np.asarray(vs) for vs in v_sub],
                         representatives=reps)


@dataclass
class JointDensityGrid:
    """Bivariate KDE of (Hs, Tp) for one wind bin, on a regular grid.

    ``cell_mass`` is density x cell area renormalized to sum to 1 on the
    truncated grid.  The sample arrays and bandwidths are retained so that
    the KDE mixture can be sampled exactly (Monte Carlo baseline).
    """

    bin_index: int
    hs_grid: np.ndarray
    tp_grid: np.ndarray
    density: np.ndarray        # (n_hs, n_tp), >= 0
    cell_mass: np.ndarray      # (n_hs, n_tp), sums to 1
    bin_probability: float
    h1: float
    h2: float
    hs_data: np.ndarray
    tp_data: np.ndarray

    @property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.hs_grid, self.tp_grid, indexing="ij")

    def cells(self) -> np.ndarray:
        """Flat (n_cells, 3) array of (hs, tp, cell_mass)."""
        hs_mesh, tp_mesh = self.mesh
        return np.column_stack([hs_mesh.ravel(), tp_mesh.ravel(),
                                self.cell_mass.ravel()])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw (hs, tp) pairs from the KDE mixture (rejecting hs<=0, tp<=0)."""
        out = np.empty((n, 2))
        filled = 0
        while filled < n:
            take = n - filled
            idx = rng.integers(0, self.hs_data.size, size=take)
            hs = self.hs_data[idx] + self.h1 * rng.standard_normal(take)
            tp = self.tp_data[idx] + self.h2 * rng.standard_normal(take)
            ok = (hs > 0.0) & (tp > 0.0)
            kept = np.count_nonzero(ok)
            out[filled:filled + kept] = np.column_stack([hs[ok], tp[ok]])
            filled += kept
        return out

    def to_json_dict(self) -> dict:
        return {
            "bin_index": self.bin_index,
            "bin_probability": self.bin_probability,
            "hs_grid": self.hs_grid.tolist(),
            "tp_grid": self.tp_grid.tolist(),
            "density": self.density.tolist(),
            "cell_mass": self.cell_mass.tolist(),
            "bandwidths": [self.h1, self.h2],
        }


def scott_bandwidth(values: np.ndarray) -> float:
    """Scott's rule for a bivariate KDE: h = sigma * n^(-1/6)."""
    h = np.std(values) * values.size ** (-1.0 / 6.0)
    return max(float(h), BANDWIDTH_FLOOR)


def fit_kde(records: list[MetoceanRecord], bin_index: int,
            bin_probability: float, resolution: int = 50) -> JointDensityGrid:
    """Gaussian-product KDE of a bin's (Hs, Tp) on a regular grid.

    Bandwidths follow Scott's rule per dimension (floored for degenerate
    data); the grid spans the data range +/- 3 bandwidths.
    """
    if len(records) < 10:
        raise ValueError(f"bin {bin_index}: need >= 10 records for a KDE, "
                         f"got {len(records)}")
    hs = np.array([r.hs for r in records])
    tp = np.array([r.tp for r in records])
    h1 = scott_bandwidth(hs)
    h2 = scott_bandwidth(tp)
    # grid spans the data +/- 3 bandwidths, clamped to physical values
    hs_grid = np.linspace(max(hs.min() - 3.0 * h1, 1e-3),
                          hs.max() + 3.0 * h1, resolution)
    tp_grid = np.linspace(max(tp.min() - 3.0 * h2, 1e-2),
                          tp.max() + 3.0 * h2, resolution)
    # separable Gaussian product kernel: density = Kx @ Ky^T / (n h1 h2)
    kx = np.exp(-0.5 * ((hs_grid[:, None] - hs[None, :]) / h1) ** 2) \
        / np.sqrt(2.0 * np.pi)
    ky = np.exp(-0.5 * ((tp_grid[:, None] - tp[None, :]) / h2) ** 2) \
        / np.sqrt(2.0 * np.pi)
    density = kx @ ky.T / (hs.size * h1 * h2)
    cell_area = (hs_grid[1] - hs_grid[0]) * (tp_grid[1] - tp_grid[0])
    raw_mass = density * cell_area
    cell_mass = raw_mass / raw_mass.sum()
    return JointDensityGrid(bin_index=bin_index, hs_grid=hs_grid,
                            tp_grid=tp_grid, density=density,
                            cell_mass=cell_mass,
                            bin_probability=bin_probability,
                            h1=h1, h2=h2, hs_data=hs, tp_data=tp)


@dataclass(frozen=True)
class SeaState:
    """A stationary (V, Hs, Tp) condition with its occurrence probability mass."""

    bin_index: int
    v_hub: float
    hs: float
    tp: float
    prob_mass: float = 0.0

    def __post_init__(self):
        if self.prob_mass < 0.0:
            raise ValueError("probability mass must be >= 0")


def _principal_axes(hs: np.ndarray, tp: np.ndarray):
    """Standardization parameters and PCA rotation with fixed sign convention."""
    mean = np.array([hs.mean(), tp.mean()])
    std = np.maximum(np.array([hs.std(), tp.std()]), 1e-9)
    z = (np.column_stack([hs, tp]) - mean) / std
    cov = np.cov(z, rowvar=False) if z.shape[0] > 1 else np.eye(2)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    axes = eigvecs[:, order]
    for j in range(2):
        pivot = np.argmax(np.abs(axes[:, j]))
        if axes[pivot, j] < 0.0:
            axes[:, j] = -axes[:, j]
    return mean, std, axes


def select_representatives(grid: JointDensityGrid,
                           records: list[MetoceanRecord],
                           v_hub: float) -> list[SeaState]:
    """Eight density-weighted representative sea states for one wind bin.

    The first principal component of the standardized data is split into 4
    equal-probability intervals by empirical quantiles, the second into 2;
    each of the 8 cells contributes the density-weighted centroid of the KDE
    grid points that project into it.  Empty cells fall back to the cell's
    quantile-box center.
    """
    hs = np.array([r.hs for r in records])
    tp = np.array([r.tp for r in records])
    mean, std, axes = _principal_axes(hs, tp)

    def project(points: np.ndarray) -> np.ndarray:
        return ((points - mean) / std) @ axes

    scores = project(np.column_stack([hs, tp]))
    q1 = np.quantile(scores[:, 0], [0.0, 0.25, 0.5, 0.75, 1.0])
    q2 = np.quantile(scores[:, 1], [0.0, 0.5, 1.0])
    # membership bounds: outer intervals extended so every grid point lands
    # in exactly one of the 4x2 cells; box centers keep the finite quantiles
    b1 = np.array([-np.inf, q1[1], q1[2], q1[3], np.inf])
    b2 = np.array([-np.inf, q2[1], np.inf])

    cells = grid.cells()
    grid_scores = project(cells[:, :2])
    mass = cells[:, 2]

    states = []
    for i in range(4):
        in1 = (grid_scores[:, 0] >= b1[i]) & (grid_scores[:, 0] < b1[i + 1])
        for j in range(2):
            in2 = (grid_scores[:, 1] >= b2[j]) & (grid_scores[:, 1] < b2[j + 1])
            sel = in1 & in2
            cell_mass = mass[sel]
            if cell_mass.sum() > 0.0:
                hs_rep, tp_rep = (cells[sel, :2] * cell_mass[:, None]).sum(0) \
                    / cell_mass.sum()
                prob = float(cell_mass.sum()) * grid.bin_probability
            else:
                center = np.array([(q1[i] + q1[i + 1]) / 2.0,
                                   (q2[j] + q2[j + 1]) / 2.0])
                hs_rep, tp_rep = (center @ axes.T) * std + mean
                prob = 0.0
                log.info("bin %d PCA cell (%d,%d) empty; using box center",
                         grid.bin_index, i, j)
            states.append(SeaState(bin_index=grid.bin_index, v_hub=v_hub,
                                   hs=float(hs_rep), tp=float(tp_rep),
                                   prob_mass=prob))
    return states


def export_sea_states(states: list[SeaState], path) -> None:
    payload = [{"bin_index": s.bin_index, "v_hub": s.v_hub, "hs": s.hs,
                "tp": s.tp, "prob_mass": s.prob_mass} for s in states]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


# ---------------------------------------------------------------------------
# Synthetic site (substitute for the proprietary measurement campaign)
# ---------------------------------------------------------------------------

def synthetic_site(seed: int, n_records: int = 20000) -> list[MetoceanRecord]:
    """Hourly records with a plausible joint wind/wave structure.

    Weibull wind at 10 m, fetch-limited wave height correlated with wind,
    and peak period growing with sqrt(Hs); deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    u10 = 6.0 * rng.weibull(2.0, n_records)
    hs = np.clip(0.25 + 0.028 * u10 ** 1.8 * np.exp(rng.normal(0.0, 0.35, n_records)),
                 0.05, None)
    tp = np.clip(4.2 * np.sqrt(np.clip(hs, 0.0, None) / 1.0)
                 * np.exp(rng.normal(0.0, 0.15, n_records)) + 1.5, 1.8, None)
    base = datetime(1993, 1, 1)
    step = timedelta(hours=1)
    return [MetoceanRecord(timestamp=base + int(h) * step,
                           u10=float(u), hs=float(w), tp=float(t))
            for h, u, w, t in zip(range(n_records), u10, hs, tp)]


def write_site_csv(records: list[MetoceanRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "u10", "hs", "tp"])
        for r in records:
            writer.writerow([r.timestamp.isoformat(), repr(r.u10), repr(r.hs),
                             repr(r.tp)])
