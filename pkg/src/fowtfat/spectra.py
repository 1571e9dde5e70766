"""Input power spectra on a shared frequency grid.

JONSWAP for waves and the IEC Kaimal form for turbulent wind, both as
one-sided spectral densities.  The internal frequency convention is angular
frequency [rad/s]; densities are converted to the Hz convention only where
fatigue moments are taken (``to_hz``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

RAD_PER_SEC = "rad/s"
HZ = "Hz"

# IEC 61400-1 Kaimal defaults for hub heights above 60 m:
# turbulence scale parameter 42 m, longitudinal integral scale 8.1 * 42 m.
DEFAULT_TURBULENCE_INTENSITY = 0.14
DEFAULT_WIND_LENGTH_SCALE = 8.1 * 42.0


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing angular frequencies [rad/s]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("frequency grid must be a 1-D array with >= 2 points")
        if values[0] <= 0.0:
            raise ValueError("frequency grid must start above zero")
        if np.any(np.diff(values) <= 0.0):
            raise ValueError("frequency grid must be strictly increasing")
        object.__setattr__(self, "values", values)

    @classmethod
    def default(cls, omega_min: float = 0.05, omega_max: float = 6.3,
                n_points: int = 500) -> "FrequencyGrid":
        """Default grid; covers the tower resonance band (2-4 s periods)."""
        return cls(np.linspace(omega_min, omega_max, n_points))

    @property
    def n_points(self) -> int:
        return self.values.size

    def __eq__(self, other):
        return isinstance(other, FrequencyGrid) and np.array_equal(
            self.values, other.values)

    def __hash__(self):
        return hash((self.values.size, float(self.values[0]), float(self.values[-1])))


@dataclass(frozen=True, eq=False)
class Psd:
    """One-sided spectral density on a frequency grid.

    ``convention`` records whether ``grid``/``values`` are in rad/s or Hz;
    conversion multiplies ordinates by 2*pi exactly once, so a round trip is
    the identity.
    """

    grid: FrequencyGrid
    values: np.ndarray
    unit: str = ""
    convention: str = RAD_PER_SEC

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.values.shape:
            raise ValueError("PSD ordinates must match the grid length")
        if np.any(values < 0.0):
            raise ValueError("PSD ordinates must be non-negative")
        if self.convention not in (RAD_PER_SEC, HZ):
            raise ValueError(f"unknown frequency convention {self.convention!r}")
        object.__setattr__(self, "values", values)

    def to_hz(self) -> "Psd":
        """Same density expressed per Hz: f = omega/(2 pi), G(f) = 2 pi S(omega)."""
        if self.convention == HZ:
            return self
        return Psd(FrequencyGrid(self.grid.values / (2.0 * np.pi)),
                   self.values * (2.0 * np.pi), self.unit, HZ)

    def to_rad(self) -> "Psd":
        if self.convention == RAD_PER_SEC:
            return self
        return Psd(FrequencyGrid(self.grid.values * (2.0 * np.pi)),
                   self.values / (2.0 * np.pi), self.unit, RAD_PER_SEC)

    def scaled(self, factor: float) -> "Psd":
        return Psd(self.grid, self.values * factor, self.unit, self.convention)

    def export(self, path) -> None:
        """Two-column delimited text: frequency, ordinate."""
        header = f"frequency[{self.convention}] density[{self.unit or 'unit^2*s'}]"
        np.savetxt(path, np.column_stack([self.grid.values, self.values]),
                   header=header)


def zero_psd(grid: FrequencyGrid, unit: str = "") -> Psd:
    return Psd(grid, np.zeros(grid.n_points), unit)


def jonswap(hs: float, tp: float, grid: FrequencyGrid,
            gamma_peak: float = 3.3) -> Psd:
    """JONSWAP wave-elevation spectrum [m^2 s/rad].

    Standard peak-enhanced Pierson-Moskowitz form with the
    (1 - 0.287 ln gamma) normalization, so that the integrated zeroth
    moment is Hs^2/16 to within a couple of percent on the default grid.
    """
    if hs < 0.0:
        raise ValueError("significant wave height must be >= 0")
    if tp <= 0.0:
        raise ValueError("peak period must be positive")
    omega = grid.values
    if hs == 0.0:
        return zero_psd(grid, "m^2")
    omega_p = 2.0 * np.pi / tp
    if omega_p < omega[0] or omega_p > omega[-1]:
        warnings.warn(
            f"JONSWAP peak at {omega_p:.3f} rad/s lies outside the grid "
            f"[{omega[0]:.3f}, {omega[-1]:.3f}]; spectrum is truncated",
            stacklevel=2)
    sigma = np.where(omega <= omega_p, 0.07, 0.09)
    peak_shape = gamma_peak ** np.exp(-0.5 * ((omega - omega_p) / (sigma * omega_p)) ** 2)
    pm = (5.0 / 16.0) * hs ** 2 * omega_p ** 4 * omega ** -5 \
        * np.exp(-1.25 * (omega / omega_p) ** -4)
    values = pm * (1.0 - 0.287 * np.log(gamma_peak)) * peak_shape
    return Psd(grid, values, "m^2")


def kaimal(v_hub: float, grid: FrequencyGrid,
           turbulence_intensity: float = DEFAULT_TURBULENCE_INTENSITY,
           length_scale: float = DEFAULT_WIND_LENGTH_SCALE) -> Psd:
    """IEC Kaimal wind-speed spectrum [(m/s)^2 s/rad].

    The raw Kaimal form keeps a large variance fraction below the default
    grid's lowest frequency, so ordinates are rescaled on the truncated grid
    to carry the full variance (TI * V)^2; the spectral shape is unchanged.
    """
    if v_hub <= 0.0:
        raise ValueError("hub wind speed must be positive")
    if turbulence_intensity < 0.0:
        raise ValueError("turbulence intensity must be >= 0")
    if turbulence_intensity == 0.0:
        return zero_psd(grid, "(m/s)^2")
    sigma_u = turbulence_intensity * v_hub
    f = grid.values / (2.0 * np.pi)
    shape_hz = 4.0 * sigma_u ** 2 * (length_scale / v_hub) \
        / (1.0 + 6.0 * f * length_scale / v_hub) ** (5.0 / 3.0)
    values = shape_hz / (2.0 * np.pi)
    variance_on_grid = np.trapz(values, grid.values)
    return Psd(grid, values * (sigma_u ** 2 / variance_on_grid), "(m/s)^2")


def integrate(psd: Psd, j: int = 0) -> float:
    """Spectral moment m_j = integral of f^j G(f) df (Hz convention).

    Moment orders follow the fatigue usage: j in {0, 1, 2, 4}.  m_0 is
    convention-independent; higher moments are taken in Hz.
    """
    if j not in (0, 1, 2, 4):
        raise ValueError("moment order must be one of 0, 1, 2, 4")
    g = psd.to_hz()
    f = g.grid.values
    return float(np.trapz(f ** j * g.values, f))
