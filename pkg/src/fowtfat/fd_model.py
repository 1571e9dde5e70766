"""Coupled 7-DoF frequency-domain response model.

DoF order: surge, sway, heave, roll, pitch, yaw, tower-top fore-aft
deflection (indices 0..6).  Per frequency the complex system

    [-w^2 (A(w) + M_F + M_T) + i w (B(w) + B_T + B_M) + C] q = forcing

is solved for the wave-diffraction and wind load cases separately; the
response PSDs add because the two forcings are treated as statistically
independent.  The forcing amplitude conventions sqrt(2 S_waves dw) for waves
and sqrt(S_wind dw) for wind cancel against the PSD recovery |q|^2/(2 dw),
so the assembled response spectra are

    S_q(w) = |H X|^2 S_waves(w) + 0.5 |H F_d|^2 S_wind(w)

with the printed factor-2 asymmetry between the channels preserved.

Quadratic (Morison) drag enters through the diagonal matrix B_M, linearized
statistically: B_M,kk = sqrt(8/pi) * sigma_vel_k * q_d_k, solved by fixed
point iteration on the response velocity standard deviations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, SchemaError, SingularSystemError
from .spectra import FrequencyGrid, Psd

N_DOF = 7
CROSS_DOFS = (0, 2, 4, 6)  # surge, heave, pitch, tower (1,3,5,7 in 1-based)
PA2_TO_MPA2 = 1e-12

TABLES_SCHEMA_VERSION = 1


def _check_symmetric(mat: np.ndarray, name: str, tol: float = 1e-8) -> None:
    scale = np.abs(mat).max() or 1.0
    if np.abs(mat - mat.swapaxes(-1, -2)).max() > tol * scale:
        raise ValueError(f"{name} must be symmetric")


@dataclass(frozen=True)
class CoefficientTables:
    """Frequency-dependent system matrices and forcing vectors.

    ``a``/``b`` are (n, 7, 7) per-frequency added mass and radiation damping;
    ``x``/``f_d`` are (n, 7) complex diffraction and aerodynamic transfer
    vectors (per unit wave amplitude / wind-speed amplitude); the remaining
    7x7 blocks are frequency independent.  ``drag`` holds the per-DoF
    quadratic drag coefficients feeding the Borgman matrix.
    """

    grid: FrequencyGrid
    a: np.ndarray
    b: np.ndarray
    x: np.ndarray
    m_f: np.ndarray
    m_t: np.ndarray
    b_t: np.ndarray
    c_h: np.ndarray
    c_t: np.ndarray
    c_moor: np.ndarray
    f_d: np.ndarray
    drag: np.ndarray

    def __post_init__(self):
        n = self.grid.n_points
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=complex))
        object.__setattr__(self, "f_d", np.asarray(self.f_d, dtype=complex))
        object.__setattr__(self, "drag", np.asarray(self.drag, dtype=float))
        for name in ("m_f", "m_t", "b_t", "c_h", "c_t", "c_moor"):
            object.__setattr__(self, name, np.asarray(getattr(self, name),
                                                      dtype=float))
        if self.a.shape != (n, N_DOF, N_DOF) or self.b.shape != (n, N_DOF, N_DOF):
            raise ValueError("A and B must have shape (n_freq, 7, 7)")
        if self.x.shape != (n, N_DOF) or self.f_d.shape != (n, N_DOF):
            raise ValueError("X and F_d must have shape (n_freq, 7)")
        if self.drag.shape != (N_DOF,):
            raise ValueError("drag must be a length-7 vector")
        self.validate()

    def validate(self) -> None:
        _check_symmetric(self.a, "A(w)")
        _check_symmetric(self.b, "B(w)")
        mass = self.mass_matrix
        _check_symmetric(mass, "M_F + M_T")
        _check_symmetric(self.stiffness_matrix, "C_H + C_T + C_Moor")
        if np.linalg.eigvalsh(mass).min() <= 0.0:
            raise ValueError("M_F + M_T must be positive definite")
        if np.linalg.eigvalsh(self.stiffness_matrix).min() < -1e-9 * np.abs(
                self.stiffness_matrix).max():
            raise ValueError("total stiffness must be positive semi-definite")
        b_eigs = np.linalg.eigvalsh(self.b)
        if b_eigs.min() < -1e-9 * max(np.abs(self.b).max(), 1.0):
            raise ValueError("B(w) must be positive semi-definite at every w")
        if np.any(self.drag < 0.0):
            raise ValueError("drag coefficients must be >= 0")

    @property
    def mass_matrix(self) -> np.ndarray:
        return self.m_f + self.m_t

    @property
    def stiffness_matrix(self) -> np.ndarray:
        return self.c_h + self.c_t + self.c_moor


@dataclass(frozen=True)
class ResponseSpectra:
    """Per-DoF response auto-spectra plus the (1,3,5,7) cross-spectral block."""

    grid: FrequencyGrid
    auto: np.ndarray              # (n, 7) real, >= 0
    cross: np.ndarray             # (n, 4, 4) complex, Hermitian, DoFs (1,3,5,7)
    sigma: np.ndarray = field(init=False)

    def __post_init__(self):
        auto = np.asarray(self.auto, dtype=float)
        if np.any(auto < -1e-30):
            raise ValueError("auto-spectra must be non-negative")
        object.__setattr__(self, "auto", np.clip(auto, 0.0, None))
        object.__setattr__(self, "cross", np.asarray(self.cross, dtype=complex))
        sigma = np.sqrt(np.trapz(self.auto, self.grid.values, axis=0))
        object.__setattr__(self, "sigma", sigma)

    def velocity_std(self) -> np.ndarray:
        omega = self.grid.values[:, None]
        return np.sqrt(np.trapz(omega ** 2 * self.auto, self.grid.values, axis=0))

    def dof_psd(self, dof: int, unit: str = "") -> Psd:
        return Psd(self.grid, self.auto[:, dof], unit)


def _assemble_lhs(tables: CoefficientTables, b_m_diag: np.ndarray) -> np.ndarray:
    omega = tables.grid.values[:, None, None]
    mass = tables.a + tables.mass_matrix
    damping = tables.b + tables.b_t + np.diag(b_m_diag)
    return (-omega ** 2 * mass + 1j * omega * damping
            + tables.stiffness_matrix).astype(complex)


def _solve_transfers(tables: CoefficientTables,
                     b_m_diag: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Complex transfer vectors H X and H F_d, shape (n, 7) each."""
    lhs = _assemble_lhs(tables, b_m_diag)
    rhs = np.stack([tables.x, tables.f_d], axis=-1)
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        for k, omega in enumerate(tables.grid.values):
            try:
                np.linalg.solve(lhs[k], rhs[k])
            except np.linalg.LinAlgError:
                raise SingularSystemError(
                    f"singular system matrix at omega = {omega:.6g} rad/s") from None
        raise
    if not np.isfinite(sol).all():
        bad = np.flatnonzero(~np.isfinite(sol).all(axis=(1, 2)))[0]
        raise SingularSystemError(
            f"non-finite response at omega = {tables.grid.values[bad]:.6g} rad/s")
    return sol[:, :, 0], sol[:, :, 1]


def solve_coupled(tables: CoefficientTables, s_waves: Psd, s_wind: Psd,
                  b_m_diag: np.ndarray | None = None) -> ResponseSpectra:
    """Solve the coupled system for given input spectra and drag state.

    ``b_m_diag`` is the current diagonal of the linearized drag matrix
    (zeros if omitted); use :func:`borgman_iterate` for the converged case.
    """
    for name, psd in (("waves", s_waves), ("wind", s_wind)):
        if psd.grid != tables.grid or psd.convention != "rad/s":
            raise ValueError(f"{name} PSD must live on the tables' rad/s grid")
    if b_m_diag is None:
        b_m_diag = np.zeros(N_DOF)
    h_wave, h_wind = _solve_transfers(tables, np.asarray(b_m_diag, dtype=float))
    sw = s_waves.values[:, None]
    su = s_wind.values[:, None]
    auto = np.abs(h_wave) ** 2 * sw + 0.5 * np.abs(h_wind) ** 2 * su
    hw = h_wave[:, CROSS_DOFS]
    hu = h_wind[:, CROSS_DOFS]
    cross = (hw[:, :, None] * hw[:, None, :].conj() * sw[:, :, None]
             + 0.5 * hu[:, :, None] * hu[:, None, :].conj() * su[:, :, None])
    return ResponseSpectra(tables.grid, auto, cross)


def borgman_iterate(tables: CoefficientTables, s_waves: Psd, s_wind: Psd,
                    tol: float = 1e-4, max_iter: int = 50,
                    seed_velocity: float = 1e-3,
                    ) -> tuple[ResponseSpectra, list[np.ndarray]]:
    """Fixed-point iteration on the statistically linearized drag matrix.

    Starting from a small seed motion, alternates coupled solves with the
    Borgman update B_M,kk = sqrt(8/pi) sigma_vel_k q_d_k until the largest
    relative change of any per-DoF displacement standard deviation drops
    below ``tol``.  Returns the converged spectra and the B_M history.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    coef = np.sqrt(8.0 / np.pi)
    if not np.any(tables.drag > 0.0):
        resp = solve_coupled(tables, s_waves, s_wind)
        return resp, [np.zeros(N_DOF)]
    b_m = coef * seed_velocity * tables.drag
    history = [b_m.copy()]
    sigma_prev = None
    for _ in range(max_iter):
        resp = solve_coupled(tables, s_waves, s_wind, b_m)
        sigma = resp.sigma
        b_m = coef * resp.velocity_std() * tables.drag
        history.append(b_m.copy())
        if sigma_prev is not None:
            denom = np.where(sigma > 0.0, sigma, 1.0)
            residual = np.abs(sigma - sigma_prev) / denom
            if residual.max() < tol:
                return resp, history
        sigma_prev = sigma
    raise ConvergenceError(
        f"Borgman iteration did not converge in {max_iter} iterations; "
        f"last two B_M diagonals: {history[-2]}, {history[-1]}")


# ---------------------------------------------------------------------------
# Stress transfer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructureGeometry:
    """Hot-spot geometry: mooring fairlead and tower base."""

    x_fair: float = 40.87            # fairlead radius from platform axis [m]
    z_fair: float = -14.0            # fairlead depth below MSL [m]
    k_cable: np.ndarray = field(
        default_factory=lambda: np.array([[4.0e4, 8.0e3], [8.0e3, 3.0e4]]))
    a_moor: float = np.pi * 0.0766 ** 2 / 4.0   # chain cross-section [m^2]
    h_tower: float = 77.6            # deformable tower length [m]
    tower_od: float = 6.5            # tower base outer diameter [m]
    tower_wall: float = 0.027        # tower base wall thickness [m]
    c_tot77: float = 2.7e6           # total tower-top stiffness [N/m]

    def __post_init__(self):
        object.__setattr__(self, "k_cable", np.asarray(self.k_cable, dtype=float))
        if self.k_cable.shape != (2, 2):
            raise ValueError("cable stiffness must be 2x2")
        if self.a_moor <= 0.0 or self.h_tower <= 0.0:
            raise ValueError("geometry lengths must be positive")

    @property
    def w_tower(self) -> float:
        """Section modulus of the annular tower base, W = pi (Do^4-Di^4)/(32 Do)."""
        d_o = self.tower_od
        d_i = d_o - 2.0 * self.tower_wall
        return np.pi * (d_o ** 4 - d_i ** 4) / (32.0 * d_o)

    @classmethod
    def from_tables(cls, tables: CoefficientTables, **overrides) -> "StructureGeometry":
        overrides.setdefault("c_tot77", float(tables.stiffness_matrix[6, 6]))
        return cls(**overrides)


def fairlead_stress_psd(resp: ResponseSpectra, geom: StructureGeometry) -> Psd:
    """Fairlead tension stress PSD [MPa^2 s/rad].

    Small-angle linearization of the fairlead kinematics:
    q_F = [q1; q3] + q5 [-z_F; x_F]; tension components follow through the
    2x2 cable stiffness, and the scalar tension PSD is the trace of the
    mapped cross-spectral block.
    """
    if resp.cross.shape[1] < 3:
        raise ValueError("cross-spectra for DoFs (1,3,5) are required")
    lever = np.array([[1.0, 0.0, -geom.z_fair],
                      [0.0, 1.0, geom.x_fair]])
    mapping = geom.k_cable @ lever            # (2, 3): (q1,q3,q5) -> (H_F,V_F)
    s135 = resp.cross[:, :3, :3]
    s_hv = np.einsum("ij,njk,lk->nil", mapping, s135, mapping.conj())
    s_tension = np.real(s_hv[:, 0, 0] + s_hv[:, 1, 1])
    return Psd(resp.grid, np.clip(s_tension, 0.0, None)
               / geom.a_moor ** 2 * PA2_TO_MPA2, "MPa^2")


def towerbase_stress_psd(resp: ResponseSpectra, geom: StructureGeometry) -> Psd:
    """Tower-base bending stress PSD [MPa^2 s/rad] from the q7 auto-spectrum."""
    s_q7 = resp.auto[:, 6]
    s_moment = (geom.c_tot77 * geom.h_tower) ** 2 * s_q7
    return Psd(resp.grid, s_moment / geom.w_tower ** 2 * PA2_TO_MPA2, "MPa^2")


def rao(tables: CoefficientTables, dof: int) -> np.ndarray:
    """Complex motion transfer q_dof(w) per unit wave amplitude, wind off.

    Drag damping is left at zero (linear parked-state transfer).
    """
    if not 0 <= dof < N_DOF:
        raise ValueError("dof index must be in 0..6")
    h_wave, _ = _solve_transfers(tables, np.zeros(N_DOF))
    return h_wave[:, dof]


# ---------------------------------------------------------------------------
# Synthetic coefficient tables (substitute for panel-code / linearization data)
# ---------------------------------------------------------------------------

def synthetic_tables(seed: int, grid: FrequencyGrid | None = None
                     ) -> CoefficientTables:
    """Physically plausible coefficient tables, deterministic in ``seed``.

    Targets semi-submersible-like rigid-body periods (surge ~100 s, heave
    ~17 s, pitch ~25 s), a tower mode in the 2-4 s band, radiation damping
    that vanishes above 0.25 Hz and diffraction peaked at low frequency.
    """
    if grid is None:
        grid = FrequencyGrid.default()
    rng = np.random.default_rng(seed)
    omega = grid.values
    n = omega.size

    jitter = lambda scale=0.1, size=N_DOF: np.exp(rng.normal(0.0, scale, size))

    # rigid-body + tower natural frequencies [rad/s]
    omega_n = np.array([0.063, 0.065, 0.36, 0.24, 0.25, 0.09, 2.79]) \
        * np.exp(rng.normal(0.0, 0.04, N_DOF))
    mass_diag = np.array([1.2e7, 1.2e7, 1.4e7, 1.1e10, 1.1e10, 9.0e9, 3.5e5]) \
        * jitter(0.08)

    m_f = np.diag(mass_diag * np.array([0.8, 0.8, 0.85, 0.8, 0.8, 0.85, 0.0]))
    m_t = np.diag(mass_diag) - m_f
    # hub mass high above MSL couples surge and pitch
    m_t[0, 4] = m_t[4, 0] = 0.04 * np.sqrt(mass_diag[0] * mass_diag[4])

    # added mass: fraction of structural mass, mild frequency decay
    a_frac = np.array([0.7, 0.7, 1.0, 0.8, 0.8, 0.5, 1e-3]) * jitter(0.08)
    a_base = np.diag(a_frac * mass_diag)
    a_base[0, 4] = a_base[4, 0] = 0.05 * np.sqrt(a_base[0, 0] * a_base[4, 4])
    a_env = 0.75 + 0.5 * np.exp(-(omega / 0.9) ** 2)
    a = a_env[:, None, None] * a_base

    # stiffness placing the natural frequencies, with added mass at resonance
    a_at_res = a_frac * mass_diag * (0.75 + 0.5 * np.exp(-(omega_n / 0.9) ** 2))
    k_diag = (mass_diag + a_at_res) * omega_n ** 2
    c_total = np.diag(k_diag)
    c_total[0, 4] = c_total[4, 0] = 0.10 * np.sqrt(k_diag[0] * k_diag[4])
    c_total[4, 6] = c_total[6, 4] = 0.08 * np.sqrt(k_diag[4] * k_diag[6])
    # split: hydrostatic (heave/roll/pitch), mooring (surge/sway/yaw + the
    # surge-pitch coupling), turbine (tower + pitch-tower coupling)
    c_h = np.zeros((N_DOF, N_DOF))
    for i in (2, 3, 4):
        c_h[i, i] = 0.75 * k_diag[i]
    c_t = np.zeros((N_DOF, N_DOF))
    c_t[6, 6] = k_diag[6]
    c_t[4, 6] = c_t[6, 4] = c_total[4, 6]
    c_moor = c_total - c_h - c_t

    # radiation damping: hump in the wave band, vanishing above 0.25 Hz
    zeta_rad = np.array([0.05, 0.05, 0.02, 0.08, 0.08, 0.03, 2e-3]) * jitter(0.1)
    b_base = np.diag(2.0 * zeta_rad * np.sqrt(k_diag * (mass_diag + a_at_res)))
    omega_b = 0.55
    b_env = np.e * (omega / omega_b) ** 2 * np.exp(-(omega / omega_b) ** 2)
    b = b_env[:, None, None] * b_base

    # turbine damping (aero + structural), diagonal
    zeta_turb = np.array([0.04, 0.01, 0.005, 0.02, 0.05, 0.01, 0.015])
    b_t = np.diag(2.0 * zeta_turb * np.sqrt(k_diag * (mass_diag + a_at_res)))

    # diffraction force: magnitude decaying with frequency, deep-water phase
    x_scale = np.array([1.5e6, 3e4, 8.0e5, 6e5, 3.0e7, 6e5, 1.0e5]) * jitter(0.1)
    levers = np.array([5.0, 5.0, 2.0, 20.0, 20.0, 30.0, 40.0])
    x_mag = x_scale[None, :] * np.exp(-(omega[:, None] / 1.1) ** 2)
    x_phase = -(omega[:, None] ** 2 / 9.81) * levers[None, :]
    x = x_mag * np.exp(1j * x_phase)

    # aerodynamic transfer: thrust gradient low-passed by rotor admittance
    f_gain = np.array([1.3e5, 0.0, 2.0e3, 0.0, 1.1e7, 0.0, 9.0e4]) \
        * jitter(0.1)
    tau = 1.8
    f_d = f_gain[None, :] / (1.0 + 1j * omega[:, None] * tau)

    # quadratic drag (heave plates dominate heave/pitch); none on the tower
    drag = np.array([3e5, 3e5, 8.0e6, 6e8, 2.0e9, 2e8, 0.0]) * jitter(0.1)

    return CoefficientTables(grid=grid, a=a, b=b, x=x, m_f=m_f, m_t=m_t,
                             b_t=b_t, c_h=c_h, c_t=c_t, c_moor=c_moor,
                             f_d=f_d, drag=drag)


def diagonal_tables(grid: FrequencyGrid, mass, damping, stiffness,
                    force_amplitude) -> CoefficientTables:
    """Uncoupled tables: 7 independent SDOF oscillators, constant forcing.

    Intended for analytic verification of the solver (each DoF's transfer
    reduces to the closed-form SDOF response).
    """
    n = grid.n_points
    zeros = np.zeros((n, N_DOF, N_DOF))
    mass = np.asarray(mass, dtype=float)
    m_f = np.diag(mass)
    return CoefficientTables(
        grid=grid, a=zeros, b=zeros,
        x=np.tile(np.asarray(force_amplitude, dtype=complex), (n, 1)),
        m_f=m_f, m_t=np.zeros((N_DOF, N_DOF)),
        b_t=np.diag(np.asarray(damping, dtype=float)),
        c_h=np.diag(np.asarray(stiffness, dtype=float)),
        c_t=np.zeros((N_DOF, N_DOF)), c_moor=np.zeros((N_DOF, N_DOF)),
        f_d=np.zeros((n, N_DOF), dtype=complex), drag=np.zeros(N_DOF))


# ---------------------------------------------------------------------------
# Table (de)serialization
# ---------------------------------------------------------------------------

def _complex_to_pairs(arr: np.ndarray) -> list:
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def _pairs_to_complex(data, shape) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape != shape + (2,):
        raise SchemaError(f"complex field has shape {arr.shape}, "
                          f"expected {shape + (2,)}")
    return arr[..., 0] + 1j * arr[..., 1]


def save_tables(tables: CoefficientTables, path) -> None:
    """Write coefficient tables as schema-versioned JSON (complex as [re, im])."""
    payload = {
        "schema_version": TABLES_SCHEMA_VERSION,
        "omega": tables.grid.values.tolist(),
        "a": tables.a.tolist(),
        "b": tables.b.tolist(),
        "x": _complex_to_pairs(tables.x),
        "m_f": tables.m_f.tolist(),
        "m_t": tables.m_t.tolist(),
        "b_t": tables.b_t.tolist(),
        "c_h": tables.c_h.tolist(),
        "c_t": tables.c_t.tolist(),
        "c_moor": tables.c_moor.tolist(),
        "f_d": _complex_to_pairs(tables.f_d),
        "drag": tables.drag.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_tables(path) -> CoefficientTables:
    with open(path) as fh:
        payload = json.load(fh)
    version = payload.get("schema_version")
    if version != TABLES_SCHEMA_VERSION:
        raise SchemaError(f"unsupported tables schema_version: {version!r}")
    required = ("omega", "a", "b", "x", "m_f", "m_t", "b_t", "c_h", "c_t",
                "c_moor", "f_d", "drag")
    missing = [name for name in required if name not in payload]
    if missing:
        raise SchemaError(f"tables file missing fields: {', '.join(missing)}")
    grid = FrequencyGrid(np.asarray(payload["omega"], dtype=float))
    n = grid.n_points
    return CoefficientTables(
        grid=grid,
        a=np.asarray(payload["a"], dtype=float),
        b=np.asarray(payload["b"], dtype=float),
        x=_pairs_to_complex(payload["x"], (n, N_DOF)),
        m_f=np.asarray(payload["m_f"], dtype=float),
        m_t=np.asarray(payload["m_t"], dtype=float),
        b_t=np.asarray(payload["b_t"], dtype=float),
        c_h=np.asarray(payload["c_h"], dtype=float),
        c_t=np.asarray(payload["c_t"], dtype=float),
        c_moor=np.asarray(payload["c_moor"], dtype=float),
        f_d=_pairs_to_complex(payload["f_d"], (n, N_DOF)),
        drag=np.asarray(payload["drag"], dtype=float))
