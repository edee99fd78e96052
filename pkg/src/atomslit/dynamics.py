"""Four-level tripod dynamics behind the effective tritter.

Two approximations separate the driven 4-level atom from the 3-level
tritter model: the rotating-wave approximation and adiabatic elimination of
the excited level.  Each is checked where it can be computed exactly:

* adiabatic elimination against the time-independent RWA Hamiltonian,
  propagated with a matrix exponential;
* the RWA against direct integration of the driven Hamiltonian at a
  surrogate optical frequency (a few hundred detunings rather than 10^15 rad/s).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .qstate import as_pure_state, matrix_exponential
from .tripod import PhysicalParams, effective_hamiltonian, tritter_time

# samples per period of the fastest frequency, minimum
STEPS_PER_PERIOD = 20
EXCITED_GRID_POINTS = 1000


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class FullDrivenHamiltonian:
    """Driven tripod: ground energies 0, delta, 2 delta; excited level at omega_1 + Delta.

    ``laser_freqs`` defaults to omega_j = omega_1 - E_j, so every laser sits
    Delta below its own transition.
    """

    rabi: tuple[float, float, float]
    zeeman_ground: float
    detuning: float
    transition_freq: float
    laser_freqs: tuple[float, float, float] | None = None

    def __post_init__(self):
        if len(self.rabi) != 3:
            raise ValueError("need three Rabi frequencies")
        object.__setattr__(self, "rabi", tuple(float(x) for x in self.rabi))
        expected = self.transition_freq - np.array([0.0, 1.0, 2.0]) * self.zeeman_ground
        if self.laser_freqs is None:
            object.__setattr__(self, "laser_freqs", tuple(float(x) for x in expected))
        else:
            freqs = np.asarray(self.laser_freqs, dtype=float)
            if freqs.shape != (3,) or not np.allclose(freqs, expected, rtol=1e-12, atol=0):
                raise ValueError("laser frequencies violate the common-detuning condition")
            object.__setattr__(self, "laser_freqs", tuple(float(x) for x in freqs))

    @classmethod
    def from_params(cls, p: PhysicalParams, transition_freq: float, rabi=None) -> "FullDrivenHamiltonian":
        rabi = (p.rabi,) * 3 if rabi is None else rabi
        return cls(rabi, p.zeeman_ground, p.detuning, transition_freq)

    @property
    def energies(self) -> np.ndarray:
        d = self.zeeman_ground
        return np.array([0.0, d, 2 * d, self.transition_freq + self.detuning])

    @property
    def base_energies(self) -> np.ndarray:
        """Diagonal of the interaction-picture reference Hamiltonian H0."""
        d = self.zeeman_ground
        return np.array([0.0, d, 2 * d, self.transition_freq])


def full_hamiltonian_at(h: FullDrivenHamiltonian, t: float) -> np.ndarray:
    m = np.diag(h.energies).astype(complex)
    c = np.asarray(h.rabi) * np.cos(np.asarray(h.laser_freqs) * t)
    m[:3, 3] = c
    m[3, :3] = c
    return m


def rwa_hamiltonian(h: FullDrivenHamiltonian) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[:3, 3] = np.asarray(h.rabi) / 2
    m[3, :3] = np.asarray(h.rabi) / 2
    m[3, 3] = h.detuning
    return m


def interaction_hamiltonian_at(h: FullDrivenHamiltonian, t: float) -> np.ndarray:
    """exp(i H0 t) (H(t) - H0) exp(-i H0 t), counter-rotating terms kept."""
    e0 = h.base_energies
    m = np.zeros((4, 4), dtype=complex)
    g = np.asarray(h.rabi) * np.cos(np.asarray(h.laser_freqs) * t) * np.exp(1j * (e0[:3] - e0[3]) * t)
    m[:3, 3] = g
    m[3, :3] = g.conj()
    m[3, 3] = h.detuning
    return m


def fastest_frequency(h: FullDrivenHamiltonian) -> float:
    """Largest angular frequency present in the interaction-frame Hamiltonian."""
    e0 = h.base_energies
    detunings = e0[3] - e0[:3]
    return float(max(np.max(np.abs(np.asarray(h.laser_freqs) + detunings)), abs(h.detuning)))


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in ("rk4", "adaptive"):
            raise ValueError(f"unknown integrator {self.method!r}")
        if self.method == "rk4" and (self.dt is None or not self.dt > 0):
            raise ValueError("fixed-step integration needs dt > 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    def check_resolution(self, omega_max: float) -> None:
        if self.method == "rk4" and omega_max > 0:
            limit = 2 * np.pi / omega_max / STEPS_PER_PERIOD
            if self.dt > limit * (1 + 1e-12):
                raise IntegrationError(
                    f"dt = {self.dt:.3e} s does not resolve omega = {omega_max:.3e} rad/s "
                    f"(need dt <= {limit:.3e} s)")


def integrate_schrodinger(
    h_of_t: Callable[[float], np.ndarray],
    psi0,
    t_final: float,
    cfg: IntegratorConfig,
) -> np.ndarray:
    """Solve i d psi/dt = H(t) psi on [0, t_final]."""
    psi0 = as_pure_state(psi0, normalized=True)
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if t_final == 0:
        return np.array(psi0)
    if cfg.method == "adaptive":
        return _integrate_adaptive(h_of_t, psi0, t_final, cfg)

    n = int(np.ceil(t_final / cfg.dt - 1e-9))
    if n > cfg.max_steps:
        raise IntegrationError(f"{n} steps exceed max_steps = {cfg.max_steps}")
    dt = t_final / n
    psi = np.array(psi0, dtype=complex)
    h_start = h_of_t(0.0)
    for i in range(n):
        t = i * dt
        h_mid = h_of_t(t + dt / 2)
        h_end = h_of_t(t + dt)
        k1 = -1j * (h_start @ psi)
        k2 = -1j * (h_mid @ (psi + dt / 2 * k1))
        k3 = -1j * (h_mid @ (psi + dt / 2 * k2))
        k4 = -1j * (h_end @ (psi + dt * k3))
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        h_start = h_end
    return psi


def _integrate_adaptive(h_of_t, psi0, t_final, cfg):
    def rhs(t, y):
        return -1j * (h_of_t(t) @ y)

    sol = solve_ivp(rhs, (0.0, t_final), np.asarray(psi0, dtype=complex), method="DOP853",
                    rtol=cfg.rtol, atol=cfg.atol)
    if not sol.success:
        raise IntegrationError(sol.message)
    if sol.t.size - 1 > cfg.max_steps:
        raise IntegrationError(f"{sol.t.size - 1} steps exceed max_steps = {cfg.max_steps}")
    return sol.y[:, -1]


def infidelity(a, b) -> float:
    """1 - |<a|b>|^2 / (|a|^2 |b|^2); blind to global phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return float(1 - abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


@dataclass(frozen=True)
class EliminationReport:
    infidelity: float
    max_excited_population: float
    leakage_scale: float
    tau: float
    ground_state: np.ndarray = field(repr=False)


def adiabatic_elimination_error(p: PhysicalParams, n_samples: int = EXCITED_GRID_POINTS) -> EliminationReport:
    """Compare 4-level RWA evolution of |1> over tau with the effective tritter output.

    Both are interaction-picture states, so the comparison uses exp(-i H_eff tau)|1>.
    The infidelity is taken against the unnormalised ground-manifold projection,
    so population left in the excited level counts as error.
    """
    if not abs(p.detuning) > p.linewidth:
        raise ValueError("adiabatic elimination needs |Delta| > Gamma")
    if n_samples < EXCITED_GRID_POINTS:
        raise ValueError(f"excited-population grid needs >= {EXCITED_GRID_POINTS} points")
    tau = tritter_time(p)
    h = rwa_hamiltonian(FullDrivenHamiltonian.from_params(p, transition_freq=0.0))
    psi0 = np.array([1, 0, 0, 0], dtype=complex)

    w, v = np.linalg.eigh(h)
    c0 = v.conj().T @ psi0
    ts = np.linspace(0.0, tau, n_samples)
    states = (v @ (np.exp(-1j * np.outer(w, ts)) * c0[:, None])).T
    excited = np.abs(states[:, 3]) ** 2

    psi_tau = matrix_exponential(h, tau) @ psi0
    target = matrix_exponential(effective_hamiltonian(p), tau) @ psi0[:3]
    ground = psi_tau[:3]
    fid = abs(np.vdot(target, ground)) ** 2
    return EliminationReport(
        infidelity=float(1 - fid),
        max_excited_population=float(excited.max()),
        leakage_scale=float((p.rabi / (2 * p.detuning)) ** 2),
        tau=tau,
        ground_state=ground,
    )


@dataclass(frozen=True)
class RWAReport:
    infidelity: float
    transition_freq: float
    t_final: float
    dt: float
    steps: int


def rwa_error_scaled(
    h: FullDrivenHamiltonian,
    t_final: float | None = None,
    dt: float | None = None,
) -> RWAReport:
    """Integrate the driven Hamiltonian and compare with the RWA propagator at ``t_final``.

    The driven problem is integrated in the frame of H0 = diag(0, delta, 2 delta,
    omega_1), an exact change of variables that keeps the amplitudes slow; the
    counter-rotating terms at ~2 omega_1 are retained.  ``t_final`` defaults to
    the tritter time for the mean Rabi frequency.
    """
    if not h.transition_freq >= 20 * abs(h.detuning):
        raise ValueError("surrogate transition frequency must be at least 20 |Delta|")
    if t_final is None:
        rabi = float(np.mean(h.rabi))
        if rabi == 0:
            raise ValueError("t_final is required when the drive is off")
        t_final = 8 * np.pi * h.detuning / (9 * rabi**2)
    omega_max = fastest_frequency(h)
    limit = 2 * np.pi / omega_max / STEPS_PER_PERIOD
    dt = limit if dt is None else dt
    cfg = IntegratorConfig("rk4", dt=dt)
    cfg.check_resolution(omega_max)

    psi0 = np.array([1, 0, 0, 0], dtype=complex)
    steps = int(np.ceil(t_final / dt - 1e-9))
    psi = rk4_star(h, psi0, t_final, steps)
    ref = matrix_exponential(rwa_hamiltonian(h), t_final) @ psi0
    return RWAReport(infidelity(ref, psi), h.transition_freq, t_final, t_final / steps, steps)


def _couplings(h: FullDrivenHamiltonian, t: np.ndarray) -> np.ndarray:
    e0 = h.base_energies
    return (np.asarray(h.rabi)[None, :] * np.cos(np.outer(t, h.laser_freqs))
            * np.exp(1j * np.outer(t, e0[:3] - e0[3])))


def rk4_star(h: FullDrivenHamiltonian, psi0, t_final: float, steps: int,
             chunk: int = 50_000) -> np.ndarray:
    """Fixed-step RK4 for :func:`interaction_hamiltonian_at`, exploiting its star shape.

    Same scheme as :func:`integrate_schrodinger` with the couplings evaluated in
    vectorised chunks; the per-step update is plain complex arithmetic.
    """
    dt = t_final / steps
    c1, c2, c3, ce = (complex(x) for x in as_pure_state(psi0, 4, normalized=True))
    delta = h.detuning
    half = dt / 2

    def f(a1, a2, a3, ae, g1, g2, g3):
        return (-1j * g1 * ae, -1j * g2 * ae, -1j * g3 * ae,
                -1j * (g1.conjugate() * a1 + g2.conjugate() * a2 + g3.conjugate() * a3 + delta * ae))

    for start in range(0, steps, chunk):
        n = min(chunk, steps - start)
        g = _couplings(h, (start + np.arange(2 * n + 1) / 2) * dt).tolist()
        for i in range(n):
            g0, gm, g1 = g[2 * i], g[2 * i + 1], g[2 * i + 2]
            k1 = f(c1, c2, c3, ce, *g0)
            k2 = f(c1 + half * k1[0], c2 + half * k1[1], c3 + half * k1[2], ce + half * k1[3], *gm)
            k3 = f(c1 + half * k2[0], c2 + half * k2[1], c3 + half * k2[2], ce + half * k2[3], *gm)
            k4 = f(c1 + dt * k3[0], c2 + dt * k3[1], c3 + dt * k3[2], ce + dt * k3[3], *g1)
            s = dt / 6
            c1 += s * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            c2 += s * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            c3 += s * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            ce += s * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    return np.array([c1, c2, c3, ce])


def to_interaction_picture(h: FullDrivenHamiltonian, psi, t: float) -> np.ndarray:
    """exp(i H0 t) psi for a lab-frame state."""
    return np.exp(1j * h.base_energies * t) * np.asarray(psi, dtype=complex)

