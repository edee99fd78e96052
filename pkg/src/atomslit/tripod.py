"""Tripod model of 87Sr: parameters, effective Raman Hamiltonian and the tritter.

All frequencies are angular (rad/s); times are seconds; hbar = 1.
Ground states are labelled 1, 2, 3 with energies 0, delta, 2*delta.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .qstate import ATOL_BUILD, as_unitary, matrix_exponential

TWO_PI = 2 * np.pi
ETA = np.exp(2j * np.pi / 3)
# Bohr magneton over hbar, rad/(s T)
MU_B_OVER_HBAR = TWO_PI * 13.996e9

# r[k][j]: decay from excited state e_k to ground state j (squared Clebsch-Gordan)
DEFAULT_BRANCHING_FRACTIONS = (
    (Fraction(1, 45), Fraction(8, 45), Fraction(36, 45)),
    (Fraction(32, 99), Fraction(49, 99), Fraction(18, 99)),
    (Fraction(36, 55), Fraction(18, 55), Fraction(1, 55)),
)


def as_branching(r) -> np.ndarray:
    """Validate a 3x3 row-stochastic branching matrix; returns a read-only copy."""
    r = np.array(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"branching matrix must be 3x3, got {r.shape}")
    if np.any(r < 0) or np.any(r > 1) or not np.all(np.isfinite(r)):
        raise ValueError("branching ratios must lie in [0, 1]")
    if np.max(np.abs(r.sum(axis=1) - 1)) > ATOL_BUILD:
        raise ValueError("branching matrix rows must sum to 1")
    r.setflags(write=False)
    return r


def default_branching() -> np.ndarray:
    return as_branching([[float(x) for x in row] for row in DEFAULT_BRANCHING_FRACTIONS])


@dataclass(frozen=True)
class PhysicalParams:
    rabi: float
    detuning: float
    zeeman_ground: float
    zeeman_excited: float
    linewidth: float
    branching: np.ndarray = field(default_factory=default_branching, compare=False)
    b_field: float | None = None
    lande_ground: float | None = None
    lande_excited: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "branching", as_branching(self.branching))
        if not self.rabi > 0:
            raise ValueError("rabi frequency must be positive")
        if self.detuning == 0:
            raise ValueError("detuning must be non-zero")
        if not self.zeeman_ground > 0:
            raise ValueError("ground Zeeman splitting must be positive")
        if self.linewidth < 0:
            raise ValueError("linewidth must be non-negative")
        if not abs(self.detuning) > self.linewidth:
            raise ValueError(
                f"|detuning| ({abs(self.detuning):.4g} rad/s) must exceed the "
                f"excited-state linewidth ({self.linewidth:.4g} rad/s)")

    def replace(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)


def zeeman_splitting(b_field: float, lande: float) -> float:
    """Splitting between adjacent sublevels, |g| mu_B B / hbar, in rad/s."""
    if b_field < 0:
        raise ValueError("magnetic field must be non-negative")
    return abs(lande) * MU_B_OVER_HBAR * b_field


def default_params() -> PhysicalParams:
    return PhysicalParams(
        rabi=TWO_PI * 1e5,
        detuning=TWO_PI * 1e6,
        zeeman_ground=TWO_PI * 1.82e4,
        zeeman_excited=TWO_PI * 8.5e6,
        linewidth=TWO_PI * 7.5e3,
        b_field=1e-2,
        lande_ground=-1.3e-4,
        lande_excited=2 / 33,
    )


def effective_hamiltonian(p: PhysicalParams) -> np.ndarray:
    """Ground-manifold Hamiltonian after eliminating the excited level (interaction picture)."""
    if p.detuning == 0:
        raise ValueError("detuning must be non-zero")
    return -(p.rabi**2 / (4 * p.detuning)) * np.ones((3, 3), dtype=complex)


def fourier_basis(dim: int = 3) -> list[np.ndarray]:
    """Eigenvectors of the all-ones coupling: phi_k = sum_j eta^(k j) |j> / sqrt(3), k = 1..3."""
    if dim != 3:
        raise ValueError("only the three-level Fourier basis is supported")
    j = np.arange(1, 4)
    return [np.exp(2j * np.pi * k * j / 3) / np.sqrt(3) for k in range(1, 4)]


def tritter_time(p: PhysicalParams) -> float:
    """Shortest pulse taking |1> to an even superposition: 8 pi Delta / (9 Omega^2)."""
    if p.rabi == 0:
        raise ValueError("rabi frequency must be non-zero")
    return 8 * np.pi * p.detuning / (9 * p.rabi**2)


def tritter_unitary(p: PhysicalParams) -> np.ndarray:
    """Closed-form Schroedinger-picture tritter U_tau.

    Entry (j, k) is 1/sqrt(3) on the diagonal and eta * exp(i (j - k) delta tau) / sqrt(3)
    off it.
    """
    phase = p.zeeman_ground * tritter_time(p)
    j = np.arange(3)
    u = ETA * np.exp(1j * np.subtract.outer(j, j) * phase)
    np.fill_diagonal(u, 1)
    return as_unitary(u / np.sqrt(3), 3)


def tritter_unitary_from_exponentials(p: PhysicalParams) -> np.ndarray:
    """Cross-check route: exp(+i H0 tau) exp(-i H_eff tau) exp(-i H0 tau).

    Matches :func:`tritter_unitary` up to the global phase exp(i pi/6).
    """
    tau = tritter_time(p)
    h0 = ground_hamiltonian(p)
    return matrix_exponential(h0, -tau) @ matrix_exponential(effective_hamiltonian(p), tau) \
        @ matrix_exponential(h0, tau)


def ground_hamiltonian(p: PhysicalParams) -> np.ndarray:
    return np.diag([0.0, p.zeeman_ground, 2 * p.zeeman_ground]).astype(complex)


def free_evolution(p: PhysicalParams, t: float) -> np.ndarray:
    """diag(1, exp(-i delta T), exp(-i 2 delta T))."""
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    return free_evolution_phase(p.zeeman_ground * t)


def free_evolution_phase(delta_t: float) -> np.ndarray:
    """Free evolution parametrised by the accumulated phase delta*T (rad)."""
    return np.diag(np.exp(-1j * delta_t * np.arange(3)))

