"""Finite-dimensional states, unitaries and Kraus channels.

Matrices are plain ``numpy`` arrays.  The ``as_*`` helpers validate an input
and hand back a read-only complex copy, so values passed between the
pipeline stages cannot be mutated in place.

Sub-normalised density matrices (trace < 1) are legal everywhere: they
carry the fraction of atoms removed by an erasing blocker and are never
renormalised.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

# construction tolerance (hermiticity, unitarity, normalisation)
ATOL_BUILD = 1e-12
# accumulated tolerance (eigenvalues, summed probabilities)
ATOL_ACCUM = 1e-10
# exp(-iHt) unitarity budget
ATOL_EXPM = 1e-11


class QStateError(ValueError):
    """Invalid state, operator or channel."""


class DimensionError(QStateError):
    pass


_clamp_events = 0


def clamp_events() -> int:
    """Number of tiny negative/overshooting probabilities clamped so far."""
    return _clamp_events


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(m, dim: int | None = None) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise QStateError("matrix has non-finite entries")
    return _freeze(a)


def is_hermitian(m: np.ndarray, atol: float = ATOL_BUILD) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= atol)


def is_unitary(u: np.ndarray, atol: float = ATOL_BUILD) -> bool:
    eye = np.eye(u.shape[0])
    return bool(np.max(np.abs(u.conj().T @ u - eye)) <= atol)


def as_unitary(u, dim: int | None = None, atol: float = ATOL_BUILD) -> np.ndarray:
    u = as_matrix(u, dim)
    if not is_unitary(u, atol):
        raise QStateError("operator is not unitary within tolerance")
    return u


def as_density_matrix(rho, dim: int | None = None) -> np.ndarray:
    """Validate ``rho`` as a (possibly sub-normalised) density matrix."""
    rho = as_matrix(rho, dim)
    if not is_hermitian(rho):
        raise QStateError("density matrix is not Hermitian")
    evals = np.linalg.eigvalsh(rho)
    if evals[0] < -ATOL_ACCUM:
        raise QStateError(f"density matrix has negative eigenvalue {evals[0]:.3e}")
    tr = np.trace(rho).real
    if tr < -ATOL_BUILD or tr > 1 + ATOL_BUILD:
        raise QStateError(f"density matrix trace {tr!r} outside [0, 1]")
    return rho


def as_pure_state(psi, dim: int | None = None, normalized: bool = False) -> np.ndarray:
    a = np.asarray(psi, dtype=complex)
    if a.ndim != 1 or a.size == 0:
        raise DimensionError(f"expected a non-empty vector, got shape {a.shape}")
    if dim is not None and a.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise QStateError("state has non-finite amplitudes")
    norm = np.linalg.norm(a)
    if normalized and abs(norm - 1) > ATOL_BUILD:
        raise QStateError(f"state norm {norm!r} is not 1")
    if norm > 1 + ATOL_BUILD:
        raise QStateError(f"state norm {norm!r} exceeds 1")
    return _freeze(a)


def basis_state(j: int, dim: int = 3) -> np.ndarray:
    """``|j>`` with 1-based label ``j``."""
    if not 1 <= j <= dim:
        raise ValueError(f"basis label {j} outside 1..{dim}")
    v = np.zeros(dim, dtype=complex)
    v[j - 1] = 1
    return _freeze(v)


def pure_density(psi) -> np.ndarray:
    psi = as_pure_state(psi)
    return _freeze(np.outer(psi, psi.conj()))


@dataclass(frozen=True)
class QuantumChannel:
    """Operator-sum map rho -> sum_k K rho K^dagger."""

    kraus_operators: tuple[np.ndarray, ...]
    trace_preserving: bool = True

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.kraus_operators)
        if not ops:
            raise QStateError("channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        if any(k.shape != (dim, dim) for k in ops):
            raise DimensionError("Kraus operators differ in dimension")
        object.__setattr__(self, "kraus_operators", ops)
        gram = sum(k.conj().T @ k for k in ops)
        eye = np.eye(dim)
        if self.trace_preserving:
            if np.max(np.abs(gram - eye)) > ATOL_BUILD:
                raise QStateError("Kraus set is not trace preserving")
        elif np.linalg.eigvalsh(eye - gram)[0] < -ATOL_ACCUM:
            raise QStateError("Kraus set increases trace")

    @property
    def dim(self) -> int:
        return self.kraus_operators[0].shape[0]

    def then(self, other: "QuantumChannel") -> "QuantumChannel":
        """Channel applying ``self`` first, then ``other``."""
        if other.dim != self.dim:
            raise DimensionError("cannot compose channels of different dimension")
        ops = tuple(b @ a for b in other.kraus_operators for a in self.kraus_operators)
        return QuantumChannel(ops, self.trace_preserving and other.trace_preserving)


def apply_unitary(rho, u) -> np.ndarray:
    rho = as_density_matrix(rho)
    u = as_unitary(u, rho.shape[0])
    return _freeze(u @ rho @ u.conj().T)


def apply_channel(rho, ch: QuantumChannel) -> np.ndarray:
    rho = as_density_matrix(rho)
    if ch.dim != rho.shape[0]:
        raise DimensionError(f"channel dimension {ch.dim} != state dimension {rho.shape[0]}")
    out = sum(k @ rho @ k.conj().T for k in ch.kraus_operators)
    # symmetrise away rounding so downstream hermiticity checks stay exact
    out = 0.5 * (out + out.conj().T)
    return _freeze(out)


def _clamp_probability(p: float) -> float:
    global _clamp_events
    if p < -ATOL_ACCUM or p > 1 + ATOL_ACCUM:
        raise QStateError(f"probability {p!r} outside [0, 1] beyond tolerance")
    if p < 0 or p > 1:
        _clamp_events += 1
        logger.debug("clamped probability %.3e", p)
        return min(max(p, 0.0), 1.0)
    return p


def project_probability(rho, m) -> float:
    """``<m|rho|m>`` for a normalised measurement vector ``m``."""
    rho = as_density_matrix(rho)
    m = as_pure_state(m, rho.shape[0], normalized=True)
    val = np.vdot(m, rho @ m)
    if abs(val.imag) > ATOL_BUILD:
        raise QStateError(f"projection has imaginary part {val.imag:.3e}")
    return _clamp_probability(float(val.real))


def matrix_exponential(h, t: float) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h`` via eigendecomposition."""
    h = as_matrix(h)
    if not is_hermitian(h, ATOL_BUILD * max(1.0, float(np.max(np.abs(h))))):
        raise QStateError("matrix_exponential requires a Hermitian generator")
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return _freeze((v * np.exp(-1j * w * t)) @ v.conj().T)


def projector(indices: Iterable[int], dim: int = 3) -> np.ndarray:
    """Diagonal projector onto the 1-based basis labels in ``indices``."""
    p = np.zeros((dim, dim), dtype=complex)
    for j in indices:
        p[j - 1, j - 1] = 1
    return p


def phase_quotient_distance(a: Sequence, b: Sequence) -> float:
    """min over global phase theta of max |a - e^{i theta} b|.

    The optimum of the max-norm is found by a bounded scalar search seeded at
    the Frobenius-optimal phase.
    """
    from scipy.optimize import minimize_scalar

    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError("shape mismatch")
    overlap = np.vdot(b, a)
    theta0 = float(np.angle(overlap)) if abs(overlap) > 0 else 0.0

    def dist(theta):
        return float(np.max(np.abs(a - np.exp(1j * theta) * b)))

    res = minimize_scalar(dist, bounds=(theta0 - 0.5, theta0 + 0.5), method="bounded",
                          options={"xatol": 1e-14})
    return min(dist(theta0), float(res.fun))
