"""Slit blockers for the energy-level interferometer, as quantum channels.

Three mechanisms remove a ground state from the interference:

* ``erase``: the blocked population is shelved outside the tripod (trace drops);
* ``dephase``: populations stay, coherences to blocked states are destroyed;
* ``spontaneous``: a resonant pi-pulse lifts each blocked state to its own
  excited level, which decays incoherently back with branching ratios ``r``.

Blocked sets use the 1-based labels {1, 2, 3}.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable

import numpy as np

from .qstate import QuantumChannel, apply_channel, as_density_matrix, projector
from .tripod import PhysicalParams, as_branching

LABELS = (1, 2, 3)


class Method(str, Enum):
    ERASE = "erase"
    DEPHASE = "dephase"
    SPONTANEOUS = "spontaneous"


def _blocked_set(blocked: Iterable[int]) -> frozenset[int]:
    s = frozenset(int(j) for j in blocked)
    if not s <= set(LABELS):
        raise ValueError(f"blocked states must be drawn from {LABELS}, got {sorted(s)}")
    return s


@dataclass(frozen=True)
class BlockerSpec:
    method: Method
    blocked: frozenset[int]
    cycles: int = 1
    coherence_bias_rad: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "blocked", _blocked_set(self.blocked))
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if self.cycles > 1 and self.method is not Method.SPONTANEOUS:
            raise ValueError("repeated cycles only apply to spontaneous-emission blocking")

    @property
    def surviving_pair(self) -> tuple[int, int] | None:
        """The single unblocked coherence pair, when exactly one state is blocked."""
        if len(self.blocked) != 1:
            return None
        k, l = sorted(set(LABELS) - self.blocked)
        return k, l


def erase_channel(blocked: Iterable[int]) -> QuantumChannel:
    q = projector(set(LABELS) - _blocked_set(blocked))
    return QuantumChannel((q,), trace_preserving=False)


def dephase_channel(blocked: Iterable[int]) -> QuantumChannel:
    # equal to composing the single-state maps D_j in any order
    s = _blocked_set(blocked)
    ops = [projector({j}) for j in sorted(s)]
    ops.append(projector(set(LABELS) - s))
    return QuantumChannel(tuple(ops))


def spontaneous_channel(blocked: Iterable[int], r) -> QuantumChannel:
    s = _blocked_set(blocked)
    r = as_branching(r)
    ops = [projector(set(LABELS) - s)]
    for j in sorted(s):
        for m in LABELS:
            if r[j - 1, m - 1] > 0:
                k = np.zeros((3, 3), dtype=complex)
                k[m - 1, j - 1] = np.sqrt(r[j - 1, m - 1])
                ops.append(k)
    return QuantumChannel(tuple(ops))


def blocker_channel(spec: "BlockerSpec", r=None) -> QuantumChannel:
    """Channel for ``spec`` without its coherence bias; repeated cycles are composed."""
    if spec.method is Method.ERASE:
        return erase_channel(spec.blocked)
    if spec.method is Method.DEPHASE:
        return dephase_channel(spec.blocked)
    if r is None:
        raise ValueError("spontaneous blocking needs a branching matrix")
    one = spontaneous_channel(spec.blocked, r)
    ch = one
    for _ in range(spec.cycles - 1):
        ch = ch.then(one)
    return ch


# channels are immutable, so the handful of distinct ones are built once
@lru_cache(maxsize=64)
def _erase_cached(blocked: frozenset[int]) -> QuantumChannel:
    return erase_channel(blocked)


@lru_cache(maxsize=64)
def _dephase_cached(blocked: frozenset[int]) -> QuantumChannel:
    return dephase_channel(blocked)


@lru_cache(maxsize=256)
def _spontaneous_cached(blocked: frozenset[int], r_key: bytes) -> QuantumChannel:
    return spontaneous_channel(blocked, np.frombuffer(r_key).reshape(3, 3))


def _single_cycle(blocked, r) -> QuantumChannel:
    return _spontaneous_cached(_blocked_set(blocked), as_branching(r).tobytes())


def erase_block(rho, blocked: Iterable[int]) -> np.ndarray:
    return apply_channel(rho, _erase_cached(_blocked_set(blocked)))


def dephase_block(rho, blocked: Iterable[int]) -> np.ndarray:
    return apply_channel(rho, _dephase_cached(_blocked_set(blocked)))


def spontaneous_block(rho, blocked: Iterable[int], r) -> np.ndarray:
    return apply_channel(rho, _single_cycle(blocked, r))


def repeated_spontaneous_block(rho, blocked: Iterable[int], r, n: int) -> np.ndarray:
    """``n`` back-to-back excitation/decay cycles, with no evolution in between."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ch = _single_cycle(blocked, r)
    for _ in range(n):
        rho = apply_channel(rho, ch)
    return rho


def apply_coherence_bias(rho, surviving_pair: tuple[int, int], phi: float) -> np.ndarray:
    """rho_kl -> rho_kl e^{i phi}, rho_lk -> rho_lk e^{-i phi}."""
    k, l = surviving_pair
    if k == l:
        raise ValueError("coherence pair needs two distinct states")
    if not {k, l} <= set(LABELS):
        raise ValueError(f"pair {surviving_pair} outside {LABELS}")
    out = np.array(as_density_matrix(rho), copy=True)
    out[k - 1, l - 1] *= np.exp(1j * phi)
    out[l - 1, k - 1] *= np.exp(-1j * phi)
    return as_density_matrix(out)


def block(rho, spec: BlockerSpec, r=None) -> np.ndarray:
    """Apply one blocker configuration, including its coherence bias."""
    if spec.method is Method.ERASE:
        out = erase_block(rho, spec.blocked)
    elif spec.method is Method.DEPHASE:
        out = dephase_block(rho, spec.blocked)
    else:
        if r is None:
            raise ValueError("spontaneous blocking needs a branching matrix")
        out = repeated_spontaneous_block(rho, spec.blocked, r, spec.cycles)
    pair = spec.surviving_pair
    if pair is not None and spec.coherence_bias_rad != 0:
        out = apply_coherence_bias(out, pair, spec.coherence_bias_rad)
    return out


def ac_stark_shift(p: PhysicalParams) -> float:
    """Upper bound Omega^2 / (8 delta') on the light shift of the pi-pulse, rad/s."""
    if not (p.zeeman_excited > 0 and p.rabi > 0):
        raise ValueError("need positive rabi frequency and excited-state Zeeman splitting")
    return p.rabi**2 / (8 * p.zeeman_excited)


def ac_stark_phase(p: PhysicalParams) -> float:
    """Phase picked up by the surviving coherence during a pi-pulse of length pi/Omega."""
    return ac_stark_shift(p) * np.pi / p.rabi
