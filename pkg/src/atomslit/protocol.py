"""End-to-end three-path Ramsey interferometer and the Sorkin statistics.

Labelling convention: a probability ``P_S`` is keyed by the set ``S`` of
states left OPEN; the blocker acts on the complement.  ``"123"`` is the
unblocked interferometer and ``"0"`` the fully blocked background run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .blockers import LABELS, BlockerSpec, Method, block, blocker_channel
from .qstate import (
    QStateError,
    as_density_matrix,
    as_pure_state,
    as_unitary,
    basis_state,
    project_probability,
    pure_density,
)
from .tripod import ETA, PhysicalParams, default_params, free_evolution_phase, tritter_time, tritter_unitary

OPEN_SETS = ("123", "12", "13", "23", "1", "2", "3", "0")
PAIRS = ((1, 2), (1, 3), (2, 3))
# S3 = sum over open sets of sign * P
S3_SIGNS = {"123": 1, "12": -1, "13": -1, "23": -1, "1": 1, "2": 1, "3": 1, "0": -1}
KAPPA_FLOOR = 1e-9
DEFAULT_DELTA_T = np.pi / 3


class IncompleteTableError(KeyError):
    pass


class DegenerateOperatingPointError(ArithmeticError):
    """The two-path interference terms vanish, so kappa is undefined."""


def open_states(label: str) -> frozenset[int]:
    if label not in OPEN_SETS:
        raise ValueError(f"unknown open-set label {label!r}")
    return frozenset() if label == "0" else frozenset(int(c) for c in label)


def blocked_states(label: str) -> frozenset[int]:
    return frozenset(LABELS) - open_states(label)


@dataclass(frozen=True)
class ProbabilityTable:
    p: Mapping[str, float]

    def __post_init__(self):
        p = dict(self.p)
        for key, val in p.items():
            if key not in OPEN_SETS:
                raise ValueError(f"unknown open-set label {key!r}")
            if not (0.0 <= val <= 1.0):
                raise ValueError(f"P_{key} = {val!r} outside [0, 1]")
        object.__setattr__(self, "p", p)

    def __getitem__(self, label: str) -> float:
        try:
            return self.p[label]
        except KeyError:
            raise IncompleteTableError(f"table has no entry for P_{label}") from None

    def as_dict(self) -> dict[str, float]:
        return {k: self.p[k] for k in OPEN_SETS if k in self.p}


@dataclass(frozen=True)
class RunConfig:
    """One operating point of the interferometer.

    ``closing=None`` means U_tau^dagger; ``detector=None`` means |1>.  The
    free evolution is given as the accumulated phase ``delta_t`` = delta * T.
    """

    params: PhysicalParams = field(default_factory=default_params)
    method: Method = Method.ERASE
    cycles: int = 1
    delta_t: float = DEFAULT_DELTA_T
    closing: np.ndarray | None = None
    bias_phi: float = 0.0
    initial_state: np.ndarray | None = None
    detector: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if self.cycles > 1 and self.method is not Method.SPONTANEOUS:
            raise ValueError("repeated cycles only apply to spontaneous-emission blocking")
        if self.closing is not None:
            object.__setattr__(self, "closing", as_unitary(self.closing, 3))
        if self.initial_state is not None:
            object.__setattr__(self, "initial_state", as_density_matrix(self.initial_state, 3))
        if self.detector is not None:
            object.__setattr__(self, "detector", as_pure_state(self.detector, 3, normalized=True))

    @classmethod
    def from_time(cls, params: PhysicalParams, t: float, **kw) -> "RunConfig":
        if t < 0:
            raise ValueError("evolution time must be non-negative")
        return cls(params=params, delta_t=params.zeeman_ground * t, **kw)

    @property
    def free_time(self) -> float:
        return self.delta_t / self.params.zeeman_ground

    def replace(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def tritter(self) -> np.ndarray:
        return tritter_unitary(self.params)

    def closing_unitary(self) -> np.ndarray:
        return self.tritter().conj().T if self.closing is None else self.closing

    def initial(self) -> np.ndarray:
        return pure_density(basis_state(1)) if self.initial_state is None else self.initial_state

    def blocker(self, label: str) -> BlockerSpec:
        return BlockerSpec(self.method, blocked_states(label),
                           self.cycles if self.method is Method.SPONTANEOUS else 1,
                           self.bias_phi)


def _readout(config: RunConfig) -> np.ndarray:
    """m = F^dagger V^dagger d, so that <d| V F rho F^dagger V^dagger |d> = <m| rho |m>."""
    v = config.closing_unitary()
    f = free_evolution_phase(config.delta_t)
    detector = basis_state(1) if config.detector is None else config.detector
    return f.conj().T @ (v.conj().T @ detector)


def _measure(config: RunConfig, rho: np.ndarray, label: str, readout: np.ndarray | None = None) -> float:
    rho = block(rho, config.blocker(label), config.params.branching)
    return project_probability(rho, _readout(config) if readout is None else readout)


def run_single(config: RunConfig, open_set: str | Iterable[int]) -> float:
    """Click probability with ``open_set`` unblocked."""
    label = _label(open_set)
    u = config.tritter()
    rho = u @ config.initial() @ u.conj().T
    return _measure(config, rho, label)


def _label(open_set) -> str:
    if isinstance(open_set, str):
        open_states(open_set)
        return open_set
    s = sorted(set(int(j) for j in open_set))
    label = "".join(map(str, s)) or "0"
    open_states(label)
    return label


def probability_table(config: RunConfig) -> ProbabilityTable:
    u = config.tritter()
    return table_from_prepared_state(config, u @ config.initial() @ u.conj().T)


def table_from_prepared_state(config: RunConfig, psi) -> ProbabilityTable:
    """Table for a protocol whose opening tritter outputs ``psi`` (pure or density matrix)."""
    psi = np.asarray(psi, dtype=complex)
    rho = pure_density(psi) if psi.ndim == 1 else as_density_matrix(psi, 3)
    m = _readout(config)
    return ProbabilityTable({label: _measure(config, rho, label, m) for label in OPEN_SETS})


def prepared_probability(config: RunConfig, psi, open_set) -> float:
    """Click probability for one open set, starting from the post-tritter state ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    rho = pure_density(psi) if psi.ndim == 1 else as_density_matrix(psi, 3)
    return _measure(config, rho, _label(open_set))


def effect_operator(config: RunConfig, open_set) -> np.ndarray:
    """Heisenberg-picture POVM element E with P = Tr(E rho_after_tritter).

    Built from the adjoint maps of the blocker, bias, free evolution and
    closing stages, in reverse order.
    """
    label = _label(open_set)
    spec = config.blocker(label)
    m = _readout(config)
    e = np.outer(m, m.conj())
    pair = spec.surviving_pair
    if pair is not None and spec.coherence_bias_rad != 0:
        k, l = pair
        e[k - 1, l - 1] *= np.exp(-1j * spec.coherence_bias_rad)
        e[l - 1, k - 1] *= np.exp(1j * spec.coherence_bias_rad)
    ch = blocker_channel(spec, config.params.branching)
    return sum(kr.conj().T @ e @ kr for kr in ch.kraus_operators)


def sorkin_s3(t: ProbabilityTable) -> float:
    return float(sum(S3_SIGNS[k] * t[k] for k in OPEN_SETS))


def s2(t: ProbabilityTable, pair: tuple[int, int]) -> float:
    j, k = sorted(pair)
    if (j, k) not in PAIRS:
        raise ValueError(f"invalid pair {pair}")
    return t[f"{j}{k}"] - t[str(j)] - t[str(k)] + t["0"]


def kappa(t: ProbabilityTable) -> float:
    denom = sum(abs(s2(t, pair)) for pair in PAIRS)
    if denom < KAPPA_FLOOR:
        raise DegenerateOperatingPointError(
            f"sum of |S2| = {denom:.3e} is below {KAPPA_FLOOR:g}; choose another delta*T")
    return sorkin_s3(t) / denom


def fringe_scan(config: RunConfig, grid: Sequence[float]) -> list[ProbabilityTable]:
    grid = list(grid)
    if not grid:
        raise ValueError("fringe grid is empty")
    return [probability_table(config.replace(delta_t=float(x))) for x in grid]


def erase_fringe_formulas(delta_t) -> dict[str, np.ndarray]:
    """Analytic erase-method fringes for the default protocol."""
    x = np.asarray(delta_t, dtype=float)
    p12 = 2 / 9 * (1 + np.cos(x))
    one = np.full_like(x, 1 / 9)
    return {
        "123": (3 + 4 * np.cos(x) + 2 * np.cos(2 * x)) / 9,
        "12": p12,
        "13": 2 / 9 * (1 + np.cos(2 * x)),
        "23": p12,
        "1": one,
        "2": one,
        "3": one,
        "0": np.zeros_like(x),
    }


def imperfect_tritter_state(config: RunConfig, phi2: float, phi3: float) -> np.ndarray:
    """Opening-tritter output with extra phases phi2, phi3 on |2>, |3>."""
    a = config.params.zeeman_ground * tritter_time(config.params)
    return np.array([1, ETA * np.exp(1j * (a + phi2)), ETA * np.exp(1j * (2 * a + phi3))]) / np.sqrt(3)


def tritter_phase_systematic(config: RunConfig, phi2: float, phi3: float) -> float:
    """S3 when every run's opening tritter carries the same phase errors."""
    if config.initial_state is not None:
        raise QStateError("phase systematic replaces the prepared state; initial_state must be unset")
    return sorkin_s3(table_from_prepared_state(config, imperfect_tritter_state(config, phi2, phi3)))

