"""Shot noise, kappa precision and systematic-bias studies.

Random streams: every (configuration, repeat) pair draws from its own
``SeedSequence(seed, spawn_key=(config_index, repeat))``, so results do not
depend on how repeats are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .protocol import (
    OPEN_SETS,
    PAIRS,
    S3_SIGNS,
    KAPPA_FLOOR,
    DegenerateOperatingPointError,
    ProbabilityTable,
    RunConfig,
    imperfect_tritter_state,
    kappa,
    probability_table,
    sorkin_s3,
    effect_operator,
)


def binomial_sample(p: float, n: int, rng: np.random.Generator) -> int:
    """Number of clicks in ``n`` trials with click probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p!r} outside [0, 1]")
    if n < 0:
        raise ValueError("number of trials must be non-negative")
    # numpy: inversion for n*p < 30, BTPE rejection otherwise
    return int(rng.binomial(n, p))


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class ShotNoiseConfig:
    n_events: int
    n_repeats: int
    seed: int
    exact: bool = False

    def __post_init__(self):
        if self.n_events < 1:
            raise ValueError("n_events must be positive")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class KappaEstimate:
    mean: float
    std: float
    n_total: int
    per_config_counts: dict[str, int]
    s3_mean: float
    s3_std: float
    n_repeats: int
    probabilities: dict[str, float] = field(default_factory=dict)

    @property
    def s3_stderr(self) -> float:
        return self.s3_std / math.sqrt(self.n_repeats)


def _mean_std(xs: list[float]) -> tuple[float, float]:
    n = len(xs)
    mean = math.fsum(xs) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    return mean, math.sqrt(var)


def _one_repeat(table: ProbabilityTable, sn: ShotNoiseConfig, repeat: int):
    counts = {label: binomial_sample(table[label], sn.n_events, substream(sn.seed, i, repeat))
              for i, label in enumerate(OPEN_SETS)}
    empirical = ProbabilityTable({k: c / sn.n_events for k, c in counts.items()})
    return counts, sorkin_s3(empirical), kappa(empirical)


def kappa_monte_carlo(config: RunConfig, sn: ShotNoiseConfig, workers: int = 1) -> KappaEstimate:
    """Distribution of the plug-in kappa estimator with ``n_events`` detections per configuration."""
    table = probability_table(config)
    kappa(table)  # degenerate operating points fail before sampling
    if sn.exact:
        k = kappa(table)
        return KappaEstimate(k, 0.0, 0, {}, sorkin_s3(table), 0.0, 1, table.as_dict())

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: _one_repeat(table, sn, r), range(sn.n_repeats)))
    else:
        results = [_one_repeat(table, sn, r) for r in range(sn.n_repeats)]

    totals = {label: sum(res[0][label] for res in results) for label in OPEN_SETS}
    k_mean, k_std = _mean_std([res[2] for res in results])
    s_mean, s_std = _mean_std([res[1] for res in results])
    return KappaEstimate(
        mean=k_mean,
        std=k_std,
        n_total=sn.n_events * sn.n_repeats * len(OPEN_SETS),
        per_config_counts=totals,
        s3_mean=s_mean,
        s3_std=s_std,
        n_repeats=sn.n_repeats,
        probabilities=table.as_dict(),
    )


def kappa_std_analytic(table: ProbabilityTable, n_events: int) -> float:
    """Leading-order std of kappa from independent binomial noise on each P."""
    var_s3 = math.fsum(t * (1 - t) for t in (table[k] for k in OPEN_SETS)) / n_events
    denom = sum(abs(table[f"{j}{k}"] - table[str(j)] - table[str(k)] + table["0"]) for j, k in PAIRS)
    if denom < KAPPA_FLOOR:
        raise DegenerateOperatingPointError("two-path terms vanish")
    return math.sqrt(var_s3) / denom


@dataclass(frozen=True)
class NoiseCalibration:
    """std(kappa) = constant / sqrt(N), N = detections per configuration."""

    constant: float
    reference_events: int
    reference_std: float
    n_repeats: int
    seed: int


def calibrate_kappa_noise(config: RunConfig, n_events: int = 100_000, n_repeats: int = 200,
                          seed: int = 0, workers: int = 1) -> NoiseCalibration:
    est = kappa_monte_carlo(config, ShotNoiseConfig(n_events, n_repeats, seed), workers)
    return NoiseCalibration(est.std * math.sqrt(n_events), n_events, est.std, n_repeats, seed)


def campaign_projection(atoms_per_run: int, runs: int, calibration: NoiseCalibration | float) -> float:
    """Predicted std(kappa) after ``runs`` shots of ``atoms_per_run`` atoms each."""
    if atoms_per_run < 1 or runs < 1:
        raise ValueError("atoms_per_run and runs must be positive")
    c = calibration.constant if isinstance(calibration, NoiseCalibration) else float(calibration)
    return c / math.sqrt(atoms_per_run * runs)


def scaling_slope(ns, stds) -> float:
    """Least-squares slope of log(std) against log(N)."""
    slope, _ = np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(stds, dtype=float)), 1)
    return float(slope)


@dataclass(frozen=True)
class BiasStudy:
    phi: list[float]
    s3: list[float]
    slope: float


def bias_study(config: RunConfig, phi_grid, slope_step: float = 1e-6) -> BiasStudy:
    """Exact S3 with a coherence phase phi injected in every single-blocker run."""
    phis = [float(x) for x in phi_grid]
    if any(abs(x) > 0.1 for x in phis):
        raise ValueError("bias study is limited to |phi| <= 0.1")
    s3 = [sorkin_s3(probability_table(config.replace(bias_phi=x))) for x in phis]
    up = sorkin_s3(probability_table(config.replace(bias_phi=slope_step)))
    down = sorkin_s3(probability_table(config.replace(bias_phi=-slope_step)))
    return BiasStudy(phis, s3, (up - down) / (2 * slope_step))


@dataclass(frozen=True)
class PhaseNoiseResult:
    s3: float
    stderr: float
    n_draws: int


def random_tritter_phase_s3(config: RunConfig, n_draws: int, seed: int,
                            phase_scale: float = np.pi) -> PhaseNoiseResult:
    """S3 when each run's opening tritter carries fresh random phases.

    Every configuration sees phases from the same uniform distribution on
    [-phase_scale, phase_scale), drawn independently per run.  Probabilities are
    averaged per configuration and combined into S3; the standard error comes
    from the per-configuration sample variances.
    """
    if n_draws < 2:
        raise ValueError("need at least two draws")
    s3 = 0.0
    var = 0.0
    for i, label in enumerate(OPEN_SETS):
        rng = substream(seed, i)
        phases = rng.uniform(-phase_scale, phase_scale, size=(n_draws, 2))
        psi = np.array([imperfect_tritter_state(config, a, b) for a, b in phases])
        e = effect_operator(config, label)
        ps = np.einsum("ni,ij,nj->n", psi.conj(), e, psi).real.tolist()
        mean, std = _mean_std(ps)
        s3 += S3_SIGNS[label] * mean
        var += std**2 / n_draws
    return PhaseNoiseResult(s3, math.sqrt(var), n_draws)
