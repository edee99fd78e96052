from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from atomslit.protocol import (
    OPEN_SETS,
    DegenerateOperatingPointError,
    IncompleteTableError,
    ProbabilityTable,
    RunConfig,
    blocked_states,
    effect_operator,
    erase_fringe_formulas,
    fringe_scan,
    kappa,
    prepared_probability,
    probability_table,
    run_single,
    s2,
    sorkin_s3,
    tritter_phase_systematic,
)
from atomslit.qstate import QStateError
from atomslit.tripod import default_params

from conftest import random_density, random_state, random_unitary

# exact value of S3 for three back-to-back spontaneous cycles at delta*T = pi/3,
# read out directly on |1> (no closing tritter), default branching ratios
S3_THREE_CYCLES = Fraction(-2528, 81675)


def erase(delta_t=np.pi / 3, **kw):
    return RunConfig(method="erase", delta_t=delta_t, **kw)


def test_labels():
    assert blocked_states("123") == frozenset()
    assert blocked_states("0") == {1, 2, 3}
    assert blocked_states("13") == {2}
    with pytest.raises(ValueError):
        blocked_states("21")


def test_run_single_examples():
    assert run_single(erase(0.0), "123") == pytest.approx(1, abs=1e-14)
    for x in (0.0, 0.7, 3.0):
        assert run_single(erase(x), {1}) == pytest.approx(1 / 9, abs=1e-15)
    assert run_single(erase(np.pi / 2), (1, 3)) == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        run_single(erase(), "4")


def test_table_examples():
    t = probability_table(erase(0.0)).as_dict()
    assert np.allclose([t[k] for k in OPEN_SETS], np.array([9, 4, 4, 4, 1, 1, 1, 0]) / 9, atol=1e-14)
    d = probability_table(RunConfig(method="dephase", delta_t=0.0))
    assert np.allclose([d[k] for k in OPEN_SETS], np.array([9, 5, 5, 5, 3, 3, 3, 3]) / 9, atol=1e-14)


def test_dephase_and_spontaneous_agree_on_grid():
    grid = np.linspace(0, 4 * np.pi, 101)
    dep = fringe_scan(RunConfig(method="dephase"), grid)
    spo = fringe_scan(RunConfig(method="spontaneous"), grid)
    for a, b in zip(dep, spo):
        assert max(abs(a[k] - b[k]) for k in OPEN_SETS) <= 1e-12


def test_probability_table_validation():
    with pytest.raises(ValueError):
        ProbabilityTable({"123": 1.2})
    with pytest.raises(ValueError):
        ProbabilityTable({"4": 0.1})
    with pytest.raises(IncompleteTableError):
        sorkin_s3(ProbabilityTable({"123": 0.5}))


def test_statistics_examples():
    zero = ProbabilityTable({k: 0.0 for k in OPEN_SETS})
    assert sorkin_s3(zero) == 0
    t0 = probability_table(erase(0.0))
    assert sorkin_s3(t0) == pytest.approx(0, abs=1e-14)
    assert s2(t0, (1, 2)) == pytest.approx(2 / 9, abs=1e-14)
    assert kappa(t0) == pytest.approx(0, abs=1e-14)
    t = probability_table(erase(np.pi / 2))
    assert s2(t, (3, 1)) == pytest.approx(-2 / 9, abs=1e-14)
    with pytest.raises(ValueError):
        s2(t, (1, 1))
    flat = ProbabilityTable({"123": 0.1, "12": 0.3, "13": 0.3, "23": 0.3, "1": 0.2, "2": 0.2, "3": 0.2, "0": 0.1})
    assert s2(flat, (1, 2)) == pytest.approx(0)
    with pytest.raises(DegenerateOperatingPointError):
        kappa(flat)
    assert kappa(probability_table(RunConfig(method="dephase", delta_t=0.0))) == pytest.approx(0, abs=1e-14)


def test_fringe_scan_matches_formulas():
    grid = np.linspace(0, 4 * np.pi, 200)
    tables = fringe_scan(erase(), grid)
    ref = erase_fringe_formulas(grid)
    for k in OPEN_SETS:
        assert np.max(np.abs([t[k] for t in tables] - ref[k])) <= 1e-12
    with pytest.raises(ValueError):
        fringe_scan(erase(), [])


@pytest.mark.parametrize("x,expected", [(0.0, 1.0), (np.pi, 1 / 9), (2 * np.pi / 3, 0.0)])
def test_fringe_points(x, expected):
    assert run_single(erase(x), "123") == pytest.approx(expected, abs=1e-14)


def test_erase_sum_rule_and_doubled_frequency():
    grid = np.linspace(0, 4 * np.pi, 300)
    for x in grid:
        t = probability_table(erase(x))
        rhs = t["12"] + t["13"] + t["23"] - t["1"] - t["2"] - t["3"]
        assert abs(t["123"] - rhs) <= 1e-12
        assert t["0"] == 0
        assert abs(t["13"] - run_single(erase(2 * x), "12")) <= 1e-12


def test_offsets_against_erase():
    for x in np.linspace(0, 4 * np.pi, 50):
        e = probability_table(erase(x))
        d = probability_table(RunConfig(method="dephase", delta_t=x))
        for k in ("12", "13", "23"):
            assert abs(d[k] - e[k] - 1 / 9) <= 1e-12
        for k in ("1", "2", "3"):
            assert abs(d[k] - e[k] - 2 / 9) <= 1e-12
        assert abs(d["0"] - 1 / 3) <= 1e-12


@pytest.mark.parametrize("method", ["erase", "dephase", "spontaneous"])
def test_s3_vanishes_for_random_preparations(method, rng):
    for _ in range(100):
        cfg = RunConfig(method=method, delta_t=rng.uniform(0, 4 * np.pi),
                        closing=random_unitary(rng), detector=random_state(rng),
                        initial_state=random_density(rng))
        assert abs(sorkin_s3(probability_table(cfg))) <= 1e-12


def test_effect_operator_agrees_with_state_pipeline(rng):
    for method in ("erase", "dephase", "spontaneous"):
        cfg = RunConfig(method=method, cycles=2 if method == "spontaneous" else 1, delta_t=rng.uniform(0, 6),
                        closing=random_unitary(rng), detector=random_state(rng), bias_phi=0.2)
        for _ in range(20):
            rho = random_density(rng)
            for label in OPEN_SETS:
                e = effect_operator(cfg, label)
                assert np.trace(e @ rho).real == pytest.approx(prepared_probability(cfg, rho, label), abs=1e-14)


@pytest.mark.parametrize("method", ["erase", "dephase", "spontaneous"])
@pytest.mark.parametrize("closing", ["tritter", "none"])
def test_matches_brute_force_oracle(method, closing):
    p = default_params()
    tau_phase = p.zeeman_ground * (8 * np.pi * p.detuning / (9 * p.rabi**2))
    for x in (0.0, 0.4, np.pi / 3, 2.5):
        cfg = RunConfig(method=method, delta_t=x, closing=None if closing == "tritter" else np.eye(3), bias_phi=0.01)
        for label in OPEN_SETS:
            ref = oracle.click_probability(label, method=method, delta_t=x, delta_tau=tau_phase,
                                           closing=closing, bias=0.01)
            assert run_single(cfg, label) == pytest.approx(ref, abs=1e-14)


def test_three_cycles_regression():
    cfg = RunConfig(method="spontaneous", cycles=3, closing=np.eye(3))
    s3 = sorkin_s3(probability_table(cfg))
    assert s3 == pytest.approx(float(S3_THREE_CYCLES), abs=1e-14)
    assert s3 == pytest.approx(oracle.s3(method="spontaneous", cycles=3, closing="none"), abs=1e-14)


def test_three_cycles_cancel_with_tritter_closing():
    cfg = RunConfig(method="spontaneous", cycles=3)
    assert abs(sorkin_s3(probability_table(cfg))) <= 1e-12


def test_bias_bounded_by_phase():
    for x in np.linspace(0, 2 * np.pi, 61):
        for phi in (-0.05, -0.01, 0.003, 0.05):
            s3 = sorkin_s3(probability_table(erase(x, bias_phi=phi)))
            assert abs(s3) <= abs(phi)


def test_bias_leading_coefficient():
    # small-phase slope is (2/9)(2 sin x + sin 2x) for the default protocol
    phi = 1e-7
    for x in (0.3, np.pi / 3, 2.0):
        s3 = sorkin_s3(probability_table(erase(x, bias_phi=phi)))
        assert s3 / phi == pytest.approx(2 / 9 * (2 * np.sin(x) + np.sin(2 * x)), rel=1e-5)


def test_tritter_phase_systematic(rng):
    assert abs(tritter_phase_systematic(erase(), 0.0, 0.0)) <= 1e-14
    for method in ("erase", "dephase", "spontaneous"):
        for _ in range(20):
            phi2, phi3 = rng.uniform(-np.pi, np.pi, 2)
            assert abs(tritter_phase_systematic(RunConfig(method=method), phi2, phi3)) <= 1e-12
    with pytest.raises(QStateError):
        tritter_phase_systematic(erase(initial_state=np.eye(3) / 3), 0.1, 0.2)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(method="erase", cycles=3)
    with pytest.raises(QStateError):
        RunConfig(closing=np.ones((3, 3)))
    cfg = RunConfig.from_time(default_params(), 1e-4)
    assert cfg.free_time == pytest.approx(1e-4)
    with pytest.raises(ValueError):
        RunConfig.from_time(default_params(), -1.0)


@given(st.floats(0, 4 * np.pi), st.floats(-0.05, 0.05))
def test_probabilities_stay_in_range(x, phi):
    for method in ("erase", "dephase", "spontaneous"):
        t = probability_table(RunConfig(method=method, delta_t=x, bias_phi=phi))
        assert all(0 <= t[k] <= 1 for k in OPEN_SETS)
