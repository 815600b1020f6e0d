import json

import numpy as np
import pytest

from pilotwave.cointoss import (
    OutcomeSequence,
    TossConfig,
    coin_history,
    coin_sampler,
    outcome_map,
    prepare_coin_state,
    read_bits,
    run_toss_sequence,
    verify_compatibility,
    verify_outcome_determinism,
    write_bits,
)
from pilotwave.errors import ConfigError, ExactZero
from pilotwave.pilot import propagate_ensemble
from pilotwave.sampling import ChampernowneOracle, ConstantOracle, SeededPRNGOracle, oracle_from_descriptor
from pilotwave.wavefield import density, make_gaussian

CFG = TossConfig()


def test_coin_state_mirror_symmetric():
    wf = prepare_coin_state(CFG)
    a = wf.amplitudes
    # psi(-x) = psi(x) for the symmetric superposition; x_{n-j} = -x_j
    np.testing.assert_allclose(a[1:], a[1:][::-1], atol=1e-14)


def test_coin_state_right_half_mass():
    wf = prepare_coin_state(CFG)
    rho = density(wf) * wf.grid.dx
    x = wf.grid.x
    right = rho[x > 0].sum() + 0.5 * rho[x == 0].sum()
    assert abs(right - 0.5) <= 1e-6


def test_default_config_digest_stable():
    assert CFG.digest() == TossConfig().digest()
    assert CFG.digest() != TossConfig(momentum=1.0).digest()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"separation": 2.0},  # packets overlap at t = 0
        {"x_min": -15.0, "x_max": 15.0},  # packets leave the grid
        {"n_points": 1000},
        {"steps": 0},
    ],
)
def test_bad_configs_rejected(kwargs):
    with pytest.raises(ConfigError):
        TossConfig(**kwargs)


def test_outcome_map():
    assert outcome_map(0.3) == 1
    assert outcome_map(-1e-300) == 0
    with pytest.raises(ExactZero):
        outcome_map(0.0)
    with pytest.raises(ValueError):
        outcome_map(float("nan"))


@pytest.mark.parametrize("u", [0.1, 0.49, 0.51, 0.9])
def test_constant_oracle_gives_constant_sequence(u):
    seq = run_toss_sequence(CFG, ConstantOracle(u), 50)
    assert np.all(seq.bits == seq.bits[0])
    assert seq.bits[0] == (1 if u > 0.5 else 0)


def test_seeded_replay_bit_identical():
    a = run_toss_sequence(CFG, SeededPRNGOracle(123), 500)
    b = run_toss_sequence(CFG, oracle_from_descriptor(a.oracle), 500)
    assert np.array_equal(a.bits, b.bits)
    assert a.config_digest == b.config_digest


def test_sequence_is_readout_of_flow_of_sampled_positions():
    # s = g(h(u)) evaluated step by step
    oracle = SeededPRNGOracle(5)
    u = oracle.fresh().uniforms(200)
    q0 = coin_sampler(CFG).quantile(u)
    qT = propagate_ensemble(coin_history(CFG), q0).positions
    expected = np.array([outcome_map(q) for q in qT])
    assert np.array_equal(run_toss_sequence(CFG, oracle, 200).bits, expected)


def test_branches_follow_initial_side():
    # trajectories cannot cross the symmetry axis, so the bit is the initial side
    u = np.linspace(0.001, 0.999, 400)
    u = u[np.abs(u - 0.5) > 1e-3]
    q0 = coin_sampler(CFG).quantile(u)
    qT = propagate_ensemble(coin_history(CFG), q0).positions
    assert np.array_equal(qT > 0, q0 > 0)
    assert np.all(np.diff(qT) > 0)


def test_compatibility_seeded():
    rep = verify_compatibility(CFG, SeededPRNGOracle(2024), 10_000)
    assert rep.passed, rep
    assert rep.ci[0] < 0.5 < rep.ci[1]


@pytest.mark.parametrize("q0", [-6.0, 6.0])
def test_outcome_determinism(q0):
    assert verify_outcome_determinism(CFG, q0, repeats=20)


def test_bits_round_trip(tmp_path):
    bits = np.array([0, 1, 1, 0, 1], dtype=np.uint8)
    path = tmp_path / "s.txt"
    write_bits(path, bits)
    assert path.read_text() == "0\n1\n1\n0\n1\n"
    assert np.array_equal(read_bits(path), bits)
    path.write_text("01x")
    with pytest.raises(ValueError):
        read_bits(path)


def test_sidecar_contents():
    seq = run_toss_sequence(CFG, SeededPRNGOracle(1), 20)
    assert isinstance(seq, OutcomeSequence)
    side = json.loads(json.dumps(seq.sidecar()))
    assert side["n"] == 20
    assert side["config_digest"] == CFG.digest()
    assert side["oracle"] == {"kind": "seeded_prng", "seed": 1}
    assert set(side["flags"]) == {"node", "unresolved", "exact_zero"}


def test_normalization_constant_for_separated_branches():
    wf = prepare_coin_state(CFG)
    right = make_gaussian(CFG.grid, CFG.separation, CFG.width, CFG.momentum)
    i = int(np.argmin(np.abs(CFG.grid.x - CFG.separation)))
    assert abs(abs(wf.amplitudes[i] / right.amplitudes[i]) - 1 / np.sqrt(2)) <= 1e-9


def test_compatibility_constant_oracle_fails():
    rep = verify_compatibility(CFG, ConstantOracle(0.25), 10_000)
    assert rep.empirical_p1 in (0.0, 1.0)
    assert not rep.passed


def test_compatibility_champernowne_base10():
    rep = verify_compatibility(CFG, ChampernowneOracle(10), 10_000)
    assert rep.passed, rep
