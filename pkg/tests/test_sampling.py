import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pilotwave.errors import FileExhausted
from pilotwave.sampling import (
    BornSampler,
    ChampernowneOracle,
    ConstantOracle,
    EntropyOracle,
    FileOracle,
    PeriodicOracle,
    SeededPRNGOracle,
    born_sample,
    champernowne_prefix,
    oracle_from_descriptor,
    sample_stream,
)
from pilotwave.wavefield import Grid, WaveFunction, make_gaussian

GRID = Grid(-20.0, 20.0, 1024)


def double_gaussian(a=5.0):
    left = make_gaussian(GRID, -a, 1.0)
    right = make_gaussian(GRID, a, 1.0)
    return WaveFunction.normalized(GRID, left.amplitudes + right.amplitudes)


def test_constant_oracle():
    o = ConstantOracle(0.25)
    assert [o.next_uniform() for _ in range(5)] == [0.25] * 5
    assert o.cursor == 5


def test_champernowne_base10_digits():
    assert champernowne_prefix(10, 32) == "01234567891011121314151617181920"


def test_champernowne_base2_bits():
    # 1, 10, 11, 100, 101, 110, 111, 1000 written out by hand
    by_hand = "".join(["1", "10", "11", "100", "101", "110", "111", "1000"])
    assert by_hand == "110111001011101111000"
    assert champernowne_prefix(2, 21) == by_hand


def test_champernowne_uniforms_are_fixed_point_fractions():
    o = ChampernowneOracle(2)
    bits = champernowne_prefix(2, 106)
    assert o.next_uniform() == int(bits[:53], 2) / 2**53
    assert o.next_uniform() == int(bits[53:], 2) / 2**53
    d = ChampernowneOracle(10)
    digits = champernowne_prefix(10, 53)
    assert d.next_uniform() == int(digits) / 10**53


def test_periodic_oracle():
    o = PeriodicOracle("011")
    stream = ("011" * 100)[:106]
    assert o.next_uniform() == int(stream[:53], 2) / 2**53
    assert o.next_uniform() == int(stream[53:106], 2) / 2**53


def test_file_oracle(tmp_path):
    bits = "".join(np.random.default_rng(0).choice(["0", "1"], 106))
    path = tmp_path / "bits.txt"
    path.write_text(bits[:40] + "\n  " + bits[40:] + "\n")
    o = FileOracle(path)
    assert o.next_uniform() == int(bits[:53], 2) / 2**53
    assert o.next_uniform() == int(bits[53:], 2) / 2**53
    with pytest.raises(FileExhausted):
        o.next_uniform()


def test_entropy_recording_replays_through_file(tmp_path):
    e = EntropyOracle()
    u = np.concatenate([e.uniforms(50), [e.next_uniform() for _ in range(3)]])
    path = tmp_path / "rec.txt"
    path.write_text(e.recorded_bits())
    assert np.array_equal(FileOracle(path).uniforms(53), u)
    assert np.all((u >= 0) & (u < 1))


@pytest.mark.parametrize(
    "desc",
    [
        {"kind": "seeded_prng", "seed": 2**64 - 1},
        {"kind": "champernowne", "base": 10},
        {"kind": "champernowne", "base": 2},
        {"kind": "periodic", "pattern": "0110100"},
        {"kind": "constant", "value": 0.9},
    ],
)
def test_replay_is_bit_exact(desc):
    a = oracle_from_descriptor(desc).uniforms(300)
    o = oracle_from_descriptor(desc)
    b = np.array([o.next_uniform() for _ in range(300)])
    assert np.array_equal(a, b)
    o.reset()
    assert np.array_equal(o.uniforms(300), a)
    assert np.all((a >= 0) & (a < 1))


def test_all_nines_stays_below_one():
    assert PeriodicOracle("1").next_uniform() < 1.0


def test_born_cdf_properties():
    s = BornSampler.from_wavefunction(double_gaussian())
    assert np.all(np.diff(s.cdf_values) >= 0)
    assert abs(s.cdf_values[-1] - 1) <= 1e-8


def test_born_sample_single_cell():
    amps = np.zeros(GRID.n_points)
    amps[600] = 1.0
    s = BornSampler.from_wavefunction(WaveFunction.normalized(GRID, amps))
    for u in (0.0, 0.3, 0.999):
        assert abs(born_sample(s, u) - GRID.x[600]) <= GRID.dx / 2


def test_born_sample_median_of_symmetric_state():
    s = BornSampler.from_wavefunction(double_gaussian())
    assert abs(born_sample(s, 0.5)) <= GRID.dx


def test_born_sample_normal_quantile():
    s = BornSampler.from_wavefunction(make_gaussian(GRID, 0.0, 1.0))
    q = stats.norm.ppf(0.8413)
    assert abs(q - 1.0) < 1e-3
    assert abs(born_sample(s, 0.8413) - 1.0) <= 2 * GRID.dx


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
@settings(max_examples=200, deadline=None)
def test_born_sample_monotone(u1, u2):
    s = BornSampler.from_wavefunction(double_gaussian())
    lo, hi = sorted((u1, u2))
    assert born_sample(s, lo) <= born_sample(s, hi)


def test_born_sample_distribution_on_uniform_grid():
    s = BornSampler.from_wavefunction(double_gaussian())
    u = (np.arange(10_000) + 0.5) / 10_000
    ks = stats.kstest(s.quantile(u), s.cdf).statistic
    assert ks <= 0.01


def test_sample_stream_constant_and_replay():
    s = BornSampler.from_wavefunction(double_gaussian())
    c = sample_stream(ConstantOracle(0.25), s, 20)
    assert np.all(c == c[0])
    a = sample_stream(SeededPRNGOracle(42), s, 500)
    b = sample_stream(SeededPRNGOracle(42), s, 500)
    assert np.array_equal(a, b)


def test_sample_stream_entropy_branches_balanced():
    n = 10_000
    s = BornSampler.from_wavefunction(double_gaussian())
    q = sample_stream(EntropyOracle(), s, n)
    right = int(np.sum(q > 0))
    assert abs(right - n / 2) <= 3 * np.sqrt(n / 4)
    assert abs((n - right) - n / 2) <= 3 * np.sqrt(n / 4)
