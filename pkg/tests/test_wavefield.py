import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from pilotwave.errors import PacketClipped, StepTooLarge, WidthTooSmall
from pilotwave.wavefield import (
    Grid,
    PhysicalConstants,
    Potential,
    WaveFunction,
    continuity_residual,
    density,
    evolve,
    evolve_amplitudes,
    harmonic_ground_state,
    make_gaussian,
    position_moments,
    probability_current,
)

GRID = Grid(-20.0, 20.0, 512)


def test_grid_invariants():
    g = Grid(-3.0, 7.0, 128)
    assert abs(g.dx * g.n_points - (g.x_max - g.x_min)) <= np.spacing(10.0)
    assert g.x[0] == -3.0 and g.x.size == 128
    for bad in (63, 100, 32):
        with pytest.raises(ValueError):
            Grid(0.0, 1.0, bad)
    with pytest.raises(ValueError):
        Grid(1.0, 1.0, 64)


def test_wavefunction_rejects_unnormalized():
    with pytest.raises(ValueError):
        WaveFunction(GRID, np.ones(GRID.n_points))


@given(
    center=st.floats(-5, 5),
    width=st.floats(0.4, 2.0),
    momentum=st.floats(-3, 3),
)
@settings(max_examples=40, deadline=None)
def test_gaussian_is_normalized(center, width, momentum):
    wf = make_gaussian(GRID, center, width, momentum)
    assert abs(np.sum(density(wf)) * GRID.dx - 1) <= 1e-8


def test_gaussian_mirror_symmetry():
    wf = make_gaussian(GRID, 0.0, 1.3, 0.0)
    a = np.abs(wf.amplitudes)
    # x_j and x_{n-j} are mirror images for j >= 1
    np.testing.assert_allclose(a[1:], a[1:][::-1], atol=1e-15)


def test_gaussian_mean_by_quadrature():
    wf = make_gaussian(GRID, 1.0, 0.5, 0.7)
    # independent quadrature of x |psi|^2 with Simpson's rule
    mean = simpson(GRID.x * density(wf), x=GRID.x)
    assert abs(mean - 1.0) <= 1e-6


def test_gaussian_errors():
    with pytest.raises(WidthTooSmall):
        make_gaussian(GRID, 0.0, 3 * GRID.dx)
    with pytest.raises(PacketClipped):
        make_gaussian(GRID, 17.0, 1.0)


def test_density_uniform_and_peak():
    n, dx = GRID.n_points, GRID.dx
    wf = WaveFunction(GRID, np.full(n, 1 / np.sqrt(n * dx)))
    np.testing.assert_allclose(density(wf), 1 / (n * dx))
    g = make_gaussian(GRID, 0.0, 1.0)
    rho = density(g)
    assert np.all(rho >= 0)
    peak = rho[np.argmin(np.abs(GRID.x))]
    assert abs(peak * np.sqrt(2 * np.pi) - 1) <= 1e-8


def test_current_real_wavefunction_is_zero():
    wf = make_gaussian(GRID, 0.5, 1.0, 0.0)
    np.testing.assert_allclose(probability_current(wf), 0.0, atol=1e-14)


@pytest.mark.parametrize("m", [1, 3, -5])
@pytest.mark.parametrize("consts", [PhysicalConstants(), PhysicalConstants(0.5, 2.0)])
def test_current_plane_wave(m, consts):
    k = 2 * np.pi * m / GRID.length
    wf = WaveFunction.normalized(GRID, np.exp(1j * k * GRID.x))
    j = probability_current(wf, consts)
    np.testing.assert_allclose(j, consts.hbar * k / consts.mass * density(wf), atol=1e-8)


def test_continuity_residual_second_order():
    residuals = []
    for n, dt in [(256, 0.1), (512, 0.05), (1024, 0.025)]:
        g = Grid(-20.0, 20.0, n)
        wf = evolve(make_gaussian(g, -2.0, 1.0, 1.0), Potential.free(g), dt, int(round(1 / dt)))
        residuals.append(continuity_residual(wf, Potential.free(g), dt))
    ratios = np.array(residuals[:-1]) / np.array(residuals[1:])
    assert np.all(ratios > 3.5), ratios


def test_evolve_zero_steps_identity():
    wf = make_gaussian(GRID, 0.0, 1.0, 1.0)
    out = evolve(wf, Potential.free(GRID), 0.01, 0)
    assert np.array_equal(out.amplitudes, wf.amplitudes)


def test_harmonic_ground_state_stationary():
    omega = 1.0
    wf = harmonic_ground_state(GRID, omega)
    pot = Potential.harmonic(GRID, omega)
    a0 = np.abs(wf.amplitudes)
    cur = wf
    for _ in range(10):
        cur = evolve(cur, pot, 0.002, 100)
        assert np.max(np.abs(np.abs(cur.amplitudes) - a0)) <= 1e-6


def test_step_guard():
    pot = Potential.harmonic(GRID, 1.0)  # max V = 200
    with pytest.raises(StepTooLarge):
        evolve(harmonic_ground_state(GRID, 1.0), pot, 0.01, 1)


def test_free_spreading_matches_analytic():
    sigma = 1.0
    wf = make_gaussian(GRID, 0.0, sigma)
    t = 2 * sigma**2  # 2 m sigma^2 / hbar
    out = evolve(wf, Potential.free(GRID), t / 200, 200)
    _, var = position_moments(out)
    expected = sigma**2 + (t / (2 * sigma)) ** 2
    assert abs(var / expected - 1) <= 1e-3


def test_unitarity_many_steps():
    pot = Potential.harmonic(GRID, 0.3)
    wf = make_gaussian(GRID, 2.0, 1.0, 0.5)
    steps = 2000
    out = evolve(wf, pot, 0.01, steps)
    assert abs(out.norm() - 1) <= steps * 1e-10


@given(a=st.complex_numbers(max_magnitude=3), b=st.complex_numbers(max_magnitude=3))
@settings(max_examples=25, deadline=None)
def test_linearity(a, b):
    pot = Potential.harmonic(GRID, 0.5)
    p1 = make_gaussian(GRID, -2.0, 1.0, 1.0).amplitudes
    p2 = make_gaussian(GRID, 3.0, 0.7, -0.5).amplitudes
    lhs = evolve_amplitudes(GRID, a * p1 + b * p2, pot, 0.01, 20)
    rhs = a * evolve_amplitudes(GRID, p1, pot, 0.01, 20) + b * evolve_amplitudes(GRID, p2, pot, 0.01, 20)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_time_reversal():
    pot = Potential.harmonic(GRID, 0.5)
    wf = make_gaussian(GRID, 1.0, 1.0, 1.0)
    steps = 50
    back = evolve(evolve(wf, pot, 0.01, steps), pot, -0.01, steps)
    assert np.max(np.abs(back.amplitudes - wf.amplitudes)) <= steps * 1e-9
