"""Wave functions on a periodic 1-D grid and split-step Schrödinger propagation.

Everything here is an immutable value: propagation returns new
:class:`WaveFunction` objects and never mutates its input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import erfc

from .errors import PacketClipped, StepTooLarge, WidthTooSmall

NORM_TOL = 1e-8
CLIP_THRESHOLD = 1e-10
# Fraction of the grid (at each end) treated as the boundary layer.
BOUNDARY_FRACTION = 1 / 32


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be strictly positive")


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid ``x_j = x_min + j*dx`` for ``j < n_points``."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        n = self.n_points
        if n < 64 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 64, got {n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + self.dx * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        k = 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)
        k.flags.writeable = False
        return k

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all((x >= self.x_min) & (x <= self.x_max)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.grid.n_points,):
            raise ValueError("amplitudes must have length n_points")
        object.__setattr__(self, "amplitudes", amps)
        norm = self.norm()
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"wave function not normalized: norm = {norm!r}")

    @classmethod
    def normalized(cls, grid: Grid, amplitudes) -> "WaveFunction":
        amps = np.asarray(amplitudes, dtype=complex)
        n2 = np.sum(np.abs(amps) ** 2) * grid.dx
        if not n2 > 0:
            raise ValueError("cannot normalize a zero wave function")
        return cls(grid, amps / np.sqrt(n2))

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)


@dataclass(frozen=True, eq=False)
class Potential:
    """Real potential sampled on a grid, tagged ``free``, ``harmonic`` or ``custom``."""

    values: np.ndarray
    tag: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("potential values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def free(cls, grid: Grid) -> "Potential":
        return cls(np.zeros(grid.n_points), "free")

    @classmethod
    def harmonic(cls, grid: Grid, omega: float, constants: PhysicalConstants = PhysicalConstants()) -> "Potential":
        return cls(0.5 * constants.mass * omega**2 * grid.x**2, "harmonic", {"omega": omega})

    @classmethod
    def custom(cls, values) -> "Potential":
        return cls(values, "custom")


def gaussian_outside_mass(grid: Grid, center: float, width: float) -> float:
    """Analytic Born mass of an unclipped Gaussian packet lying outside the grid."""
    s = np.sqrt(2.0) * width
    return float(0.5 * erfc((grid.x_max - center) / s) + 0.5 * erfc((center - grid.x_min) / s))


def make_gaussian(
    grid: Grid,
    center: float,
    width: float,
    momentum: float = 0.0,
    constants: PhysicalConstants = PhysicalConstants(),
) -> WaveFunction:
    """Gaussian packet with position standard deviation ``width`` and mean momentum ``momentum``."""
    if not grid.x_min < center < grid.x_max:
        raise ValueError("center must lie inside the grid")
    if width < 4 * grid.dx:
        raise WidthTooSmall(f"width {width} < 4*dx = {4 * grid.dx}")
    outside = gaussian_outside_mass(grid, center, width)
    if outside >= CLIP_THRESHOLD:
        raise PacketClipped(f"packet mass outside grid is {outside:.3e}")
    x = grid.x
    amps = np.exp(-((x - center) ** 2) / (4 * width**2)) * np.exp(1j * momentum * x / constants.hbar)
    return WaveFunction.normalized(grid, amps)


def harmonic_ground_state(grid: Grid, omega: float, constants: PhysicalConstants = PhysicalConstants()) -> WaveFunction:
    x = grid.x
    return WaveFunction.normalized(grid, np.exp(-constants.mass * omega * x**2 / (2 * constants.hbar)))


def density(wf: WaveFunction) -> np.ndarray:
    return np.abs(wf.amplitudes) ** 2


def spectral_derivative(grid: Grid, amplitudes: np.ndarray) -> np.ndarray:
    return np.fft.ifft(1j * grid.k * np.fft.fft(amplitudes))


def probability_current(wf: WaveFunction, constants: PhysicalConstants = PhysicalConstants()) -> np.ndarray:
    """``j = (hbar/m) Im(conj(psi) dpsi/dx)`` with a spectral derivative."""
    psi = wf.amplitudes
    dpsi = spectral_derivative(wf.grid, psi)
    return constants.hbar / constants.mass * np.imag(np.conj(psi) * dpsi)


def position_moments(wf: WaveFunction) -> tuple[float, float]:
    """Mean and variance of the Born position distribution."""
    rho = density(wf) * wf.grid.dx
    x = wf.grid.x
    mean = float(np.sum(x * rho))
    return mean, float(np.sum((x - mean) ** 2 * rho))


def boundary_mass(wf: WaveFunction, fraction: float = BOUNDARY_FRACTION) -> float:
    """Born mass in the outer ``fraction`` of the grid at each end."""
    m = max(1, int(wf.grid.n_points * fraction))
    rho = density(wf)
    return float((rho[:m].sum() + rho[-m:].sum()) * wf.grid.dx)


def check_boundary(wf: WaveFunction, threshold: float = CLIP_THRESHOLD) -> None:
    mass = boundary_mass(wf)
    if mass >= threshold:
        raise PacketClipped(f"boundary mass {mass:.3e} exceeds {threshold:.1e}")


def _check_step(potential: Potential, dt: float, constants: PhysicalConstants) -> None:
    vmax = float(np.max(np.abs(potential.values))) if potential.values.size else 0.0
    if abs(dt) * vmax / constants.hbar >= 1.0:
        raise StepTooLarge(f"|dt|*max|V|/hbar = {abs(dt) * vmax / constants.hbar:.3g} >= 1")


def evolve_amplitudes(
    grid: Grid,
    amplitudes: np.ndarray,
    potential: Potential,
    dt: float,
    steps: int,
    constants: PhysicalConstants = PhysicalConstants(),
) -> np.ndarray:
    """Strang split-step propagation of raw (not necessarily normalized) amplitudes.

    Each step applies a half kick ``exp(-i V dt / 2 hbar)``, an exact
    spectral drift ``exp(-i hbar k^2 dt / 2m)`` and another half kick.
    Negative ``dt`` runs the propagator backwards.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    _check_step(potential, dt, constants)
    psi = np.array(amplitudes, dtype=complex)
    if steps == 0:
        return psi
    half_kick = np.exp(-0.5j * potential.values * dt / constants.hbar)
    drift = np.exp(-0.5j * constants.hbar * grid.k**2 * dt / constants.mass)
    for _ in range(steps):
        psi = half_kick * psi
        psi = np.fft.ifft(drift * np.fft.fft(psi))
        psi = half_kick * psi
    return psi


def evolve(
    wf: WaveFunction,
    potential: Potential,
    dt: float,
    steps: int,
    constants: PhysicalConstants = PhysicalConstants(),
) -> WaveFunction:
    if steps == 0:
        _check_step(potential, dt, constants)
        return wf
    return WaveFunction(wf.grid, evolve_amplitudes(wf.grid, wf.amplitudes, potential, dt, steps, constants))


def continuity_residual(
    wf: WaveFunction,
    potential: Potential,
    dt: float,
    constants: PhysicalConstants = PhysicalConstants(),
) -> float:
    """Max-norm of the discrete ``d rho/dt + d j/dx`` at the state ``wf``.

    Centred differences in both time (one propagation step either way) and
    space, so the residual is second order in ``dt`` and ``dx``.
    """
    later = evolve(wf, potential, dt, 1, constants)
    earlier = evolve(wf, potential, -dt, 1, constants)
    drho = (density(later) - density(earlier)) / (2 * dt)
    j = probability_current(wf, constants)
    dj = (np.roll(j, -1) - np.roll(j, 1)) / (2 * wf.grid.dx)
    return float(np.max(np.abs(drho + dj)))
