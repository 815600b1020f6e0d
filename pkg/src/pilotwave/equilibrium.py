"""Conditional wave functions and the quantum-equilibrium marginal at desk scale.

A bipartite state ``Psi(y, z)`` lives on a product of two grids (rows = y,
columns = z).  Conditioning on an environment configuration ``z = s`` gives
``Psi^s(y) = Psi(y, s) / ||Psi(., s)||``.  For product states the result is
the system wave function times a y-independent phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NullFiber
from .wavefield import Grid, WaveFunction

FIBER_FLOOR = 1e-12
PHASE_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class BipartiteWF:
    grid_y: Grid
    grid_z: Grid
    amplitudes: np.ndarray  # shape (n_y, n_z)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.shape != (self.grid_y.n_points, self.grid_z.n_points):
            raise ValueError("amplitudes must have shape (n_y, n_z)")
        norm = np.sum(np.abs(a) ** 2) * self.grid_y.dx * self.grid_z.dx
        if abs(norm - 1) > 1e-8:
            raise ValueError(f"bipartite state not normalized: {norm!r}")
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def product(cls, psi: WaveFunction, phi: WaveFunction) -> "BipartiteWF":
        return cls(psi.grid, phi.grid, np.outer(psi.amplitudes, phi.amplitudes))

    @classmethod
    def normalized(cls, grid_y: Grid, grid_z: Grid, amplitudes) -> "BipartiteWF":
        a = np.asarray(amplitudes, dtype=complex)
        return cls(grid_y, grid_z, a / np.sqrt(np.sum(np.abs(a) ** 2) * grid_y.dx * grid_z.dx))


def _condition(column: np.ndarray, cell: float) -> np.ndarray:
    norm = np.sqrt(np.sum(np.abs(column) ** 2) * cell)
    if not norm > FIBER_FLOOR:
        raise NullFiber(f"fiber norm {norm:.3e} below {FIBER_FLOOR:.0e}")
    return column / norm


def conditional_wf(psi: BipartiteWF, s_index: int) -> WaveFunction:
    return WaveFunction(psi.grid_y, _condition(psi.amplitudes[:, s_index], psi.grid_y.dx))


def _phase_residual(cond: np.ndarray, ref: np.ndarray) -> float:
    mask = np.abs(ref) > PHASE_FLOOR
    if not np.any(mask):
        return 0.0
    ratio = cond[mask] / ref[mask]
    pivot = ratio[np.argmax(np.abs(ref[mask]))]
    return float(np.max(np.abs(ratio - pivot)))


@dataclass(frozen=True)
class FactorizationReport:
    is_member: bool
    max_amplitude_deviation: float
    max_phase_residual: float
    fibers_checked: int


def check_factorization(psi: BipartiteWF, psi_m: WaveFunction, tol: float = 1e-10) -> FactorizationReport:
    """Is every non-null fiber of ``psi`` equal to ``psi_m`` up to a y-independent phase?"""
    if psi_m.grid.n_points != psi.grid_y.n_points:
        raise ValueError("system wave function does not match grid_y")
    ref = psi_m.amplitudes
    dy = psi.grid_y.dx
    amp_dev = phase_res = 0.0
    checked = 0
    for col in psi.amplitudes.T:
        if np.sqrt(np.sum(np.abs(col) ** 2) * dy) <= FIBER_FLOOR:
            continue
        cond = _condition(col, dy)
        amp_dev = max(amp_dev, float(np.max(np.abs(np.abs(cond) - np.abs(ref)))))
        phase_res = max(phase_res, _phase_residual(cond, ref))
        checked += 1
    return FactorizationReport(amp_dev <= tol and phase_res <= tol, amp_dev, phase_res, checked)


def interval_weights(grid: Grid, lo: float, hi: float) -> np.ndarray:
    """Fraction of each grid cell ``[x_j - dx/2, x_j + dx/2)`` that lies inside ``[lo, hi]``."""
    left = grid.x - grid.dx / 2
    overlap = np.clip(np.minimum(left + grid.dx, hi) - np.maximum(left, lo), 0.0, None)
    return overlap / grid.dx


def born_probability(wf: WaveFunction, lo: float, hi: float) -> float:
    rho = np.abs(wf.amplitudes) ** 2
    return float(np.sum(interval_weights(wf.grid, lo, hi) * rho) * wf.grid.dx)


def qeh_marginal(psi_list, region) -> float:
    """Product of one-coordinate Born probabilities over an interval per coordinate."""
    if len(psi_list) != len(region):
        raise ValueError("one interval per coordinate is required")
    p = 1.0
    for wf, (lo, hi) in zip(psi_list, region):
        p *= born_probability(wf, lo, hi)
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class ConsistencyReport:
    marginal: float
    conditional: np.ndarray  # region probability for each environment index
    max_deviation: float
    passed: bool


def qeh_consistency(psi1: WaveFunction, psi2: WaveFunction, phi: WaveFunction, region, tol: float = 1e-8) -> ConsistencyReport:
    """Condition ``psi1 (x) psi2 (x) phi`` on each environment point and compare with :func:`qeh_marginal`.

    The two system coordinates are flattened into one composite ``y`` axis
    of the bipartite amplitude matrix.
    """
    g1, g2, gz = psi1.grid, psi2.grid, phi.grid
    if max(g1.n_points, g2.n_points, gz.n_points) > 64:
        raise ValueError("qeh_consistency is limited to grids of at most 64 points per coordinate")
    full = np.einsum("i,j,k->ijk", psi1.amplitudes, psi2.amplitudes, phi.amplitudes)
    composite = full.reshape(g1.n_points * g2.n_points, gz.n_points)
    cell = g1.dx * g2.dx
    w1 = interval_weights(g1, *region[0])
    w2 = interval_weights(g2, *region[1])
    marginal = qeh_marginal([psi1, psi2], region)
    probs = []
    for s in range(gz.n_points):
        col = composite[:, s]
        if np.sqrt(np.sum(np.abs(col) ** 2) * cell) <= FIBER_FLOOR:
            continue
        rho = np.abs(_condition(col, cell).reshape(g1.n_points, g2.n_points)) ** 2
        probs.append(float(w1 @ rho @ w2) * cell)
    probs = np.array(probs)
    dev = float(np.max(np.abs(probs - marginal))) if probs.size else 0.0
    return ConsistencyReport(marginal, probs, dev, dev <= tol)


def random_wavefunction(rng: np.random.Generator, grid: Grid) -> WaveFunction:
    """Random complex amplitudes under a Gaussian envelope a quarter of the box wide."""
    env = np.exp(-0.5 * ((grid.x - 0.5 * (grid.x_min + grid.x_max)) / (grid.length / 8)) ** 2)
    amps = (rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points)) * env
    return WaveFunction.normalized(grid, amps)


def demo(rng: np.random.Generator, n_points: int = 64, half_width: float = 8.0, states: int = 20) -> dict:
    """Conditioning, factorization and QEH checks on randomized product states."""
    from scipy.special import erf

    from .wavefield import make_gaussian

    grid = Grid(-half_width, half_width, n_points)
    amp_dev = phase_res = 0.0
    members = 0
    for _ in range(states):
        psi, phi = random_wavefunction(rng, grid), random_wavefunction(rng, grid)
        rep = check_factorization(BipartiteWF.product(psi, phi), psi)
        amp_dev = max(amp_dev, rep.max_amplitude_deviation)
        phase_res = max(phase_res, rep.max_phase_residual)
        members += rep.is_member
    fine = Grid(-10.0, 10.0, 256)
    g = make_gaussian(fine, 0.0, 1.0)
    marginal = qeh_marginal([g, g], [(-1.0, 1.0), (-1.0, 1.0)])
    small = Grid(-8.0, 8.0, 64)
    gs = make_gaussian(small, 0.0, 1.0)
    cons = qeh_consistency(gs, gs, random_wavefunction(rng, small), [(-1.0, 1.0), (-1.0, 1.0)])
    return {
        "states": states,
        "members": members,
        "max_amplitude_deviation": amp_dev,
        "max_phase_residual": phase_res,
        "qeh_gaussian_unit_box": marginal,
        "qeh_gaussian_unit_box_exact": float(erf(1 / np.sqrt(2)) ** 2),
        "consistency_max_deviation": cons.max_deviation,
        "consistency_passed": cons.passed,
    }
