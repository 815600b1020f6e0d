"""Guiding-equation velocity field and Bohmian trajectory integration.

Trajectories are integrated with classical RK4 through a recorded
:class:`WavefieldHistory`.  The wave function is interpolated linearly in
time between snapshots and by 4-point Lagrange (local cubic) interpolation in
space, separately for the real and imaginary parts of psi and dpsi/dx.

The ensemble integrator is vectorized over samples, but every operation is
elementwise, so each sample's path is bit-identical to integrating it alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NodeProximity, NodeUnresolvable
from .outputs import emit_plot_data
from .wavefield import (
    Grid,
    PhysicalConstants,
    Potential,
    WaveFunction,
    check_boundary,
    evolve_amplitudes,
    spectral_derivative,
)

NODE_EPS = 1e-8
RETRY_SUBSTEPS = 4


@dataclass(frozen=True, eq=False)
class WavefieldHistory:
    """Snapshots ``psi(t_i)`` at uniformly spaced times ``t_i = i*dt``."""

    grid: Grid
    dt: float
    snapshots: np.ndarray  # (n_snapshots, n_points)
    derivatives: np.ndarray  # spectral d/dx of each snapshot

    def __post_init__(self):
        if self.snapshots.ndim != 2 or self.snapshots.shape[0] < 2:
            raise ValueError("history needs at least two snapshots")
        norms = np.sum(np.abs(self.snapshots) ** 2, axis=1) * self.grid.dx
        if np.max(np.abs(norms - 1)) > 1e-8:
            raise ValueError("history snapshots must be normalized")

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.snapshots.shape[0])

    @property
    def duration(self) -> float:
        return self.dt * (self.snapshots.shape[0] - 1)

    @cached_property
    def peak_density(self) -> np.ndarray:
        """``max |psi|^2`` of each snapshot; the node-guard reference."""
        return np.max(np.abs(self.snapshots) ** 2, axis=1)

    def locate(self, t: float) -> tuple[int, float]:
        """Snapshot index ``i`` and fraction ``f`` with ``t = (i + f) * dt``."""
        last = self.snapshots.shape[0] - 2
        s = t / self.dt
        i = min(max(int(np.floor(s)), 0), last)
        return i, s - i

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Grid values of psi and dpsi/dx at time ``t``, linear in psi between snapshots."""
        i, f = self.locate(t)
        if f == 0.0:
            return self.snapshots[i], self.derivatives[i]
        if f == 1.0:
            return self.snapshots[i + 1], self.derivatives[i + 1]
        psi = (1 - f) * self.snapshots[i] + f * self.snapshots[i + 1]
        dpsi = (1 - f) * self.derivatives[i] + f * self.derivatives[i + 1]
        return psi, dpsi

    def wavefunction(self, index: int) -> WaveFunction:
        return WaveFunction(self.grid, self.snapshots[index])


def record_history(
    wf: WaveFunction,
    potential: Potential,
    dt: float,
    steps: int,
    constants: PhysicalConstants = PhysicalConstants(),
    check_clipping: bool = True,
) -> WavefieldHistory:
    """Propagate ``wf`` for ``steps`` steps, keeping every intermediate state."""
    if steps < 1:
        raise ValueError("a history needs at least one step")
    grid = wf.grid
    snaps = np.empty((steps + 1, grid.n_points), dtype=complex)
    snaps[0] = wf.amplitudes
    for i in range(steps):
        snaps[i + 1] = evolve_amplitudes(grid, snaps[i], potential, dt, 1, constants)
    if check_clipping:
        for row in snaps[:: max(1, steps // 16)]:
            check_boundary(WaveFunction(grid, row))
        check_boundary(WaveFunction(grid, snaps[-1]))
    derivs = np.array([spectral_derivative(grid, row) for row in snaps])
    for a in (snaps, derivs):
        a.flags.writeable = False
    return WavefieldHistory(grid, dt, snaps, derivs)


def _stencil(grid: Grid, x: np.ndarray):
    u = (x - grid.x_min) / grid.dx
    i = np.floor(u)
    f = u - i
    i = i.astype(np.int64)
    n = grid.n_points
    idx = np.stack([(i - 1) % n, i % n, (i + 1) % n, (i + 2) % n])
    w = np.stack(
        [
            -f * (f - 1) * (f - 2) / 6,
            (f + 1) * (f - 1) * (f - 2) / 2,
            -(f + 1) * f * (f - 2) / 2,
            (f + 1) * f * (f - 1) / 6,
        ]
    )
    return idx, w


def _interp(values: np.ndarray, idx: np.ndarray, w: np.ndarray) -> np.ndarray:
    # real weights: Re and Im parts are interpolated independently
    v = values[idx]
    return w[0] * v[0] + w[1] * v[1] + w[2] * v[2] + w[3] * v[3]


def _guided(p, dp, rho_max, constants, node_eps):
    """Velocity from interpolated psi and dpsi/dx, and the node-guard mask."""
    rho = p.real**2 + p.imag**2
    near_node = rho < node_eps * rho_max
    j = constants.hbar / constants.mass * (p.real * dp.imag - p.imag * dp.real)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(near_node, 0.0, j / np.where(near_node, 1.0, rho))
    return v, near_node


def _field_velocity(grid, psi, dpsi, x, constants, node_eps):
    idx, w = _stencil(grid, x)
    return _guided(_interp(psi, idx, w), _interp(dpsi, idx, w), np.max(np.abs(psi) ** 2), constants, node_eps)


def _history_velocity(history, t, x, constants, node_eps):
    """Velocity along the time-interpolated history, touching only the stencil points."""
    i, f = history.locate(t)
    idx, w = _stencil(history.grid, x)
    snaps, ders, peak = history.snapshots, history.derivatives, history.peak_density
    if f == 0.0 or f == 1.0:
        k = i + int(f)
        return _guided(_interp(snaps[k], idx, w), _interp(ders[k], idx, w), peak[k], constants, node_eps)
    p = (1 - f) * _interp(snaps[i], idx, w) + f * _interp(snaps[i + 1], idx, w)
    dp = (1 - f) * _interp(ders[i], idx, w) + f * _interp(ders[i + 1], idx, w)
    return _guided(p, dp, (1 - f) * peak[i] + f * peak[i + 1], constants, node_eps)


def velocity(
    wf: WaveFunction,
    x: float,
    constants: PhysicalConstants = PhysicalConstants(),
    node_eps: float = NODE_EPS,
) -> float:
    """Guiding velocity ``j/rho`` at a single position."""
    if not wf.grid.contains(x):
        raise ValueError(f"x = {x} lies outside the grid")
    dpsi = spectral_derivative(wf.grid, wf.amplitudes)
    v, near = _field_velocity(wf.grid, wf.amplitudes, dpsi, np.array([float(x)]), constants, node_eps)
    if near[0]:
        raise NodeProximity(f"density at x = {x} below node guard")
    return float(v[0])


def _rk4(history, q, t, h, constants, node_eps):
    hit = np.zeros(q.shape, dtype=bool)

    def f(tt, qq):
        v, near = _history_velocity(history, tt, qq, constants, node_eps)
        hit[:] |= near
        return v

    k1 = f(t, q)
    k2 = f(t + h / 2, q + h / 2 * k1)
    k3 = f(t + h / 2, q + h / 2 * k2)
    k4 = f(t + h, q + h * k3)
    return q + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4), hit


def _wrap(grid: Grid, q: np.ndarray):
    out = (q < grid.x_min) | (q >= grid.x_max)
    if np.any(out):
        q = q.copy()
        q[out] = grid.x_min + np.mod(q[out] - grid.x_min, grid.length)
    return q, out


@dataclass
class _Integration:
    path: list
    node_events: np.ndarray  # (steps, n) node guard hit during step
    unresolved: np.ndarray
    wrapped: np.ndarray


def _integrate(history, q0, constants, node_eps, store):
    grid = history.grid
    q = np.array(q0, dtype=float)
    n_steps = history.snapshots.shape[0] - 1
    h = history.dt
    unresolved = np.zeros(q.shape, dtype=bool)
    wrapped = np.zeros(q.shape, dtype=bool)
    events = np.zeros((n_steps,) + q.shape, dtype=bool)
    path = [q.copy()]
    for step in range(n_steps):
        t = step * h
        live = np.flatnonzero(~unresolved)
        if live.size == 0:
            path = path + [q.copy()] if store else [q, q.copy()]
            continue
        q_live = q[live]
        q_next, hit = _rk4(history, q_live, t, h, constants, node_eps)
        if np.any(hit):
            retry = np.flatnonzero(hit)
            qr = q_live[retry]
            sub_hit = np.zeros(retry.shape, dtype=bool)
            hs = h / RETRY_SUBSTEPS
            for s in range(RETRY_SUBSTEPS):
                qr, hh = _rk4(history, qr, t + s * hs, hs, constants, node_eps)
                sub_hit |= hh
            q_next[retry] = np.where(sub_hit, q_live[retry], qr)
            events[step, live[retry]] = True
            unresolved[live[retry[sub_hit]]] = True
        q_next, out = _wrap(grid, q_next)
        wrapped[live] |= out
        q = q.copy()
        q[live] = q_next
        if store:
            path.append(q.copy())
        else:
            path = [path[-1], q.copy()]
    return _Integration(path, events, unresolved, wrapped)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    node_events: np.ndarray  # per stored step, True where the node guard fired
    wrapped: bool = False

    def __post_init__(self):
        if self.times.shape != self.positions.shape:
            raise ValueError("times and positions must have equal length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def node_flag(self) -> bool:
        return bool(np.any(self.node_events))

    def rows(self):
        for t, q, e in zip(self.times, self.positions, self.node_events):
            yield float(t), float(q), int(bool(e))

    def to_csv(self, path) -> None:
        write_trajectories_csv(path, [self])


def write_trajectories_csv(path, trajectories) -> None:
    emit_plot_data(list(trajectories), "trajectories", path)


def integrate_trajectory(
    history: WavefieldHistory,
    q0: float,
    constants: PhysicalConstants = PhysicalConstants(),
    node_eps: float = NODE_EPS,
) -> Trajectory:
    """RK4 trajectory through ``history`` starting at ``q0`` at time 0.

    A step whose stages enter the node guard is retried once as four
    quarter steps; if that also fails :class:`NodeUnresolvable` is raised.
    """
    if not history.grid.contains(q0):
        raise ValueError(f"q0 = {q0} lies outside the grid")
    res = _integrate(history, np.array([float(q0)]), constants, node_eps, store=True)
    if res.unresolved[0]:
        step = int(np.flatnonzero(res.node_events[:, 0])[-1])
        raise NodeUnresolvable(f"trajectory from q0 = {q0} stuck at a node near t = {step * history.dt:.6g}")
    events = np.concatenate([[False], res.node_events[:, 0]])
    return Trajectory(history.times, np.array([p[0] for p in res.path]), events, bool(res.wrapped[0]))


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    positions: np.ndarray  # final positions, same order as the input
    previous: np.ndarray  # positions one step before the end
    node_flags: np.ndarray
    unresolved: np.ndarray
    wrapped: np.ndarray

    def __len__(self):
        return self.positions.size


def propagate_ensemble(
    history: WavefieldHistory,
    initial_positions,
    constants: PhysicalConstants = PhysicalConstants(),
    node_eps: float = NODE_EPS,
) -> EnsembleResult:
    """Final positions of independent trajectories, one per initial position.

    Unresolvable trajectories do not abort the run; they are frozen at their
    last good position and marked in ``unresolved``.
    """
    q0 = np.asarray(initial_positions, dtype=float)
    if q0.ndim != 1:
        raise ValueError("initial_positions must be one-dimensional")
    if not history.grid.contains(q0):
        raise ValueError("initial positions must lie inside the grid")
    res = _integrate(history, q0, constants, node_eps, store=False)
    prev, last = res.path[-2], res.path[-1]
    return EnsembleResult(last, prev, res.node_events.any(axis=0), res.unresolved, res.wrapped)
