"""Quantum coin toss: a symmetric two-packet state read out by the sign of q(T).

The spin-1/2 measurement is modelled as spatial branch splitting: two
Gaussian packets at -a and +a drift apart freely with momenta -p and +p.
A toss draws the initial position from the Born density via an oracle,
follows the Bohmian trajectory to time T, and reports 1 if the particle
ends right of the origin.  The outcome sequence is therefore ``g o h`` with
``h`` the oracle plus Born transform and ``g`` the deterministic flow plus
sign readout.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigError, ExactZero
from .pilot import NODE_EPS, WavefieldHistory, integrate_trajectory, propagate_ensemble, record_history
from .sampling import BornSampler, SamplingOracle, sample_stream
from .wavefield import (
    Grid,
    PhysicalConstants,
    Potential,
    WaveFunction,
    make_gaussian,
)


@dataclass(frozen=True)
class TossConfig:
    x_min: float = -40.0
    x_max: float = 40.0
    n_points: int = 1024
    separation: float = 6.0  # packet centres at -a and +a
    width: float = 1.0
    momentum: float = 1.5
    time: float = 4.0
    steps: int = 200
    node_eps: float = NODE_EPS
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        try:
            self.grid
            PhysicalConstants(self.hbar, self.mass)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.steps < 1 or self.time <= 0:
            raise ConfigError("time and steps must be positive")
        if self.width <= 0 or self.separation <= 0 or self.momentum < 0:
            raise ConfigError("width and separation must be positive, momentum nonnegative")
        if self.separation < 4 * self.width:
            raise ConfigError("packets not resolved at t = 0: separation < 4*width")
        if self.readout_center < 4 * self.readout_width:
            raise ConfigError("packets not resolved at readout: centre < 4*width(T)")
        reach = self.readout_center + 12 * self.readout_width
        if reach > min(-self.x_min, self.x_max):
            raise ConfigError(f"grid too small: packets reach |x| = {reach:.3g} by time T")

    @property
    def grid(self) -> Grid:
        return Grid(self.x_min, self.x_max, self.n_points)

    @property
    def constants(self) -> PhysicalConstants:
        return PhysicalConstants(self.hbar, self.mass)

    @property
    def dt(self) -> float:
        return self.time / self.steps

    @property
    def readout_width(self) -> float:
        """Free-packet position spread at time T."""
        tau = self.hbar * self.time / (2 * self.mass * self.width**2)
        return self.width * math.sqrt(1 + tau**2)

    @property
    def readout_center(self) -> float:
        return self.separation + self.momentum * self.time / self.mass

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def prepare_coin_state(config: TossConfig) -> WaveFunction:
    """``N (phi_{-a,-p} + phi_{+a,+p})``, mirror symmetric about x = 0."""
    g, c = config.grid, config.constants
    left = make_gaussian(g, -config.separation, config.width, -config.momentum, c)
    right = make_gaussian(g, config.separation, config.width, config.momentum, c)
    return WaveFunction.normalized(g, left.amplitudes + right.amplitudes)


@lru_cache(maxsize=8)
def coin_history(config: TossConfig) -> WavefieldHistory:
    psi0 = prepare_coin_state(config)
    return record_history(psi0, Potential.free(config.grid), config.dt, config.steps, config.constants)


@lru_cache(maxsize=8)
def coin_sampler(config: TossConfig) -> BornSampler:
    return BornSampler.from_wavefunction(prepare_coin_state(config))


def outcome_map(q_final: float) -> int:
    """Readout ``g``: 1 right of the origin, 0 left of it."""
    if not math.isfinite(q_final):
        raise ValueError("final position must be finite")
    if q_final == 0.0:
        raise ExactZero("particle ended exactly at the readout threshold")
    return 1 if q_final > 0 else 0


@dataclass(eq=False)
class OutcomeSequence:
    bits: np.ndarray
    config: TossConfig
    oracle: dict
    node_flags: np.ndarray
    unresolved: np.ndarray
    exact_zero: np.ndarray
    created: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    @property
    def config_digest(self) -> str:
        return self.config.digest()

    @property
    def flagged(self) -> np.ndarray:
        return self.node_flags | self.unresolved | self.exact_zero

    def __len__(self):
        return self.bits.size

    def as_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def sidecar(self) -> dict:
        return {
            "n": int(self.bits.size),
            "config": self.config.to_dict(),
            "config_digest": self.config_digest,
            "oracle": self.oracle,
            "flags": {
                "node": np.flatnonzero(self.node_flags).tolist(),
                "unresolved": np.flatnonzero(self.unresolved).tolist(),
                "exact_zero": np.flatnonzero(self.exact_zero).tolist(),
            },
            "created": self.created,
        }


def write_bits(path, bits) -> None:
    """One ASCII '0'/'1' per line."""
    Path(path).write_text("".join("1\n" if b else "0\n" for b in bits))


def read_bits(path) -> np.ndarray:
    text = "".join(Path(path).read_text().split())
    if set(text) - {"0", "1"}:
        raise ValueError(f"{path}: sequence files may contain only '0', '1' and whitespace")
    return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")


def _bits_from_final(final: np.ndarray, previous: np.ndarray):
    bits = (final > 0).astype(np.uint8)
    zero = final == 0.0
    # tie fallback: side of the previous trajectory step
    bits[zero] = (previous[zero] > 0).astype(np.uint8)
    return bits, zero


def run_toss_sequence(config: TossConfig, oracle: SamplingOracle, n: int) -> OutcomeSequence:
    """Toss ``n`` times; sampling is consumed sequentially before propagation."""
    if n < 1:
        raise ValueError("n must be at least 1")
    q0 = sample_stream(oracle, coin_sampler(config), n)
    ens = propagate_ensemble(coin_history(config), q0, config.constants, config.node_eps)
    bits, zero = _bits_from_final(ens.positions, ens.previous)
    return OutcomeSequence(bits, config, oracle.descriptor(), ens.node_flags, ens.unresolved, zero)


@dataclass(frozen=True)
class CompatibilityReport:
    empirical_p1: float
    ci: tuple[float, float]
    n: int
    passed: bool


def verify_compatibility(config: TossConfig, oracle: SamplingOracle, n: int) -> CompatibilityReport:
    """3-sigma binomial check that the ones-frequency reproduces the Born value 1/2."""
    seq = run_toss_sequence(config, oracle, n)
    p = float(seq.bits.mean())
    half = 3 * math.sqrt(0.25 / n)
    return CompatibilityReport(p, (0.5 - half, 0.5 + half), n, abs(p - 0.5) <= half)


def verify_outcome_determinism(config: TossConfig, q0: float, repeats: int = 100) -> bool:
    """True iff ``repeats`` independent integrations from ``q0`` all give the same bit."""
    bits = set()
    for _ in range(repeats):
        traj = integrate_trajectory(coin_history(config), q0, config.constants, config.node_eps)
        bits.add(outcome_map(traj.positions[-1]))
    return len(bits) == 1

