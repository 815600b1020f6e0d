"""Classical coin flip as a deterministic function of launch speed and spin rate.

One-axis rotation, no precession or bounce.  The coin spins at ``omega``
for the flight time ``2 v / g`` and lands heads (1) iff the face that
started up is up at landing, i.e. the total angle modulo 2 pi lies in
``[0, pi/2) u [3 pi/2, 2 pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import QuadratureUnderresolved

G_EARTH = 9.81
TWO_PI = 2 * math.pi
# width of the quadrature box, in standard deviations
SPAN_SD = 8.0


@dataclass(frozen=True)
class LaunchState:
    v: float
    omega: float
    g_grav: float = G_EARTH

    def __post_init__(self):
        if not (self.v > 0 and self.omega >= 0 and self.g_grav > 0):
            raise ValueError("need v > 0, omega >= 0, g_grav > 0")

    @property
    def flight_time(self) -> float:
        return 2 * self.v / self.g_grav

    @property
    def angle(self) -> float:
        return self.omega * self.flight_time


def _heads_angle(theta):
    r = np.mod(theta, TWO_PI)
    return (r < math.pi / 2) | (r >= 3 * math.pi / 2)


def flip_outcome(launch: LaunchState) -> int:
    return int(_heads_angle(launch.angle))


@dataclass(frozen=True)
class LaunchDensity:
    """Independent Gaussians in v and omega, truncated to the positive quadrant."""

    v_mean: float
    v_sd: float
    omega_mean: float
    omega_sd: float
    g_grav: float = G_EARTH

    def __post_init__(self):
        if self.v_mean <= 0 or self.omega_mean < 0:
            raise ValueError("means must be positive")
        if self.v_sd < 0 or self.omega_sd < 0:
            raise ValueError("standard deviations must be nonnegative")

    def scaled(self, factor: float) -> "LaunchDensity":
        return LaunchDensity(self.v_mean, self.v_sd * factor, self.omega_mean, self.omega_sd * factor, self.g_grav)

    def bands_crossed(self, n_sd: float = 2.0) -> float:
        """Heads/tails bands (each pi wide in angle) spanned within +-n_sd standard deviations."""
        dtheta_dv = 2 * self.omega_mean / self.g_grav
        dtheta_domega = 2 * self.v_mean / self.g_grav
        spread = 2 * n_sd * math.hypot(dtheta_dv * self.v_sd, dtheta_domega * self.omega_sd)
        return spread / math.pi


def _heads_intervals(scale: float, lo: float, hi: float):
    """Intervals of a variable ``w`` in ``[lo, hi]`` where ``theta = scale * w`` is heads."""
    if scale <= 0:
        return [(lo, hi)]
    # heads iff theta in [2 pi m - pi/2, 2 pi m + pi/2)
    m_lo = math.floor((scale * lo + math.pi / 2) / TWO_PI)
    m_hi = math.ceil((scale * hi + math.pi / 2) / TWO_PI)
    out = []
    for m in range(m_lo, m_hi + 1):
        a = max((TWO_PI * m - math.pi / 2) / scale, lo)
        b = min((TWO_PI * m + math.pi / 2) / scale, hi)
        if b > a:
            out.append((a, b))
    return out


def _truncated_gaussian_mass(mean, sd, a, b):
    """Mass of N(mean, sd) truncated to w > 0 within [a, b]."""
    z = ndtr(mean / sd)
    return (ndtr((b - mean) / sd) - ndtr((a - mean) / sd)) / z


def _nodes(mean, sd, n):
    """Midpoint nodes and normalized weights for N(mean, sd) truncated to positive values."""
    lo = max(mean - SPAN_SD * sd, 0.0)
    hi = mean + SPAN_SD * sd
    h = (hi - lo) / n
    x = lo + h * (np.arange(n) + 0.5)
    w = np.exp(-0.5 * ((x - mean) / sd) ** 2)
    return x, w / w.sum()


def _heads_probability(d: LaunchDensity, n: int) -> float:
    k = 2 / d.g_grav  # theta = k * v * omega
    if d.v_sd == 0 and d.omega_sd == 0:
        return float(flip_outcome(LaunchState(d.v_mean, d.omega_mean, d.g_grav)))
    # integrate exactly along the axis with spread, by quadrature along the other
    if d.omega_sd > 0:
        inner_mean, inner_sd, outer_mean, outer_sd = d.omega_mean, d.omega_sd, d.v_mean, d.v_sd
    else:
        inner_mean, inner_sd, outer_mean, outer_sd = d.v_mean, d.v_sd, d.omega_mean, d.omega_sd
    if outer_sd > 0:
        xs, ws = _nodes(outer_mean, outer_sd, n)
    else:
        xs, ws = np.array([outer_mean]), np.array([1.0])
    lo = max(inner_mean - SPAN_SD * inner_sd, 0.0)
    hi = inner_mean + SPAN_SD * inner_sd
    total = 0.0
    for x, w in zip(xs, ws):
        mass = sum(_truncated_gaussian_mass(inner_mean, inner_sd, a, b) for a, b in _heads_intervals(k * x, lo, hi))
        total += w * mass
    return float(total)


def heads_probability(density: LaunchDensity, quadrature_n: int = 400, check: bool = True) -> float:
    """Probability of heads under a smooth launch density.

    The heads set is a union of bands in the (v, omega) plane.  Along the
    axis with nonzero spread the Gaussian mass of each band is exact (normal
    CDF differences); the other axis uses an ``quadrature_n``-point midpoint
    grid.  With ``check`` the result is recomputed at ``2*quadrature_n``.
    """
    p = _heads_probability(density, quadrature_n)
    if check and density.v_sd > 0 and density.omega_sd > 0:
        p2 = _heads_probability(density, 2 * quadrature_n)
        if abs(p2 - p) > 1e-3:
            raise QuadratureUnderresolved(f"doubling quadrature_n moved the result by {abs(p2 - p):.2e}")
        p = p2
    return min(max(p, 0.0), 1.0)
