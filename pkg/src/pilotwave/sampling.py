"""Sampling oracles (sources of initial positions) and the Born inverse-CDF sampler.

Every oracle speaks "uniform in [0, 1)".  Turning a uniform into a position
distributed according to ``|psi|^2`` is the separate job of
:class:`BornSampler`, so the source of randomness and the distribution being
sampled never mix.

Cursor accounting, per call of ``next_uniform``:

* digit-stream kinds (champernowne, periodic, file) consume 53 symbols,
  read as a fixed-point fraction ``0.d1 d2 ... d53`` in their base;
* seeded_prng and entropy consume one 53-bit draw;
* constant consumes nothing but still counts the call.
"""

from __future__ import annotations

import itertools
import secrets
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FileExhausted
from .wavefield import WaveFunction, density

DIGITS_PER_UNIFORM = 53
_BELOW_ONE = np.nextafter(1.0, 0.0)


def champernowne_digits(base: int, start: int | None = None):
    """Infinite iterator over the Champernowne expansion in ``base`` (2 or 10).

    Base 10 starts at 0 (``0123456789101112...``); base 2 starts at 1
    (``1 10 11 100 ...``), which avoids a leading-zero token.
    """
    if base not in (2, 10):
        raise ValueError("base must be 2 or 10")
    fmt = (lambda i: format(i, "b")) if base == 2 else str
    first = start if start is not None else (1 if base == 2 else 0)
    for i in itertools.count(first):
        yield from fmt(i)


def champernowne_prefix(base: int, length: int, offset: int = 0) -> str:
    return "".join(itertools.islice(champernowne_digits(base), offset, offset + length))


def _fraction(digits: str, base: int) -> float:
    u = int(digits, base) / base ** len(digits)
    return min(u, _BELOW_ONE)


class SamplingOracle:
    """A stream of uniforms in [0, 1).  Single consumer; not thread-safe."""

    kind = "abstract"
    replayable = True

    def __init__(self):
        self.cursor = 0

    def next_uniform(self) -> float:
        u = self._next()
        self.cursor += 1
        return u

    def uniforms(self, n: int) -> np.ndarray:
        return np.array([self.next_uniform() for _ in range(n)], dtype=float)

    def reset(self) -> None:
        """Rewind to cursor 0 (replay).  Not available for entropy."""
        self.cursor = 0

    def fresh(self) -> "SamplingOracle":
        return oracle_from_descriptor(self.descriptor())

    def descriptor(self) -> dict:
        raise NotImplementedError

    def _next(self) -> float:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor()})"


class ConstantOracle(SamplingOracle):
    kind = "constant"

    def __init__(self, value: float):
        super().__init__()
        if not 0.0 <= value < 1.0:
            raise ValueError("constant value must lie in [0, 1)")
        self.value = float(value)

    def _next(self):
        return self.value

    def descriptor(self):
        return {"kind": self.kind, "value": self.value}


class SeededPRNGOracle(SamplingOracle):
    """numpy PCG64 stream; one 53-bit double per uniform."""

    kind = "seeded_prng"

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        super().__init__()
        self.reset()

    def reset(self):
        self.cursor = 0
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def _next(self):
        return float(self._gen.random())

    def uniforms(self, n):
        out = self._gen.random(n)
        self.cursor += n
        return out

    def descriptor(self):
        return {"kind": self.kind, "seed": self.seed}


class _DigitStreamOracle(SamplingOracle):
    base = 2

    def _take(self, n: int) -> str:
        raise NotImplementedError

    def _next(self):
        return _fraction(self._take(DIGITS_PER_UNIFORM), self.base)


class ChampernowneOracle(_DigitStreamOracle):
    kind = "champernowne"

    def __init__(self, base: int = 10):
        if base not in (2, 10):
            raise ValueError("champernowne base must be 2 or 10")
        self.base = base
        super().__init__()
        self.reset()

    def reset(self):
        self.cursor = 0
        self._buf = ""
        self._counter = 1 if self.base == 2 else 0

    def _take(self, n):
        fmt = (lambda i: format(i, "b")) if self.base == 2 else str
        while len(self._buf) < n:
            chunk = range(self._counter, self._counter + 256)
            self._buf += "".join(fmt(i) for i in chunk)
            self._counter += 256
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def descriptor(self):
        return {"kind": self.kind, "base": self.base}


class PeriodicOracle(_DigitStreamOracle):
    kind = "periodic"

    def __init__(self, pattern: str):
        if not pattern or set(pattern) - {"0", "1"}:
            raise ValueError("pattern must be a non-empty bit string")
        self.pattern = pattern
        super().__init__()

    def _take(self, n):
        p = self.pattern
        start = (self.cursor * DIGITS_PER_UNIFORM) % len(p)
        reps = (start + n) // len(p) + 1
        return (p * reps)[start : start + n]

    def descriptor(self):
        return {"kind": self.kind, "pattern": self.pattern}


def read_bit_file(path) -> str:
    text = Path(path).read_text()
    bits = "".join(text.split())
    if set(bits) - {"0", "1"}:
        raise ValueError(f"{path}: bit file may contain only '0', '1' and whitespace")
    return bits


class FileOracle(_DigitStreamOracle):
    """Bits from a text file of ASCII '0'/'1' (whitespace ignored)."""

    kind = "file"

    def __init__(self, path):
        self.path = str(path)
        self._bits = read_bit_file(path)
        super().__init__()

    def _take(self, n):
        start = self.cursor * n
        if start + n > len(self._bits):
            raise FileExhausted(f"{self.path}: only {len(self._bits)} bits, uniform #{self.cursor} needs {start + n}")
        return self._bits[start : start + n]

    @property
    def n_bits(self) -> int:
        return len(self._bits)

    def descriptor(self):
        return {"kind": self.kind, "path": self.path}


class EntropyOracle(SamplingOracle):
    """Operating-system entropy: the external random source, never replayable.

    Consumed draws are kept so a run can be stored and replayed through a
    :class:`FileOracle`.
    """

    kind = "entropy"
    replayable = False

    def __init__(self):
        super().__init__()
        self._draws: list[int] = []

    def _next(self):
        r = secrets.randbits(DIGITS_PER_UNIFORM)
        self._draws.append(r)
        return r / 2**DIGITS_PER_UNIFORM

    def uniforms(self, n):
        raw = np.frombuffer(secrets.token_bytes(8 * n), dtype=np.uint64) >> np.uint64(64 - DIGITS_PER_UNIFORM)
        self._draws.extend(int(r) for r in raw)
        self.cursor += n
        return raw.astype(float) / 2**DIGITS_PER_UNIFORM

    def reset(self):
        raise RuntimeError("the entropy oracle cannot be replayed; use its recorded bits")

    def fresh(self):
        return EntropyOracle()

    def recorded_bits(self) -> str:
        """Consumed draws as a '0'/'1' string, 53 bits per uniform."""
        return "".join(format(r, f"0{DIGITS_PER_UNIFORM}b") for r in self._draws)

    def descriptor(self):
        return {"kind": self.kind}


def oracle_from_descriptor(desc: dict) -> SamplingOracle:
    kind = desc.get("kind")
    if kind == "entropy":
        return EntropyOracle()
    if kind == "seeded_prng":
        return SeededPRNGOracle(int(desc["seed"]))
    if kind == "champernowne":
        return ChampernowneOracle(int(desc.get("base", 10)))
    if kind == "periodic":
        return PeriodicOracle(str(desc["pattern"]))
    if kind == "constant":
        return ConstantOracle(float(desc["value"]))
    if kind == "file":
        return FileOracle(desc["path"])
    raise ValueError(f"unknown oracle kind {kind!r}")


@dataclass(frozen=True, eq=False)
class BornSampler:
    """Inverse-CDF sampler for ``|psi|^2``.

    Grid point ``x_j`` owns the cell ``[x_j - dx/2, x_j + dx/2)`` with mass
    ``rho_j dx``; the density is uniform inside a cell, so the CDF is
    piecewise linear between cell edges.
    """

    wf: WaveFunction
    edges: np.ndarray
    cdf_values: np.ndarray

    @classmethod
    def from_wavefunction(cls, wf: WaveFunction) -> "BornSampler":
        g = wf.grid
        mass = density(wf) * g.dx
        c = np.concatenate([[0.0], np.cumsum(mass)])
        c /= c[-1]
        edges = g.x_min - g.dx / 2 + g.dx * np.arange(g.n_points + 1)
        return cls(wf, edges, c)

    def cdf(self, x) -> np.ndarray:
        return np.interp(x, self.edges, self.cdf_values, left=0.0, right=1.0)

    def quantile(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        c = self.cdf_values
        j = np.clip(np.searchsorted(c, u, side="right") - 1, 0, c.size - 2)
        width = c[j + 1] - c[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(width > 0, (u - c[j]) / width, 0.0)
        x = self.edges[j] + np.clip(frac, 0.0, 1.0) * self.wf.grid.dx
        g = self.wf.grid
        return np.clip(x, g.x_min, g.x_max)


def born_sample(sampler: BornSampler, u: float) -> float:
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    return float(sampler.quantile(u))


def sample_stream(oracle: SamplingOracle, sampler: BornSampler, n: int) -> np.ndarray:
    """``n`` Born-distributed positions, sample ``i`` built from the ``i``-th uniform."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return sampler.quantile(oracle.uniforms(n))
