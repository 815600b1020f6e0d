"""Refutation-only randomness analysis of binary sequences.

Kolmogorov complexity is only upper semicomputable, so no finite test can
certify that a sequence is random.  Every test here can only produce a
*witness* against randomness: a block-frequency deviation, a short
compressed encoding, or an explicit generator from a finite catalog that
regenerates the sequence.  A report without witnesses says
``consistent_with_randomness`` and nothing stronger.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import SequenceTooShort
from .sampling import champernowne_prefix

SCHEMA_VERSION = "1"
CATALOG_VERSION = "catalog-v1"
CATALOG_IDS = ("constant", "periodic", "champernowne", "counter", "replay")
MAX_PERIOD = 64
MAX_CHAMPERNOWNE_OFFSET = 1024
MAX_COUNTER_START = 1024
MAX_COUNTER_STRIDE = 16
COMPRESSION_THRESHOLD = 0.75
SIGMAS = 3.0
MIN_REPORT_LENGTH = 1000
DISCLAIMER = (
    "1-randomness is undecidable: these tests can refute randomness by exhibiting a witness, "
    "never certify it. 'consistent_with_randomness' only means no witness was found."
)


def as_bitstring(bits) -> str:
    if isinstance(bits, str):
        s = "".join(bits.split())
    else:
        arr = np.asarray(bits).astype(np.uint8).ravel()
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        s = (arr + ord("0")).tobytes().decode()
    if set(s) - {"0", "1"}:
        raise ValueError("bit strings may contain only '0' and '1'")
    return s


def as_bitarray(bits) -> np.ndarray:
    return np.frombuffer(as_bitstring(bits).encode(), dtype=np.uint8) - ord("0")


# ---------------------------------------------------------------- normality


@dataclass
class NormalityResult:
    k: int
    n_blocks: int
    counts: dict
    expected: float  # 2^-k
    threshold: float  # allowed |freq - expected|
    flagged: list
    passed: bool

    def frequencies(self) -> dict:
        return {b: c / self.n_blocks for b, c in self.counts.items()}


def borel_normality(bits, k_max: int) -> list[NormalityResult]:
    """Disjoint k-block frequencies against ``2^-k`` at 3 sigma, for k = 1..k_max."""
    s = as_bitarray(bits)
    n = s.size
    results = []
    for k in range(1, k_max + 1):
        if n < 100 * 2**k:
            raise SequenceTooShort(f"N = {n} < 100*2^{k} needed for block length {k}")
        m = n // k
        codes = s[: m * k].reshape(m, k) @ (1 << np.arange(k - 1, -1, -1))
        raw = np.bincount(codes, minlength=2**k)
        p = 2.0**-k
        thr = SIGMAS * math.sqrt(p * (1 - p) / m)
        counts, flagged = {}, []
        for code, c in enumerate(raw):
            block = format(code, f"0{k}b")
            counts[block] = int(c)
            if abs(c / m - p) > thr:
                flagged.append(block)
        results.append(NormalityResult(k, m, counts, p, thr, flagged, not flagged))
    return results


# ---------------------------------------------------------------- LZ78


def lz78_encode(bits) -> list[tuple[int, str | None]]:
    """Incremental dictionary parse into ``(prefix index, next bit)`` phrases.

    Index 0 is the empty phrase.  A trailing phrase that is already in the
    dictionary is emitted with ``None`` as its bit.
    """
    table: dict[tuple[int, str], int] = {}
    phrases: list[tuple[int, str | None]] = []
    cur = 0
    for b in as_bitstring(bits):
        nxt = table.get((cur, b))
        if nxt is None:
            phrases.append((cur, b))
            table[(cur, b)] = len(phrases)
            cur = 0
        else:
            cur = nxt
    if cur:
        phrases.append((cur, None))
    return phrases


def lz78_decode(phrases) -> str:
    entries = [""]
    out = []
    for idx, b in phrases:
        word = entries[idx] + (b or "")
        entries.append(word)
        out.append(word)
    return "".join(out)


def lz78_bits(bits) -> int:
    """Size in bits of the phrase stream: ``c * (ceil(log2 c) + 1)``."""
    s = as_bitstring(bits)
    if not s:
        raise ValueError("empty sequence")
    phrases = lz78_encode(s)
    if lz78_decode(phrases) != s:
        raise RuntimeError("LZ78 round trip failed")
    c = len(phrases)
    return c * (math.ceil(math.log2(c)) + 1)


# ---------------------------------------------------------------- catalog


def elias_gamma_length(n: int) -> int:
    if n < 1:
        raise ValueError("Elias gamma encodes positive integers")
    return 2 * (n.bit_length() - 1) + 1


_ID_BITS = math.ceil(math.log2(len(CATALOG_IDS)))


@dataclass
class CatalogMatch:
    generator: str
    parameters: dict
    description_bits: int


def counter_prefix(start: int, stride: int, length: int) -> str:
    """Concatenated binary representations of ``start, start+stride, ...``."""
    parts, total, i = [], 0, start
    while total < length:
        w = format(i, "b")
        parts.append(w)
        total += len(w)
        i += stride
    return "".join(parts)[:length]


def _periodic(s: str, n: int):
    for p in range(1, min(MAX_PERIOD, n - 1) + 1):
        if s[p:] == s[:-p]:
            return p
    return None


def _replay_description_bits(config, oracle_desc: dict) -> int:
    blob = json.dumps({"config": config.to_dict(), "oracle": oracle_desc}, sort_keys=True, separators=(",", ":"))
    bits = 8 * len(blob)
    if oracle_desc.get("kind") == "file":
        from .sampling import read_bit_file

        bits += len(read_bit_file(oracle_desc["path"]))
    return bits


def catalog_match(bits, replay=()) -> list[CatalogMatch]:
    """Every catalog generator that regenerates ``bits`` exactly.

    ``replay`` holds ``(TossConfig, oracle descriptor)`` pairs; each one with
    a replayable oracle is re-simulated and compared.
    """
    s = as_bitstring(bits)
    n = len(s)
    if n < 64:
        raise SequenceTooShort("catalog matching needs at least 64 bits")
    len_n = elias_gamma_length(n)
    found: list[CatalogMatch] = []

    if s.count(s[0]) == n:
        found.append(CatalogMatch("constant", {"bit": int(s[0])}, _ID_BITS + 1 + len_n))

    p = _periodic(s, n)
    if p is not None:
        found.append(CatalogMatch("periodic", {"pattern": s[:p]}, _ID_BITS + elias_gamma_length(p) + p + len_n))

    head = s[:64]
    champ = champernowne_prefix(2, n + MAX_CHAMPERNOWNE_OFFSET)
    for off in range(MAX_CHAMPERNOWNE_OFFSET + 1):
        if champ.startswith(head, off) and champ.startswith(s, off):
            found.append(
                CatalogMatch("champernowne", {"base": 2, "offset": off}, _ID_BITS + elias_gamma_length(off + 1) + len_n)
            )

    for stride in range(1, MAX_COUNTER_STRIDE + 1):
        for start in range(MAX_COUNTER_START + 1):
            if (start == 0) != (s[0] == "0"):
                continue
            if counter_prefix(start, stride, 64) == head and counter_prefix(start, stride, n) == s:
                found.append(
                    CatalogMatch(
                        "counter",
                        {"start": start, "stride": stride},
                        _ID_BITS + elias_gamma_length(start + 1) + elias_gamma_length(stride) + len_n,
                    )
                )

    if replay:
        from .cointoss import run_toss_sequence
        from .sampling import oracle_from_descriptor

        for config, desc in replay:
            oracle = oracle_from_descriptor(desc)
            if not oracle.replayable:
                continue
            regen = run_toss_sequence(config, oracle, n)
            if as_bitstring(regen.bits) == s:
                found.append(
                    CatalogMatch(
                        "replay",
                        {"config_digest": config.digest(), "oracle": desc},
                        _ID_BITS + _replay_description_bits(config, desc) + len_n,
                    )
                )
    return found


# ---------------------------------------------------------------- report


def monobit(bits) -> dict:
    s = as_bitarray(bits)
    n = s.size
    ones = int(s.sum())
    limit = SIGMAS * math.sqrt(n) / 2
    return {"ones": ones, "expected": n / 2, "limit": limit, "passed": abs(ones - n / 2) <= limit}


def runs_test(bits) -> dict:
    """Total number of runs against ``N/2 + 1`` with standard deviation ``sqrt(N-1)/2``."""
    s = as_bitarray(bits)
    n = s.size
    runs = int(1 + np.count_nonzero(s[1:] != s[:-1])) if n else 0
    expected = n / 2 + 0.5
    limit = SIGMAS * math.sqrt(max(n - 1, 0)) / 2
    return {"runs": runs, "expected": expected, "limit": limit, "passed": abs(runs - expected) <= limit}


@dataclass
class RandomnessReport:
    n: int
    normality: list
    compression_bits: int
    compression_ratio: float
    catalog_matches: list
    monobit: dict
    runs: dict
    witnesses: list
    verdict: str
    sequence_sha256: str = ""
    schema_version: str = SCHEMA_VERSION
    catalog_version: str = CATALOG_VERSION
    disclaimer: str = DISCLAIMER
    compression_threshold: float = COMPRESSION_THRESHOLD
    extra: dict = field(default_factory=dict)

    @property
    def refuted(self) -> bool:
        return self.verdict == "refuted"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["normality"] = [{**r, "frequencies": NormalityResult(**r).frequencies()} for r in d["normality"]]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def randomness_report(bits, k_max: int = 4, replay=()) -> RandomnessReport:
    s = as_bitstring(bits)
    n = len(s)
    if n < MIN_REPORT_LENGTH:
        raise SequenceTooShort(f"reports need N >= {MIN_REPORT_LENGTH}, got {n}")
    k_eff = min(k_max, int(math.log2(n / 100)))
    normality = borel_normality(s, k_eff)
    c_bits = lz78_bits(s)
    ratio = c_bits / n
    matches = catalog_match(s, replay)
    mono, runs = monobit(s), runs_test(s)

    witnesses = []
    for r in normality:
        if not r.passed:
            witnesses.append({"test": "normality", "k": r.k, "blocks": r.flagged})
    if ratio < COMPRESSION_THRESHOLD:
        witnesses.append({"test": "compression", "ratio": ratio})
    for m in matches:
        # only a description shorter than the sequence refutes it
        if m.description_bits < n:
            witnesses.append({"test": "catalog", "generator": m.generator, "description_bits": m.description_bits})

    return RandomnessReport(
        n=n,
        normality=normality,
        compression_bits=c_bits,
        compression_ratio=ratio,
        catalog_matches=matches,
        monobit=mono,
        runs=runs,
        witnesses=witnesses,
        verdict="refuted" if witnesses else "consistent_with_randomness",
        sequence_sha256=hashlib.sha256(s.encode()).hexdigest(),
    )
