"""Experiment runner: ``pilotwave {toss,analyze,equivariance,equilibrium-demo,coinflip-classical}``.

Configuration is a flat INI file (sections of key = value pairs).  Every key
is validated against :data:`SCHEMA` before anything runs; ``--set
section.key=value`` overrides individual keys.  Outputs are written
atomically and every run leaves a ``manifest.json`` with the config digest,
oracle kind and library versions.

Runs with a non-entropy oracle are byte-identical across invocations on
machines with the same IEEE-754 double arithmetic and the same numpy FFT
backend.  Exit codes: 0 ok, 1 configuration error, 2 simulation or
analysis error, 3 verdict "refuted" under ``--expect-consistent``.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy
from scipy import stats

from . import cointoss, equilibrium, randomness
from .classicalflip import LaunchDensity, heads_probability
from .errors import ConfigError, PilotWaveError
from .outputs import atomic_write_text, emit_plot_data, histogram
from .pilot import integrate_trajectory, propagate_ensemble
from .sampling import BornSampler, oracle_from_descriptor, sample_stream

SUBCOMMANDS = ("toss", "analyze", "equivariance", "equilibrium-demo", "coinflip-classical")
ORACLE_ENV = "BOHM_ORACLE_OVERRIDE"
EQUIVARIANCE_KS_LIMIT = 0.02

_toss_defaults = cointoss.TossConfig()

SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "grid": {
        "x_min": (float, _toss_defaults.x_min),
        "x_max": (float, _toss_defaults.x_max),
        "n_points": (int, _toss_defaults.n_points),
    },
    "constants": {"hbar": (float, 1.0), "mass": (float, 1.0)},
    "toss": {
        "separation": (float, _toss_defaults.separation),
        "width": (float, _toss_defaults.width),
        "momentum": (float, _toss_defaults.momentum),
        "time": (float, _toss_defaults.time),
        "steps": (int, _toss_defaults.steps),
        "node_eps": (float, _toss_defaults.node_eps),
    },
    "oracle": {
        "kind": (str, "seeded_prng"),
        "seed": (int, 0),
        "base": (int, 10),
        "pattern": (str, "0110"),
        "value": (float, 0.25),
        "path": (str, ""),
    },
    "run": {"n": (int, 1000), "out": (str, "out")},
    "analysis": {"input": (str, ""), "sidecar": (str, ""), "k_max": (int, 4)},
    "equivariance": {"n_samples": (int, 10_000), "bins": (int, 80), "n_trajectories": (int, 5), "n_quantiles": (int, 99)},
    "equilibrium": {"n_points": (int, 64), "half_width": (float, 8.0), "states": (int, 20), "seed": (int, 0)},
    "classical": {
        "v_mean": (float, 2.4),
        "v_sd": (float, 0.2),
        "omega_mean": (float, 240.0),
        "omega_sd": (float, 20.0),
        "g_grav": (float, 9.81),
        "quadrature_n": (int, 400),
        "scales": (str, "1,2,4,8"),
    },
}

_ORACLE_KEYS = {
    "entropy": (),
    "seeded_prng": ("seed",),
    "champernowne": ("base",),
    "periodic": ("pattern",),
    "constant": ("value",),
    "file": ("path",),
}


@dataclass
class ExperimentConfig:
    kind: str
    values: dict = field(default_factory=dict)  # section -> key -> typed value

    def __getitem__(self, section):
        return self.values[section]

    @property
    def toss(self) -> cointoss.TossConfig:
        g, c, t = self["grid"], self["constants"], self["toss"]
        return cointoss.TossConfig(
            x_min=g["x_min"], x_max=g["x_max"], n_points=g["n_points"], hbar=c["hbar"], mass=c["mass"], **t
        )

    @property
    def oracle_descriptor(self) -> dict:
        o = self["oracle"]
        return {"kind": o["kind"], **{k: o[k] for k in _ORACLE_KEYS[o["kind"]]}}

    def canonical(self) -> str:
        return json.dumps({"kind": self.kind, **self.values}, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _coerce(section, key, raw):
    typ = SCHEMA[section][key][0]
    try:
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {typ.__name__}") from exc


def load_config(kind: str, path=None, overrides=(), seed=None) -> ExperimentConfig:
    """Defaults, then the INI file, then ``--set`` overrides, then ``--seed`` and the env override."""
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file {path} does not exist")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key [{section}] {key}")
                values[section][key] = _coerce(section, key, raw)
    for item in overrides:
        lhs, sep, raw = item.partition("=")
        section, dot, key = lhs.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown key in override {item!r}")
        values[section][key] = _coerce(section, key, raw.strip())
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        values["oracle"]["seed"] = seed
    forced = os.environ.get(ORACLE_ENV)
    if forced:
        values["oracle"]["kind"] = forced
    cfg = ExperimentConfig(kind, values)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    o = cfg["oracle"]
    if o["kind"] not in _ORACLE_KEYS:
        raise ConfigError(f"unknown oracle kind {o['kind']!r}")
    try:
        oracle_from_descriptor(cfg.oracle_descriptor)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"bad oracle settings: {exc}") from exc
    try:
        cfg.toss
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["run"]["n"] < 1:
        raise ConfigError("[run] n must be positive")
    if cfg.kind == "analyze" and not cfg["analysis"]["input"]:
        raise ConfigError("analyze needs [analysis] input")
    try:
        [float(s) for s in cfg["classical"]["scales"].split(",")]
    except ValueError as exc:
        raise ConfigError("[classical] scales must be a comma-separated list of numbers") from exc


# ------------------------------------------------------------------ runs


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"pilotwave": pkg, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"{type(o).__name__} is not JSON serializable")


def _run_toss(cfg: ExperimentConfig, out: Path) -> dict:
    config = cfg.toss
    oracle = oracle_from_descriptor(cfg.oracle_descriptor)
    seq = cointoss.run_toss_sequence(config, oracle, cfg["run"]["n"])
    written = [atomic_write_text(out / "sequence.txt", "".join("1\n" if b else "0\n" for b in seq.bits))]
    sidecar = seq.sidecar()
    sidecar.pop("created")
    if oracle.kind == "entropy":
        bits_path = atomic_write_text(out / "oracle_bits.txt", oracle.recorded_bits() + "\n")
        written.append(bits_path)
        sidecar["replay_oracle"] = {"kind": "file", "path": str(bits_path.resolve())}
        sidecar["oracle_note"] = "external random oracle (OS entropy); replay via replay_oracle"
    written.append(_write_json(out / "sequence.json", sidecar))
    print(f"tossed {len(seq)} times: {int(seq.bits.sum())} ones, {int(seq.flagged.sum())} flagged")
    return {"outputs": written, "oracle_kind": oracle.kind}


def _replay_candidates(sidecar: dict):
    config = cointoss.TossConfig(**sidecar["config"])
    for desc in (sidecar.get("oracle"), sidecar.get("replay_oracle")):
        if desc and desc.get("kind") != "entropy":
            yield config, desc


def _run_analyze(cfg: ExperimentConfig, out: Path) -> dict:
    a = cfg["analysis"]
    bits = cointoss.read_bits(a["input"])
    sidecar_path = Path(a["sidecar"]) if a["sidecar"] else Path(a["input"]).with_suffix(".json")
    replay = []
    oracle_kind = None
    if sidecar_path.is_file():
        sidecar = json.loads(sidecar_path.read_text())
        replay = list(_replay_candidates(sidecar))
        oracle_kind = sidecar.get("oracle", {}).get("kind")
    report = randomness.randomness_report(bits, k_max=a["k_max"], replay=replay)
    written = [
        atomic_write_text(out / "report.json", report.to_json() + "\n"),
        emit_plot_data(report.normality, "normality", out / "normality.csv"),
    ]
    print(f"verdict: {report.verdict} ({len(report.witnesses)} witnesses)")
    return {"outputs": written, "oracle_kind": oracle_kind, "verdict": report.verdict}


def _run_equivariance(cfg: ExperimentConfig, out: Path) -> dict:
    e = cfg["equivariance"]
    config = cfg.toss
    oracle = oracle_from_descriptor(cfg.oracle_descriptor)
    history = cointoss.coin_history(config)
    q0 = sample_stream(oracle, cointoss.coin_sampler(config), e["n_samples"])
    ens = propagate_ensemble(history, q0, config.constants, config.node_eps)
    final = BornSampler.from_wavefunction(history.wavefunction(-1))
    ok = ~ens.unresolved
    ks = float(stats.kstest(ens.positions[ok], final.cdf).statistic)
    probs = (np.arange(e["n_quantiles"]) + 1) / (e["n_quantiles"] + 1)
    rows = zip(probs, np.quantile(ens.positions[ok], probs), final.quantile(probs))
    qtext = "prob,q_T_empirical_quantile,density_quantile\n" + "".join(
        f"{float(p)!r},{float(a)!r},{float(b)!r}\n" for p, a, b in rows
    )
    trajs = [integrate_trajectory(history, q, config.constants, config.node_eps) for q in q0[: e["n_trajectories"]]]
    written = [
        atomic_write_text(out / "quantiles.csv", qtext),
        emit_plot_data(histogram(ens.positions, e["bins"]), "histogram", out / "histogram.csv"),
        emit_plot_data(trajs, "trajectories", out / "trajectories.csv"),
    ]
    summary = {
        "n_samples": int(q0.size),
        "ks_statistic": ks,
        "ks_limit": EQUIVARIANCE_KS_LIMIT,
        "passed": ks <= EQUIVARIANCE_KS_LIMIT,
        "unresolved": int(ens.unresolved.sum()),
        "node_flagged": int(ens.node_flags.sum()),
    }
    written.append(_write_json(out / "equivariance.json", summary))
    print(f"KS distance {ks:.4f} (limit {EQUIVARIANCE_KS_LIMIT})")
    return {"outputs": written, "oracle_kind": oracle.kind}


def _run_equilibrium(cfg: ExperimentConfig, out: Path) -> dict:
    q = cfg["equilibrium"]
    rng = np.random.default_rng(q["seed"])
    summary = equilibrium.demo(rng, n_points=q["n_points"], half_width=q["half_width"], states=q["states"])
    written = [_write_json(out / "equilibrium.json", summary)]
    print(f"max amplitude deviation {summary['max_amplitude_deviation']:.2e}, qeh marginal {summary['qeh_gaussian_unit_box']:.6f}")
    return {"outputs": written, "oracle_kind": None}


def _run_classical(cfg: ExperimentConfig, out: Path) -> dict:
    c = cfg["classical"]
    base = LaunchDensity(c["v_mean"], c["v_sd"], c["omega_mean"], c["omega_sd"], c["g_grav"])
    rows = []
    for s in (float(x) for x in c["scales"].split(",")):
        d = base.scaled(s)
        p = heads_probability(d, c["quadrature_n"])
        rows.append({"scale": s, "v_sd": d.v_sd, "omega_sd": d.omega_sd, "bands_crossed": d.bands_crossed(), "p_heads": p})
    text = "scale,v_sd,omega_sd,bands_crossed,p_heads\n" + "".join(
        f"{r['scale']!r},{r['v_sd']!r},{r['omega_sd']!r},{r['bands_crossed']!r},{r['p_heads']!r}\n" for r in rows
    )
    written = [atomic_write_text(out / "classical.csv", text)]
    for r in rows:
        print(f"scale {r['scale']:g}: P(heads) = {r['p_heads']:.6f}")
    return {"outputs": written, "oracle_kind": None}


_RUNNERS = {
    "toss": _run_toss,
    "analyze": _run_analyze,
    "equivariance": _run_equivariance,
    "equilibrium-demo": _run_equilibrium,
    "coinflip-classical": _run_classical,
}


def run(subcommand: str, config_path=None, overrides=(), out=None, seed=None, expect_consistent=False) -> int:
    try:
        cfg = load_config(subcommand, config_path, overrides, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out_dir = Path(out or cfg["run"]["out"])
    try:
        result = _RUNNERS[subcommand](cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (PilotWaveError, ValueError, OSError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    manifest = {
        "subcommand": subcommand,
        "config_digest": cfg.digest(),
        "config": json.loads(cfg.canonical()),
        "oracle_kind": result.get("oracle_kind"),
        "versions": _versions(),
        "float_environment": "IEEE-754 binary64; results assume identical numpy FFT backend",
        "outputs": {p.name: _sha256(p) for p in result["outputs"]},
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    _write_json(out_dir / "manifest.json", manifest)
    if expect_consistent and result.get("verdict") == "refuted":
        print("expected consistent_with_randomness, got refuted", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pilotwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--expect-consistent", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.overrides, args.out, args.seed, args.expect_consistent)


if __name__ == "__main__":
    sys.exit(main())
