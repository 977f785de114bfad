"""Flat key = value experiment configs with sweep axes.

One section, no nesting; comma lists give sweep values.  Sweep points are
the cross product items x tau x epsilon, expanded in that order.  Unknown
keys are rejected.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from .generators import GENERATOR_KINDS, GeneratorSpec, read_trace
from .protocol import PROTOCOLS
from .simulator import RunConfig
from .window import WindowConfig

_KEYS = {
    "protocol": str,
    "epsilon": float,
    "epsilons": str,
    "k": int,
    "window": int,
    "tau": int,
    "taus": str,
    "backend": str,
    "generator": str,
    "universe": int,
    "rate": float,
    "duration": int,
    "items": int,
    "items_sweep": str,
    "zipf_s": float,
    "burst_every": int,
    "burst_len": int,
    "burst_mult": float,
    "phase_len": int,
    "seed": int,
    "phis": str,
    "audit_every": int,
    "out_dir": str,
    "traces": str,
    "word_size_bits": int,
}


@dataclass
class ExperimentConfig:
    protocol: str
    window: int
    epsilons: list[float]
    taus: list[int]
    items_sweep: list[int | None]
    k: int = 1
    backend: str = "exact"
    generator: str = "uniform"
    universe: int = 100
    rate: float = 5.0
    duration: int | None = None
    zipf_s: float = 1.0
    burst_every: int = 64
    burst_len: int = 8
    burst_mult: float = 8.0
    phase_len: int = 64
    seed: int = 0
    phis: tuple[float, ...] = (0.25, 0.5, 0.75)
    audit_every: int = 0
    out_dir: str = "out"
    traces: list[str] = field(default_factory=list)
    word_size_bits: int = 64


def _parse_value(key: str, raw: str):
    typ = _KEYS[key]
    try:
        return typ(raw)
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot parse {raw!r}") from None


def parse_config(path) -> ExperimentConfig:
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key = value")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in _KEYS:
                raise ValueError(f"{path}: line {lineno}: unknown key {key!r}")
            if key in values:
                raise ValueError(f"{path}: line {lineno}: duplicate key {key!r}")
            values[key] = _parse_value(key, raw)

    if "protocol" not in values:
        raise ValueError(f"{path}: missing required key 'protocol'")
    if "window" not in values:
        raise ValueError(f"{path}: missing required key 'window'")
    if values["protocol"] not in PROTOCOLS:
        raise ValueError(f"{path}: unknown protocol {values['protocol']!r}")

    if "epsilons" in values:
        epsilons = [float(s) for s in values.pop("epsilons").split(",")]
    elif "epsilon" in values:
        epsilons = [values.pop("epsilon")]
    else:
        raise ValueError(f"{path}: missing 'epsilon' or 'epsilons'")
    for eps in epsilons:
        if not 0.0 < eps < 1.0:
            raise ValueError(f"{path}: epsilon {eps:g} outside (0, 1)")

    if "taus" in values:
        taus = [int(s) for s in values.pop("taus").split(",")]
    else:
        taus = [values.pop("tau", 0)]

    if "items_sweep" in values:
        items_sweep: list[int | None] = [
            int(s) for s in values.pop("items_sweep").split(",")
        ]
        if "items" in values or "duration" in values:
            raise ValueError(f"{path}: items_sweep excludes items/duration")
    elif "items" in values:
        if "duration" in values:
            raise ValueError(f"{path}: give either items or duration")
        items_sweep = [values.pop("items")]
    else:
        items_sweep = [None]

    if "phis" in values:
        values["phis"] = tuple(float(s) for s in values.pop("phis").split(","))
    if "traces" in values:
        base = os.path.dirname(os.path.abspath(path))
        values["traces"] = [
            os.path.join(base, p.strip()) for p in values.pop("traces").split(",")
        ]
    if "out_dir" in values:
        base = os.path.dirname(os.path.abspath(path))
        values["out_dir"] = os.path.join(base, values["out_dir"])
    else:
        values["out_dir"] = os.path.join(
            os.path.dirname(os.path.abspath(path)), "out"
        )
    if values.get("generator", "uniform") not in GENERATOR_KINDS:
        raise ValueError(f"{path}: unknown generator {values['generator']!r}")

    cfg = ExperimentConfig(
        protocol=values.pop("protocol"),
        window=values.pop("window"),
        epsilons=epsilons,
        taus=taus,
        items_sweep=items_sweep,
        **values,
    )
    if cfg.traces:
        cfg.k = len(cfg.traces)
    return cfg


def _stream_seed(base: int, sid: int) -> int:
    return (base * 1_000_003 + sid) % (2 ** 63)


def expand_sweeps(cfg: ExperimentConfig) -> list[tuple[str, RunConfig]]:
    """Deterministic (tag, RunConfig) list over the sweep cross product."""
    points = []
    for items in cfg.items_sweep:
        for tau in cfg.taus:
            for eps in cfg.epsilons:
                if items is not None:
                    duration = max(int(math.ceil(items / max(cfg.rate, 1e-9))), 1)
                    size_tag = f"n{items}"
                elif cfg.duration is not None:
                    duration = cfg.duration
                    size_tag = f"d{duration}"
                else:
                    duration = 1000
                    size_tag = "d1000"
                tag = f"{cfg.protocol}_{size_tag}_tau{tau}_eps{eps:g}"
                if cfg.traces:
                    traces = [read_trace(p) for p in cfg.traces]
                    run = RunConfig(
                        window=WindowConfig(cfg.window, tau),
                        protocol=cfg.protocol, epsilon=eps, traces=traces,
                        backend=cfg.backend, phis=cfg.phis,
                        audit_every=cfg.audit_every, seed=cfg.seed,
                        word_size_bits=cfg.word_size_bits,
                    )
                else:
                    gens = [
                        GeneratorSpec(
                            kind=cfg.generator, universe=cfg.universe,
                            rate=cfg.rate, duration=duration, tau=tau,
                            seed=_stream_seed(cfg.seed, sid),
                            zipf_s=cfg.zipf_s, burst_every=cfg.burst_every,
                            burst_len=cfg.burst_len, burst_mult=cfg.burst_mult,
                            phase_len=cfg.phase_len,
                        )
                        for sid in range(cfg.k)
                    ]
                    run = RunConfig(
                        window=WindowConfig(cfg.window, tau),
                        protocol=cfg.protocol, epsilon=eps, generators=gens,
                        backend=cfg.backend, phis=cfg.phis,
                        audit_every=cfg.audit_every, seed=cfg.seed,
                        word_size_bits=cfg.word_size_bits,
                    )
                points.append((tag, run))
    return points
