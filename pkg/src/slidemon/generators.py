"""Synthetic stream generators and trace file IO.

A generator spec plus its seed fully determines the event sequence.
Events come out sorted by arrival tick; timestamps lag arrivals by at
most the spec's tardiness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GENERATOR_KINDS = ("uniform", "zipf", "burst", "churn")


@dataclass(eq=False)
class StreamEvents:
    """Arrival-ordered event arrays for one stream."""

    arrival: np.ndarray
    timestamp: np.ndarray
    item: np.ndarray
    header_lines: int = 0  # offset for trace-file line diagnostics

    def __post_init__(self):
        self.arrival = np.ascontiguousarray(self.arrival, dtype=np.int64)
        self.timestamp = np.ascontiguousarray(self.timestamp, dtype=np.int64)
        self.item = np.ascontiguousarray(self.item, dtype=np.int64)
        n = self.arrival.size
        if self.timestamp.size != n or self.item.size != n:
            raise ValueError("event arrays must have equal length")
        if n == 0:
            return
        if np.any(self.arrival[1:] < self.arrival[:-1]):
            raise ValueError("arrivals must be non-decreasing")
        if np.any(self.timestamp > self.arrival):
            raise ValueError("timestamp after arrival")
        if np.any(self.timestamp < 0) or np.any(self.item < 0):
            raise ValueError("timestamps and item ids must be non-negative")

    @property
    def n(self) -> int:
        return self.arrival.size

    @property
    def max_item(self) -> int:
        return int(self.item.max()) if self.n else -1

    @property
    def max_delay(self) -> int:
        return int((self.arrival - self.timestamp).max()) if self.n else 0

    def first_tardiness_violation(self, tau: int) -> int | None:
        """Index of the first event later than tau, or None."""
        late = (self.arrival - self.timestamp) > tau
        if not np.any(late):
            return None
        return int(np.argmax(late))


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    universe: int
    rate: float
    duration: int
    tau: int = 0
    seed: int = 0
    zipf_s: float = 1.0
    start: int = 1
    burst_every: int = 64
    burst_len: int = 8
    burst_mult: float = 8.0
    phase_len: int = 64

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.universe < 1:
            raise ValueError("universe must be at least 1")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.zipf_s < 0:
            raise ValueError("zipf exponent must be non-negative")


def _zipf_weights(universe: int, s: float) -> np.ndarray:
    w = 1.0 / np.power(np.arange(1, universe + 1, dtype=np.float64), s)
    return w / w.sum()


def _tick_rates(spec: GeneratorSpec, ticks: np.ndarray) -> np.ndarray:
    base = np.full(ticks.size, spec.rate, dtype=np.float64)
    if spec.kind == "burst":
        pos = (ticks - spec.start) % spec.burst_every
        base[pos < spec.burst_len] *= spec.burst_mult
    elif spec.kind == "churn":
        plen = spec.phase_len
        cycle = (ticks - spec.start) % (4 * plen)
        phase = cycle // plen
        pos = (cycle % plen).astype(np.float64)
        base[phase == 0] *= 1.0 + 3.0 * pos[phase == 0] / plen  # ramp
        base[phase == 1] = 0.0                                  # expiry cliff
        flick = phase == 2
        base[flick & (cycle % 2 == 0)] *= 4.0                   # flicker
        base[flick & (cycle % 2 == 1)] = 0.0
        base[phase == 3] *= 0.5                                 # taper
    return base


def generate_stream(spec: GeneratorSpec) -> StreamEvents:
    rng = np.random.default_rng(spec.seed)
    ticks = np.arange(spec.start, spec.start + spec.duration, dtype=np.int64)
    counts = rng.poisson(_tick_rates(spec, ticks))
    total = int(counts.sum())
    timestamps = np.repeat(ticks, counts)
    if spec.kind == "uniform" or spec.kind == "burst":
        items = rng.integers(0, spec.universe, total, dtype=np.int64)
    elif spec.kind == "zipf":
        items = rng.choice(
            spec.universe, total, p=_zipf_weights(spec.universe, spec.zipf_s)
        ).astype(np.int64)
    else:  # churn: hot zipf head in the ramp, uniform tail elsewhere
        items = rng.choice(
            spec.universe, total, p=_zipf_weights(spec.universe, 1.2)
        ).astype(np.int64)
        plen = spec.phase_len
        phase = ((timestamps - spec.start) % (4 * plen)) // plen
        flat = rng.integers(0, spec.universe, total, dtype=np.int64)
        items = np.where(phase >= 2, flat, items)
    if spec.tau > 0 and total:
        delays = rng.integers(0, spec.tau + 1, total, dtype=np.int64)
        arrivals = timestamps + delays
        order = np.argsort(arrivals, kind="stable")
        return StreamEvents(arrivals[order], timestamps[order], items[order])
    return StreamEvents(timestamps.copy(), timestamps, items)


def redelay(events: StreamEvents, tau: int, seed: int) -> StreamEvents:
    """Same timestamp multiset, re-dealt arrival delays up to tau."""
    rng = np.random.default_rng(seed)
    delays = rng.integers(0, tau + 1, events.n, dtype=np.int64)
    arrivals = events.timestamp + delays
    order = np.argsort(arrivals, kind="stable")
    return StreamEvents(
        arrivals[order], events.timestamp[order], events.item[order]
    )


def read_trace(path) -> StreamEvents:
    """Parse a `arrival_tick,timestamp,item_id` CSV; header optional."""
    rows = []
    header_lines = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if lineno == 1 and not parts[0].lstrip("-").isdigit():
                header_lines = 1
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 3 fields")
            try:
                rows.append(tuple(int(p) for p in parts))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-integer field") from None
    if not rows:
        return StreamEvents(
            np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.int64),
            header_lines=header_lines,
        )
    arr = np.array(rows, dtype=np.int64)
    arrival, timestamp, item = arr[:, 0], arr[:, 1], arr[:, 2]
    bad = np.nonzero(arrival[1:] < arrival[:-1])[0]
    if bad.size:
        raise ValueError(
            f"{path}: line {int(bad[0]) + 2 + header_lines}: arrival regression"
        )
    bad = np.nonzero(timestamp > arrival)[0]
    if bad.size:
        raise ValueError(
            f"{path}: line {int(bad[0]) + 1 + header_lines}: timestamp after arrival"
        )
    return StreamEvents(arrival, timestamp, item, header_lines=header_lines)


def write_trace(path, events: StreamEvents):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("arrival_tick,timestamp,item_id\n")
        for a, t, j in zip(events.arrival, events.timestamp, events.item):
            fh.write(f"{int(a)},{int(t)},{int(j)}\n")
