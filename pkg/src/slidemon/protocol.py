"""Per-stream trigger protocols: decide, once per tick, what to send.

Each site wraps one WindowEstimator and compares fresh estimates against
what it last told the coordinator.  All triggers are evaluated after the
tick's arrivals and expiries have been applied, at most one message per
item per tick, with a fixed priority of up, then off, then down.

Message word accounting: a per-item message costs 2 words (id + value), a
total-count message 1 word, and a grid message one word per grid entry.
The stream id rides on the channel, not in the payload.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .window import WindowEstimator

UP = "up"
DOWN = "down"
OFF = "off"
TOTAL_UP = "total_up"
TOTAL_DOWN = "total_down"
GRID = "grid"

_ITEM_KIND = {_k.UP: UP, _k.OFF: OFF, _k.DOWN: DOWN}


@dataclass(frozen=True)
class Message:
    """One coordinator-bound update with its accounted word cost."""

    stream_id: int
    tick: int
    kind: str
    item: int = -1
    value: int = 0
    grid: tuple[int, ...] | None = None
    words: int = 1


@dataclass(frozen=True)
class ProtocolParams:
    """Derived error parameters for one protocol instance.

    ``lam`` is the local estimator error, ``theta`` the total-count send
    ratio (only total-reporting protocols use it).
    """

    epsilon: float
    lam: float
    theta: float = 0.0
    word_size_bits: int = 64

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        if self.lam <= 0.0:
            raise ValueError("lam must be positive")


def ac_params(epsilon: float, lam: float | None = None) -> ProtocolParams:
    lam = epsilon / 11.0 if lam is None else lam
    p = ProtocolParams(epsilon, lam)
    if lam > epsilon / 11.0 + 1e-12:
        raise ValueError("item protocols need lam <= epsilon / 11")
    return p


def bc_params(epsilon: float) -> ProtocolParams:
    # band theta = eps/2 with local estimator error eps/6 keeps the
    # coordinator within eps of the true total for eps <= 2/3
    return ProtocolParams(epsilon, lam=epsilon, theta=epsilon / 2.0)


def quantile_params(epsilon: float) -> ProtocolParams:
    lam = epsilon / 20.0
    return ProtocolParams(epsilon, lam=lam, theta=lam / 2.0)


def phi_grid(step: float) -> np.ndarray:
    """Ascending grid step, 2*step, ..., ending exactly at 1."""
    if not 0.0 < step <= 1.0:
        raise ValueError("grid step must be in (0, 1]")
    m = int(math.floor(1.0 / step + 1e-6))
    phis = np.arange(1, m + 1, dtype=np.float64) * step
    if abs(phis[-1] - 1.0) <= 1e-9:
        phis[-1] = 1.0
    else:
        phis = np.append(phis, 1.0)
    return phis


class BcSite:
    """Report the total count when it leaves the (1 +/- theta) band
    around the last sent value; the first nonempty tick always sends."""

    def __init__(self, stream_id: int, est: WindowEstimator, theta: float):
        self.stream_id = stream_id
        self.est = est
        self.theta = theta
        self.last_total = 0

    def on_advance(self, now: int) -> list[Message]:
        chat = self.est.estimate_total(now)
        v = self.last_total
        if chat > (1.0 + self.theta) * v:
            kind = TOTAL_UP
        elif chat < (1.0 - self.theta) * v:
            kind = TOTAL_DOWN
        else:
            return []
        self.last_total = chat
        return [Message(self.stream_id, now, kind, value=chat, words=1)]

    def tracked_count(self) -> int:
        return 1


class SimpleSite:
    """Send <item, estimate> whenever an item's estimate moved more than
    9 * lam * total away from the last sent value (0 if never sent)."""

    def __init__(self, stream_id: int, est: WindowEstimator, lam: float):
        self.stream_id = stream_id
        self.est = est
        self.lam = lam
        self.last_sent = np.zeros(est.universe, dtype=np.int64)

    def _grow(self, universe: int):
        if universe > self.last_sent.size:
            grown = np.zeros(universe, dtype=np.int64)
            grown[: self.last_sent.size] = self.last_sent
            self.last_sent = grown

    def on_advance(self, now: int) -> list[Message]:
        counts = self.est.item_counts(now)
        self._grow(counts.size)
        chat = self.est.estimate_total(now)
        items, kinds, values = _k.scan_simple(counts, self.last_sent, chat, self.lam)
        sid = self.stream_id
        return [
            Message(sid, now, _ITEM_KIND[int(k)], item=int(j), value=int(v), words=2)
            for j, k, v in zip(items, kinds, values)
        ]

    def tracked_count(self) -> int:
        return int(np.count_nonzero(self.last_sent))


class AcSite:
    """SimpleSite plus an off flag: items whose estimate falls below
    3 * lam * total are reported as zero once and stop generating down
    traffic until a fresh up event turns them back on.  This caps the
    number of tracked (off == False) items at 1/lam."""

    def __init__(self, stream_id: int, est: WindowEstimator, lam: float):
        self.stream_id = stream_id
        self.est = est
        self.lam = lam
        self.last_sent = np.zeros(est.universe, dtype=np.int64)
        self.off = np.ones(est.universe, dtype=np.bool_)

    def _grow(self, universe: int):
        if universe > self.last_sent.size:
            last = np.zeros(universe, dtype=np.int64)
            last[: self.last_sent.size] = self.last_sent
            self.last_sent = last
            off = np.ones(universe, dtype=np.bool_)
            off[: self.off.size] = self.off
            self.off = off

    def on_advance(self, now: int) -> list[Message]:
        counts = self.est.item_counts(now)
        self._grow(counts.size)
        chat = self.est.estimate_total(now)
        items, kinds, values = _k.scan_ac(
            counts, self.last_sent, self.off, chat, self.lam
        )
        sid = self.stream_id
        return [
            Message(sid, now, _ITEM_KIND[int(k)], item=int(j), value=int(v), words=2)
            for j, k, v in zip(items, kinds, values)
        ]

    def tracked_count(self) -> int:
        return self.off.size - int(np.count_nonzero(self.off))


class QuantileSite:
    """Maintain the grid of (5k*lam)-quantiles and re-send the whole grid
    when any current grid entry crosses the neighbouring entry last
    reported.  Totals are reported alongside through a BC band of lam."""

    def __init__(self, stream_id: int, est: WindowEstimator, epsilon: float):
        self.stream_id = stream_id
        self.est = est
        self.params = quantile_params(epsilon)
        self.phis = phi_grid(5.0 * self.params.lam)
        self.bc = BcSite(stream_id, est, self.params.theta)
        self.last_grid: np.ndarray | None = None

    def on_advance(self, now: int) -> list[Message]:
        msgs = self.bc.on_advance(now)
        if self.est.window_count(now) == 0:
            return msgs
        grid = self.est.grid_quantiles(self.phis, now)
        last = self.last_grid
        if last is None:
            fire = True
        else:
            fire = bool(np.any(grid[:-1] > last[1:]) or np.any(grid[1:] < last[:-1]))
        if fire:
            payload = tuple(int(v) for v in grid)
            msgs.append(
                Message(self.stream_id, now, GRID, grid=payload, words=len(payload))
            )
            self.last_grid = grid.copy()
        return msgs

    def tracked_count(self) -> int:
        return len(self.phis)


class FrequentSite:
    """Composite for frequent-items queries: a BC reporter at error
    epsilon/24 plus an AC reporter at lam = epsilon/24 (item error
    11 * epsilon / 24), sharing one estimator."""

    def __init__(self, stream_id: int, est: WindowEstimator, epsilon: float):
        self.stream_id = stream_id
        self.bc = BcSite(stream_id, est, theta=epsilon / 48.0)
        self.ac = AcSite(stream_id, est, lam=epsilon / 24.0)

    def on_advance(self, now: int) -> list[Message]:
        return self.bc.on_advance(now) + self.ac.on_advance(now)

    def tracked_count(self) -> int:
        return self.ac.tracked_count()


PROTOCOLS = ("bc", "ac", "simple", "quantile", "frequent")


def site_lambda(protocol: str, epsilon: float) -> float:
    """Estimator error parameter each protocol assumes at its site."""
    if protocol == "bc":
        return epsilon
    if protocol in ("ac", "simple"):
        return epsilon / 11.0
    if protocol == "quantile":
        return epsilon / 20.0
    if protocol == "frequent":
        return epsilon / 24.0
    raise ValueError(f"unknown protocol {protocol!r}")


def make_site(protocol: str, stream_id: int, est: WindowEstimator, epsilon: float):
    if protocol == "bc":
        return BcSite(stream_id, est, theta=bc_params(epsilon).theta)
    if protocol == "ac":
        return AcSite(stream_id, est, lam=ac_params(epsilon).lam)
    if protocol == "simple":
        return SimpleSite(stream_id, est, lam=ac_params(epsilon).lam)
    if protocol == "quantile":
        return QuantileSite(stream_id, est, epsilon)
    if protocol == "frequent":
        return FrequentSite(stream_id, est, epsilon)
    raise ValueError(f"unknown protocol {protocol!r}")
