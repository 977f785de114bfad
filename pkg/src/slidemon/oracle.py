"""Brute-force reference answers recomputed from raw events only.

Deliberately independent of the estimator and protocol code: no shared
state, no accelerated kernels, just sorted copies of the raw event arrays
sliced per query.  The audits in the simulator compare every coordinator
answer against this module.
"""

from __future__ import annotations

import math

import numpy as np

from .generators import StreamEvents


class StreamOracle:
    """Window recounts for one stream from timestamp-sorted raw events."""

    def __init__(self, events: StreamEvents, window: int, universe: int):
        self.window = window
        self.universe = universe
        order = np.argsort(events.timestamp, kind="stable")
        self._ts = events.timestamp[order]
        self._item = events.item[order]
        self._arr = events.arrival[order]
        self._arr_sorted = np.sort(events.arrival)
        self._max_delay = events.max_delay

    def counts_at(self, now: int) -> np.ndarray:
        """Dense per-item counts of arrived items with in-window timestamps."""
        w = self.window
        lo = int(np.searchsorted(self._ts, now - w + 1, side="left"))
        hi = int(np.searchsorted(self._ts, now, side="right"))
        safe = int(np.searchsorted(self._ts, now - self._max_delay, side="right"))
        safe = min(max(safe, lo), hi)
        counts = np.bincount(self._item[lo:safe], minlength=self.universe)
        tail = slice(safe, hi)
        if hi > safe:
            arrived = self._arr[tail] <= now
            counts += np.bincount(self._item[tail][arrived], minlength=self.universe)
        return counts

    def total_at(self, now: int) -> int:
        return int(self.counts_at(now).sum())

    def churn_at(self, now: int) -> int:
        """Arrivals plus expiries inside the window [now - W + 1, now]."""
        w = self.window
        arrivals = int(
            np.searchsorted(self._arr_sorted, now, side="right")
            - np.searchsorted(self._arr_sorted, now - w + 1, side="left")
        )
        expiries = int(
            np.searchsorted(self._ts, now - w, side="right")
            - np.searchsorted(self._ts, now - 2 * w + 1, side="left")
        )
        return arrivals + expiries


def rank_interval(counts: np.ndarray, item: int) -> tuple[int, int]:
    """1-based rank positions [lo, hi] an item value occupies in the sorted
    window multiset; hi = lo - 1 when the value is absent."""
    below = int(counts[:item].sum())
    return below + 1, below + int(counts[item])


def exact_quantile(counts: np.ndarray, phi: float) -> int:
    total = int(counts.sum())
    if total == 0:
        raise ValueError("rank query on an empty window")
    target = math.ceil(phi * total)
    return int(np.searchsorted(np.cumsum(counts), target, side="left"))


def oracle_query(oracles: list[StreamOracle], now: int, kind: str, *,
                 item: int | None = None, phi: float | None = None):
    """Exact global answer across all streams at tick ``now``.

    kind is one of "total", "item", "quantile", "frequent", "churn".
    """
    if kind == "churn":
        return sum(o.churn_at(now) for o in oracles)
    counts = oracles[0].counts_at(now)
    for o in oracles[1:]:
        counts = counts + o.counts_at(now)
    if kind == "total":
        return int(counts.sum())
    if kind == "item":
        return int(counts[item]) if 0 <= item < counts.size else 0
    if kind == "quantile":
        return exact_quantile(counts, phi)
    if kind == "frequent":
        total = int(counts.sum())
        return frozenset(int(j) for j in np.nonzero(counts >= phi * total)[0])
    raise ValueError(f"unknown oracle query kind {kind!r}")
