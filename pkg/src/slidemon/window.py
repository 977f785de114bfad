"""Per-site sliding-window statistics over integer-timestamped items.

At time ``now`` the window covers the ticks ``[now - W + 1, now]``.  Items
may arrive late: an item created at timestamp ``s`` may arrive at any tick
in ``[s, s + tau]``.  The estimator accepts items in arrival order,
accounts them by creation timestamp, and answers total-count, per-item
count, and rank queries for monotonically advancing query times.

With error parameter ``lam`` the contract is:

* ``estimate_total`` is within a ``lam/6`` relative error of the true
  in-window count,
* ``estimate_item`` is within an additive ``lam * total`` of the true
  per-item count.

The default exact backend meets both with zero error and keeps a dense
count per item id.  The ``"eh"`` backend replaces only the total count
with an exponential histogram whose state is O((1/lam) log^2(lam n))
bits; per-item counts and ranks stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k

_EMPTY = np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class TimedItem:
    """One stream element: item id, creation timestamp, arrival tick."""

    item: int
    timestamp: int
    arrival: int


@dataclass(frozen=True)
class WindowConfig:
    """Window length in ticks and the maximum arrival delay (tardiness)."""

    window: int
    tau: int = 0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window length must be a positive integer")
        if not 0 <= self.tau <= self.window - 1:
            raise ValueError("tau must be in [0, window-1]")


class ExpHistogram:
    """Approximate in-window total count in sublinear space.

    Late items (tardiness up to tau) are rounded into the finest bucket
    covering their timestamp: an exact per-tick counter for the last
    tau + 1 ticks, where arrivals may still land.  Once a tick can no
    longer receive arrivals it is flushed, in timestamp order, into the
    histogram core: buckets of power-of-two sizes carrying their newest
    timestamp, at most ceil(6/lam) + 1 buckets per size class (merging
    the two oldest of an overflowing class).  The staged region is exact
    and the core's only uncertainty is how much of its oldest bucket is
    still inside the window, so the estimate splitting that bucket in
    half stays within a lam/6 relative error for any tardiness.
    """

    def __init__(self, window: int, lam: float, tau: int = 0):
        if not 0.0 < lam < 1.0:
            raise ValueError("lam must be in (0, 1)")
        if not 0 <= tau <= window - 1:
            raise ValueError("tau must be in [0, window-1]")
        self.window = window
        self.lam = lam
        self.tau = tau
        self.cap = int(math.ceil(6.0 / lam - 1e-9)) + 1
        self._b_ts = np.zeros(256, dtype=np.int64)
        self._b_size = np.zeros(256, dtype=np.int64)
        self._b_exp = np.zeros(256, dtype=np.int64)
        self._class_counts = np.zeros(64, dtype=np.int64)
        self._n = 0
        self._core_total = 0
        self._pending = np.zeros(tau + 1, dtype=np.int64)
        self._pending_total = 0
        self._flushed = -1  # newest tick already pushed into the core

    def _ensure_capacity(self, extra: int):
        need = self._n + extra + 8
        if need > self._b_ts.size:
            newcap = max(need, 2 * self._b_ts.size)
            for name in ("_b_ts", "_b_size", "_b_exp"):
                old = getattr(self, name)
                grown = np.zeros(newcap, dtype=np.int64)
                grown[: self._n] = old[: self._n]
                setattr(self, name, grown)

    def insert_batch(self, timestamps: np.ndarray):
        """Stage one arrival batch; timestamps must be newer than every
        tick already flushed (guaranteed by the tardiness bound)."""
        if timestamps.size == 0:
            return
        timestamps = np.ascontiguousarray(timestamps, dtype=np.int64)
        if int(timestamps.min()) <= self._flushed:
            raise ValueError("timestamp older than the staging region")
        np.add.at(self._pending, timestamps % (self.tau + 1), 1)
        self._pending_total += int(timestamps.size)

    def advance(self, now: int):
        # flush completed ticks: s = now - tau may still receive an arrival
        # at `now`, so only ticks strictly older are final
        hi = now - self.tau - 1
        if hi > self._flushed:
            lo = self._flushed + 1
            # pending spans at most tau + 1 consecutive ticks from lo,
            # anything beyond is necessarily empty
            top = min(hi, lo + self.tau)
            ticks = np.arange(max(lo, 0), top + 1, dtype=np.int64)
            if ticks.size:
                slots = ticks % (self.tau + 1)
                counts = self._pending[slots]
                flush = np.repeat(ticks, counts)
                self._pending[slots] = 0
                self._pending_total -= int(flush.size)
                if flush.size:
                    self._ensure_capacity(flush.size)
                    self._n = int(
                        _k.eh_insert(
                            self._b_ts, self._b_size, self._b_exp, self._n,
                            self._class_counts, self.cap, flush,
                        )
                    )
                    self._core_total += int(flush.size)
            self._flushed = hi
        boundary = now - self.window + 1
        self._n, removed = _k.eh_expire(
            self._b_ts, self._b_size, self._b_exp, self._n,
            self._class_counts, boundary,
        )
        self._n = int(self._n)
        self._core_total -= int(removed)

    def estimate(self, now: int) -> int:
        self.advance(now)
        core = self._core_total
        if self._n > 0:
            core -= (int(self._b_size[0]) - 1) // 2
        return core + self._pending_total

    def clear(self):
        self._class_counts[:] = 0
        self._n = 0
        self._core_total = 0
        self._pending[:] = 0
        self._pending_total = 0
        self._flushed = -1

    @property
    def bucket_count(self) -> int:
        return self._n


class WindowEstimator:
    """Sliding-window count/rank provider for one stream.

    Single writer: inserts must come in non-decreasing arrival order, and
    queries may not go back in time once a later tick has been observed.
    Queries are read-only and may interleave with each other.
    """

    def __init__(self, config: WindowConfig, lam: float = 0.1,
                 backend: str = "exact", universe: int = 16):
        if backend not in ("exact", "eh"):
            raise ValueError(f"unknown backend {backend!r}")
        self.config = config
        self.lam = lam
        self.backend = backend
        w = config.window
        self._counts = np.zeros(max(universe, 1), dtype=np.int64)
        self._total = 0
        self._slots: list[list[np.ndarray]] = [[] for _ in range(w)]
        self._arr_ring = np.zeros(w, dtype=np.int64)
        self._exp_ring = np.zeros(2 * w, dtype=np.int64)
        self._now = -1
        self._last_arrival = -1
        self._eh = ExpHistogram(w, lam, config.tau) if backend == "eh" else None

    @property
    def universe(self) -> int:
        return self._counts.size

    @property
    def now(self) -> int:
        return self._now

    def _ensure_universe(self, size: int):
        if size > self._counts.size:
            grown = np.zeros(max(size, 2 * self._counts.size), dtype=np.int64)
            grown[: self._counts.size] = self._counts
            self._counts = grown

    def _reset_window(self):
        self._counts[:] = 0
        self._total = 0
        self._slots = [[] for _ in range(self.config.window)]
        self._arr_ring[:] = 0
        self._exp_ring[:] = 0
        if self._eh is not None:
            self._eh.clear()

    def sync(self, now: int):
        """Advance the clock to ``now``, applying expiries tick by tick."""
        if now < self._now:
            raise ValueError("query time went backwards")
        if now == self._now:
            return
        w = self.config.window
        if now - self._now >= 2 * w:
            # everything in flight has expired and left the churn window
            self._reset_window()
            self._now = now
            if self._eh is not None:
                self._eh.advance(now)  # re-anchor the staging region
            return
        for t in range(self._now + 1, now + 1):
            self._arr_ring[t % w] = 0
            self._exp_ring[(t + w) % (2 * w)] = 0
            s = t - w
            if s >= 0:
                idx = s % w
                chunks = self._slots[idx]
                if chunks:
                    for chunk in chunks:
                        _k.apply_delta(self._counts, _EMPTY, chunk)
                        self._total -= chunk.size
                    self._slots[idx] = []
        self._now = now
        if self._eh is not None:
            self._eh.advance(now)

    def insert(self, it: TimedItem):
        self.insert_batch(
            it.arrival,
            np.array([it.timestamp], dtype=np.int64),
            np.array([it.item], dtype=np.int64),
        )

    def insert_batch(self, arrival: int, timestamps: np.ndarray,
                     items: np.ndarray):
        """Insert all items arriving at one tick (any timestamp order)."""
        if timestamps.size == 0:
            self.sync(arrival)
            return
        if arrival < self._last_arrival or arrival < self._now:
            raise ValueError("arrival order regression")
        timestamps = np.ascontiguousarray(timestamps, dtype=np.int64)
        items = np.ascontiguousarray(items, dtype=np.int64)
        if np.any(timestamps < 0):
            raise ValueError("negative timestamp")
        if np.any(timestamps > arrival):
            raise ValueError("timestamp after arrival")
        if np.any(arrival - timestamps > self.config.tau):
            raise ValueError("tardiness bound exceeded")
        if np.any(items < 0):
            raise ValueError("negative item id")
        self.sync(arrival)
        self._last_arrival = arrival
        self._ensure_universe(int(items.max()) + 1)
        _k.apply_delta(self._counts, items, _EMPTY)
        self._total += items.size
        w = self.config.window
        if self.config.tau == 0:
            # validation above pins every timestamp to the arrival tick
            self._slots[arrival % w].append(items)
        else:
            for ts in np.unique(timestamps):
                self._slots[int(ts) % w].append(items[timestamps == ts])
        self._arr_ring[arrival % w] += timestamps.size
        np.add.at(self._exp_ring, (timestamps + w) % (2 * w), 1)
        if self._eh is not None:
            self._eh.insert_batch(timestamps)

    def window_count(self, now: int) -> int:
        """Exact number of in-window items (backend independent)."""
        self.sync(now)
        return self._total

    def estimate_total(self, now: int) -> int:
        self.sync(now)
        if self._eh is not None:
            return self._eh.estimate(now)
        return self._total

    def estimate_item(self, item: int, now: int) -> int:
        self.sync(now)
        if not 0 <= item < self._counts.size:
            return 0
        return int(self._counts[item])

    def item_counts(self, now: int) -> np.ndarray:
        """Dense per-item window counts; treat the returned array as read-only."""
        self.sync(now)
        return self._counts

    def rank_quantile(self, phi: float, now: int) -> int:
        """Item of 1-based rank ceil(phi * count) in the sorted window multiset."""
        self.sync(now)
        if not 0.0 < phi <= 1.0:
            raise ValueError("phi must be in (0, 1]")
        if self._total == 0:
            raise ValueError("rank query on an empty window")
        target = np.array([math.ceil(phi * self._total)], dtype=np.int64)
        return int(_k.rank_select(self._counts, target)[0])

    def grid_quantiles(self, phis: np.ndarray, now: int) -> np.ndarray:
        """Items at ranks ceil(phi * count) for an ascending phi grid."""
        self.sync(now)
        if self._total == 0:
            raise ValueError("rank query on an empty window")
        targets = np.ceil(phis * self._total).astype(np.int64)
        return _k.rank_select(self._counts, targets)

    def churn_count(self, now: int) -> int:
        """Exact number of items that arrived or expired in the window."""
        self.sync(now)
        if now < 0:
            return 0
        w = self.config.window
        arrivals = int(self._arr_ring.sum())
        lo = max(now - w + 1, 0)
        ticks = np.arange(lo, now + 1, dtype=np.int64)
        expiries = int(self._exp_ring[ticks % (2 * w)].sum())
        return arrivals + expiries

    @property
    def bucket_count(self) -> int:
        return self._eh.bucket_count if self._eh is not None else 0
