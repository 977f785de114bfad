"""Coordinator state: last-received estimates per stream and the four
approximate query types computed from them.

The coordinator is a pure function of its ingest history; re-ingesting
the latest message of a slot leaves every answer unchanged, and a per-item
slot holding 0 is indistinguishable from an absent one.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import protocol as proto
from .protocol import Message, phi_grid


class FrequentResult(NamedTuple):
    items: frozenset[int]
    degenerate: bool


class RootState:
    """Per-stream slots (total, per-item estimates, last grid) plus the
    query layer over their sums."""

    def __init__(self, k: int, universe: int, epsilon: float,
                 lam_quantile: float | None = None):
        if k < 1:
            raise ValueError("need at least one stream")
        self.k = k
        self.epsilon = epsilon
        self.lam_quantile = lam_quantile
        self.r_total = np.zeros(k, dtype=np.int64)
        self.r_items = np.zeros((k, universe), dtype=np.int64)
        self.g_items = np.zeros(universe, dtype=np.int64)
        self.grids: list[np.ndarray | None] = [None] * k

    @property
    def universe(self) -> int:
        return self.r_items.shape[1]

    def _ensure_universe(self, size: int):
        if size > self.universe:
            items = np.zeros((self.k, size), dtype=np.int64)
            items[:, : self.universe] = self.r_items
            self.r_items = items
            g = np.zeros(size, dtype=np.int64)
            g[: self.g_items.size] = self.g_items
            self.g_items = g

    def ingest(self, m: Message):
        if not 0 <= m.stream_id < self.k:
            raise ValueError(f"unknown stream id {m.stream_id}")
        sid = m.stream_id
        if m.kind in (proto.TOTAL_UP, proto.TOTAL_DOWN):
            self.r_total[sid] = m.value
        elif m.kind in (proto.UP, proto.DOWN, proto.OFF):
            self._ensure_universe(m.item + 1)
            old = self.r_items[sid, m.item]
            self.r_items[sid, m.item] = m.value
            self.g_items[m.item] += m.value - old
        elif m.kind == proto.GRID:
            self.grids[sid] = np.asarray(m.grid, dtype=np.int64)
        else:
            raise ValueError(f"unknown message kind {m.kind!r}")

    # -- queries ------------------------------------------------------

    def query_total(self) -> int:
        return int(self.r_total.sum())

    def query_item(self, item: int) -> int:
        if not 0 <= item < self.universe:
            return 0
        return int(self.g_items[item])

    def _frequent_mask(self, phi: float) -> tuple[np.ndarray, bool]:
        threshold = (phi - self.epsilon / 2.0) * float(self.r_total.sum())
        degenerate = threshold <= 0.0
        mask = (self.g_items >= threshold) & (self.g_items > 0)
        return mask, degenerate

    def query_frequent(self, phi: float) -> FrequentResult:
        """Items whose summed estimates clear (phi - eps/2) of the summed
        totals.  phi <= eps/2 degenerates to every tracked item and is
        flagged as such."""
        if not 0.0 < phi <= 1.0:
            raise ValueError("phi must be in (0, 1]")
        mask, degenerate = self._frequent_mask(phi)
        return FrequentResult(
            frozenset(int(j) for j in np.nonzero(mask)[0]), degenerate
        )

    def query_quantile(self, phi: float) -> int:
        """Weighted merge of the streams' last grids: each grid entry of
        stream sigma weighs 5 * lam * r_sigma; returns the smallest item
        whose cumulative weight reaches ceil(phi * sum of totals)."""
        if not 0.0 < phi <= 1.0:
            raise ValueError("phi must be in (0, 1]")
        if self.lam_quantile is None:
            raise ValueError("no quantile protocol configured")
        values = []
        weights = []
        for sid in range(self.k):
            grid = self.grids[sid]
            r = int(self.r_total[sid])
            if grid is None or r <= 0:
                continue
            values.append(grid)
            weights.append(
                np.full(grid.size, 5.0 * self.lam_quantile * r, dtype=np.float64)
            )
        if not values:
            raise ValueError("no grid received yet")
        values = np.concatenate(values)
        weights = np.concatenate(weights)
        order = np.argsort(values, kind="stable")
        values = values[order]
        weights = weights[order]
        uniq, start = np.unique(values, return_index=True)
        group_w = np.add.reduceat(weights, start)
        cum = np.cumsum(group_w)
        target = math.ceil(phi * float(self.r_total.sum()))
        idx = int(np.searchsorted(cum, target, side="left"))
        if idx >= uniq.size:
            idx = uniq.size - 1
        return int(uniq[idx])

    def frequent_from_quantiles(self, phi_prime: float) -> frozenset[int]:
        """Items occurring as at least phi'/eps - 2 consecutive answers to
        the eps, 2*eps, ..., 1 quantile queries."""
        eps = self.epsilon
        need = phi_prime / eps - 2.0
        if need <= 0.0:
            raise ValueError("phi_prime must exceed 2 * epsilon")
        answers = [self.query_quantile(p) for p in phi_grid(eps)]
        out = set()
        run_val, run_len = None, 0
        for a in answers:
            if a == run_val:
                run_len += 1
            else:
                run_val, run_len = a, 1
            if run_len >= need:
                out.add(a)
        return frozenset(out)
