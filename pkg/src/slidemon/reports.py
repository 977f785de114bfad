"""Run results: audit records, per-window communication cost, CSV output.

Cost attribution: a message belongs to every window containing its send
tick, so per-window cost curves are sliding sums of the per-tick word
tallies; reports carry both the worst window and the mean.  All CSV output
is byte-deterministic for a given report.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .protocol import GRID, Message


@dataclass(frozen=True)
class AuditRecord:
    tick: int
    query: str
    phi: float | None
    true_value: float
    root_value: float
    allowed_err: float
    abs_err: float
    passed: bool
    item: int = -1  # audited item for per-item records; not serialized


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


@dataclass
class RunReport:
    protocol: str
    epsilon: float
    k: int
    window: int
    tau: int
    backend: str
    seed: int
    word_size_bits: int
    tick0: int
    tick_end: int
    records: list[AuditRecord] = field(default_factory=list)
    messages: list[Message] = field(default_factory=list)
    words_by_tick: np.ndarray | None = None   # shape (k, n_ticks)
    n_events: list[int] = field(default_factory=list)
    max_churn: int = 0
    max_tracked: list[int] = field(default_factory=list)
    max_buckets: list[int] = field(default_factory=list)
    site_lam: float | None = None
    id_map: np.ndarray | None = None          # dense index -> original id

    @property
    def violations(self) -> int:
        return sum(1 for r in self.records if not r.passed)

    @property
    def n_ticks(self) -> int:
        return 0 if self.tick_end < self.tick0 else self.tick_end - self.tick0 + 1

    def _orig_item(self, item: int) -> int:
        if item < 0 or self.id_map is None:
            return item
        return int(self.id_map[item])

    # -- per-window communication cost ---------------------------------

    def window_words(self) -> np.ndarray:
        """Sliding word sums, shape (k, n_ticks); column t is the cost of
        the window anchored at tick0 + t."""
        if self.n_ticks == 0:
            return np.zeros((self.k, 0), dtype=np.int64)
        cum = np.cumsum(self.words_by_tick, axis=1)
        out = cum.copy()
        w = self.window
        out[:, w:] = cum[:, w:] - cum[:, :-w]
        return out

    def window_cost(self, anchor: int) -> tuple[list[int], list[int], int, int]:
        """(words per stream, bits per stream, total words, total bits) for
        the window ending at ``anchor``."""
        if self.n_ticks == 0 or not self.tick0 <= anchor <= self.tick_end:
            raise ValueError(f"anchor {anchor} outside run ticks")
        col = self.window_words()[:, anchor - self.tick0]
        words = [int(x) for x in col]
        bits = [wd * self.word_size_bits for wd in words]
        return words, bits, int(col.sum()), int(col.sum()) * self.word_size_bits

    def max_window_words(self) -> int:
        if self.n_ticks == 0:
            return 0
        return int(self.window_words().sum(axis=0).max())

    def mean_window_words(self) -> float:
        if self.n_ticks == 0:
            return 0.0
        return float(self.window_words().sum(axis=0).mean())

    def total_words(self) -> int:
        return sum(m.words for m in self.messages)


def write_report_csv(report: RunReport, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tick,query,phi,true_value,root_value,allowed_err,abs_err,pass\n")
        for r in report.records:
            phi = "" if r.phi is None else _fmt(r.phi)
            fh.write(
                f"{r.tick},{r.query},{phi},{_fmt(r.true_value)},"
                f"{_fmt(r.root_value)},{_fmt(r.allowed_err)},"
                f"{_fmt(r.abs_err)},{1 if r.passed else 0}\n"
            )


def write_cost_csv(report: RunReport, path):
    ww = report.window_words()
    bits = report.word_size_bits
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("window_anchor,stream_id,words,bits\n")
        for t in range(report.n_ticks):
            anchor = report.tick0 + t
            for sid in range(report.k):
                w = int(ww[sid, t])
                fh.write(f"{anchor},{sid},{w},{w * bits}\n")
            tot = int(ww[:, t].sum())
            fh.write(f"{anchor},-1,{tot},{tot * bits}\n")


def write_messages_csv(report: RunReport, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tick,stream_id,kind,item_id,value,words\n")
        for m in report.messages:
            if m.kind == GRID:
                payload = ";".join(str(report._orig_item(v)) for v in m.grid)
                fh.write(f"{m.tick},{m.stream_id},{m.kind},-1,{payload},{m.words}\n")
            else:
                fh.write(
                    f"{m.tick},{m.stream_id},{m.kind},"
                    f"{report._orig_item(m.item)},{m.value},{m.words}\n"
                )


def write_summary_csv(report: RunReport, path, tag: str = ""):
    cols = {
        "tag": tag,
        "protocol": report.protocol,
        "epsilon": _fmt(report.epsilon),
        "k": report.k,
        "window": report.window,
        "tau": report.tau,
        "backend": report.backend,
        "seed": report.seed,
        "n_events": sum(report.n_events),
        "max_churn": report.max_churn,
        "audits": len(report.records),
        "violations": report.violations,
        "messages": len(report.messages),
        "total_words": report.total_words(),
        "max_window_words": report.max_window_words(),
        "mean_window_words": _fmt(report.mean_window_words()),
        "max_tracked": max(report.max_tracked, default=0),
        "max_buckets": max(report.max_buckets, default=0),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols.keys()) + "\n")
        fh.write(",".join(str(v) for v in cols.values()) + "\n")


def write_all(report: RunReport, outdir, tag: str = ""):
    os.makedirs(outdir, exist_ok=True)
    write_report_csv(report, os.path.join(outdir, "report.csv"))
    write_cost_csv(report, os.path.join(outdir, "cost.csv"))
    write_messages_csv(report, os.path.join(outdir, "messages.csv"))
    write_summary_csv(report, os.path.join(outdir, "summary.csv"), tag=tag)


def read_summary_csv(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        values = fh.readline().strip().split(",")
    return dict(zip(header, values))
