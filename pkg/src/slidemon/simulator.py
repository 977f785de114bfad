"""Deterministic tick-driven harness: feed sites, deliver to the
coordinator, audit every answer against the brute-force oracle, and
account communication per sliding window.

Delivery is zero-latency and lossless: a message emitted at tick t is
visible to queries at tick t.  Within a tick, streams are processed in
ascending id order.  Runs extend one window past the last arrival so the
drain (pure-expiry) regime is exercised too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coordinator import RootState
from .generators import GeneratorSpec, StreamEvents, generate_stream
from .oracle import StreamOracle, rank_interval
from .protocol import make_site, site_lambda
from .reports import AuditRecord, RunReport
from .window import WindowConfig, WindowEstimator

AUTO_AUDIT_THRESHOLD = 100_000


class TardinessError(ValueError):
    def __init__(self, stream_id: int, index: int, line: int | None = None):
        self.stream_id = stream_id
        self.index = index
        self.line = line
        where = f"line {line}" if line is not None else f"event {index}"
        super().__init__(
            f"stream {stream_id}: {where}: arrival exceeds the tardiness bound"
        )


@dataclass
class RunConfig:
    window: WindowConfig
    protocol: str
    epsilon: float
    generators: list[GeneratorSpec] | None = None
    traces: list[StreamEvents] | None = None
    backend: str = "exact"
    phis: tuple[float, ...] = (0.25, 0.5, 0.75)
    audit_every: int = 0          # 0 = auto cadence
    seed: int = 0
    word_size_bits: int = 64

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        if (self.generators is None) == (self.traces is None):
            raise ValueError("provide either generators or traces")
        if self.k < 1:
            raise ValueError("need at least one stream")
        for phi in self.phis:
            if not 0.0 < phi <= 1.0:
                raise ValueError("query phi values must be in (0, 1]")

    @property
    def k(self) -> int:
        src = self.generators if self.generators is not None else self.traces
        return len(src)


def _materialize(cfg: RunConfig) -> list[StreamEvents]:
    if cfg.traces is not None:
        return cfg.traces
    return [generate_stream(spec) for spec in cfg.generators]


def _dense_remap(streams: list[StreamEvents]):
    """Order-preserving remap of sparse item ids to a dense universe."""
    max_id = max((ev.max_item for ev in streams), default=-1)
    n_total = sum(ev.n for ev in streams)
    if max_id < 4096 or max_id + 1 <= 4 * max(n_total, 1):
        return streams, max_id + 1, None
    id_map = np.unique(np.concatenate([ev.item for ev in streams]))
    remapped = [
        StreamEvents(ev.arrival, ev.timestamp,
                     np.searchsorted(id_map, ev.item))
        for ev in streams
    ]
    return remapped, id_map.size, id_map


def _audit_cadence(cfg: RunConfig, n_total: int) -> int:
    if cfg.audit_every > 0:
        return cfg.audit_every
    if n_total <= AUTO_AUDIT_THRESHOLD:
        return 1
    return math.ceil(n_total / 10_000)


def _audit_tick(t, cfg, root, oracles, universe) -> list[AuditRecord]:
    eps = cfg.epsilon
    proto = cfg.protocol
    counts = oracles[0].counts_at(t)
    for o in oracles[1:]:
        counts = counts + o.counts_at(t)
    c = int(counts.sum())
    recs = []

    def rec(query, phi, true, rootv, allowed, abserr, item=-1):
        recs.append(AuditRecord(t, query, phi, true, rootv, allowed,
                                abserr, abserr <= allowed, item))

    if proto in ("bc", "frequent", "quantile"):
        allowed = {"bc": eps, "frequent": eps / 24.0,
                   "quantile": eps / 20.0}[proto] * c
        rt = root.query_total()
        rec("total", None, c, rt, allowed, abs(rt - c))
    if proto in ("ac", "simple", "frequent"):
        allowed = (eps if proto != "frequent" else 11.0 * eps / 24.0) * c
        diff = np.abs(root.g_items[:universe] - counts)
        worst = int(np.argmax(diff))
        rec("item", None, int(counts[worst]),
            int(root.g_items[worst]), allowed, int(diff[worst]), item=worst)
    if proto == "frequent" and c > 0:
        for phi in cfg.phis:
            mask, _ = root._frequent_mask(phi)
            mandatory = counts >= phi * c
            # small float guard so exact boundary counts are never
            # misclassified as forbidden
            forbidden = counts < (phi - eps) * c - 1e-9
            missing = int(np.count_nonzero(mandatory & ~mask[:universe]))
            bad = int(np.count_nonzero(mask[:universe] & forbidden))
            rec("frequent", phi, int(np.count_nonzero(mandatory)),
                int(np.count_nonzero(mask)), 0.0, float(missing + bad))
    if proto == "quantile" and eps * c >= 4.0:
        # resolution floor: the weighted grid merge quantizes ranks by
        # 5*lam*c per entry plus two whole ranks of ceiling slack, so the
        # +/- eps*c band is only meaningful once eps*c covers that
        for phi in cfg.phis:
            answer = root.query_quantile(phi)
            lo, hi = rank_interval(counts, answer)
            abserr = max(0.0, lo - phi * c, phi * c - hi)
            rec("quantile", phi, math.ceil(phi * c), answer, eps * c, abserr)
    return recs


def run_simulation(cfg: RunConfig) -> RunReport:
    streams = _materialize(cfg)
    w = cfg.window.window
    tau = cfg.window.tau
    for sid, ev in enumerate(streams):
        idx = ev.first_tardiness_violation(tau)
        if idx is not None:
            line = idx + 1 + ev.header_lines if cfg.traces is not None else None
            raise TardinessError(sid, idx, line)
    streams, universe, id_map = _dense_remap(streams)
    universe = max(universe, 1)
    k = len(streams)
    n_total = sum(ev.n for ev in streams)

    arrivals = [ev.arrival for ev in streams]
    starts = [int(a[0]) if a.size else 0 for a in arrivals]
    ends = [int(a[-1]) if a.size else -1 for a in arrivals]
    if n_total == 0:
        tick0, tick_end = 1, 0
    else:
        tick0 = min(s for s, a in zip(starts, arrivals) if a.size)
        tick_end = max(ends) + w          # drain one full window
    n_ticks = max(tick_end - tick0 + 1, 0)

    lam = site_lambda(cfg.protocol, cfg.epsilon)
    ests = [
        WindowEstimator(cfg.window, lam=lam, backend=cfg.backend,
                        universe=universe)
        for _ in range(k)
    ]
    sites = [make_site(cfg.protocol, sid, ests[sid], cfg.epsilon)
             for sid in range(k)]
    lam_q = cfg.epsilon / 20.0 if cfg.protocol == "quantile" else None
    root = RootState(k, universe, cfg.epsilon, lam_quantile=lam_q)
    oracles = [StreamOracle(ev, w, universe) for ev in streams]

    report = RunReport(
        protocol=cfg.protocol, epsilon=cfg.epsilon, k=k, window=w, tau=tau,
        backend=cfg.backend, seed=cfg.seed,
        word_size_bits=cfg.word_size_bits, tick0=tick0, tick_end=tick_end,
        n_events=[ev.n for ev in streams],
        max_tracked=[0] * k, max_buckets=[0] * k,
        id_map=id_map,
    )
    report.words_by_tick = np.zeros((k, n_ticks), dtype=np.int64)
    if cfg.protocol in ("ac", "frequent"):
        report.site_lam = cfg.epsilon / (11.0 if cfg.protocol == "ac" else 24.0)
    if n_ticks == 0:
        return report

    cadence = _audit_cadence(cfg, n_total)
    bounds = [
        np.searchsorted(a, np.arange(tick0, tick_end + 2, dtype=np.int64))
        for a in arrivals
    ]
    max_churn = 0
    for t in range(tick0, tick_end + 1):
        ti = t - tick0
        for sid in range(k):
            ev = streams[sid]
            lo, hi = int(bounds[sid][ti]), int(bounds[sid][ti + 1])
            ests[sid].insert_batch(t, ev.timestamp[lo:hi], ev.item[lo:hi])
            msgs = sites[sid].on_advance(t)
            for m in msgs:
                root.ingest(m)
                report.words_by_tick[sid, ti] += m.words
            report.messages.extend(msgs)
            tracked = sites[sid].tracked_count()
            if tracked > report.max_tracked[sid]:
                report.max_tracked[sid] = tracked
            buckets = ests[sid].bucket_count
            if buckets > report.max_buckets[sid]:
                report.max_buckets[sid] = buckets
        if ti % cadence == 0 or t == tick_end:
            report.records.extend(_audit_tick(t, cfg, root, oracles, universe))
            churn = sum(o.churn_at(t) for o in oracles)
            if churn > max_churn:
                max_churn = churn
    report.max_churn = max_churn
    return report


def replay_answers(report: RunReport, epsilon: float,
                   lam_quantile: float | None = None) -> list[float]:
    """Re-ingest the recorded message log and recompute each audited
    query's answer; order matches report.records."""
    universe = max(
        (m.item + 1 for m in report.messages if m.item >= 0), default=1
    )
    root = RootState(report.k, universe, epsilon, lam_quantile=lam_quantile)
    answers: list[float] = []
    mi = 0
    msgs = report.messages  # already in (tick, emission) order
    for r in report.records:
        while mi < len(msgs) and msgs[mi].tick <= r.tick:
            root.ingest(msgs[mi])
            mi += 1
        if r.query == "total":
            answers.append(root.query_total())
        elif r.query == "item":
            answers.append(root.query_item(r.item))
        elif r.query == "frequent":
            mask, _ = root._frequent_mask(r.phi)
            answers.append(int(np.count_nonzero(mask)))
        elif r.query == "quantile":
            answers.append(root.query_quantile(r.phi))
    return answers
