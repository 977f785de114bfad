"""Acceptance gate: eight criteria over the shipped corpus.

Run with `pytest tests/test_acceptance.py -v -s` to see the one-line
verdict per criterion.  The corpus spans k in {1, 5}, windows 100 and
1000, epsilon in {0.05, 0.1, 0.2}, uniform/zipf/adversarial generators,
and 1e4 to 1e5 items per stream, all on the exact backend.
"""

import math
import os
import time

import numpy as np
import pytest

from slidemon.generators import GeneratorSpec, generate_stream, read_trace, redelay
from slidemon.reports import write_all
from slidemon.simulator import RunConfig, replay_answers, run_simulation
from slidemon.window import WindowConfig, WindowEstimator

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def verdict(name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line, flush=True)
    assert ok, line


def make_cfg(protocol, k, window, eps, kind, n, rate, phis=(0.25, 0.5, 0.75),
             seed0=1000, audit_every=0):
    duration = int(math.ceil(n / rate))
    specs = [
        GeneratorSpec(kind=kind, universe=100, rate=rate, duration=duration,
                      seed=seed0 + s, zipf_s=1.2)
        for s in range(k)
    ]
    return RunConfig(window=WindowConfig(window), protocol=protocol,
                     epsilon=eps, generators=specs, phis=phis,
                     audit_every=audit_every)


CORPUS = {
    "bc_uniform": make_cfg("bc", 1, 100, 0.05, "uniform", 20_000, 5),
    "bc_zipf_k5_w1000": make_cfg("bc", 5, 1000, 0.2, "zipf", 10_000, 5),
    "ac_zipf": make_cfg("ac", 1, 100, 0.1, "zipf", 10_000, 5),
    "ac_uniform_k5": make_cfg("ac", 5, 100, 0.05, "uniform", 10_000, 5),
    "ac_churn_large": make_cfg("ac", 1, 1000, 0.2, "churn", 99_000, 10),
    "ac_zipf_k5_w1000": make_cfg("ac", 5, 1000, 0.1, "zipf", 30_000, 10),
    "simple_zipf": make_cfg("simple", 1, 100, 0.2, "zipf", 10_000, 5),
    "freq_zipf_k5": make_cfg("frequent", 5, 100, 0.2, "zipf", 10_000, 5,
                             phis=(0.15, 0.3)),
    "freq_churn": make_cfg("frequent", 1, 1000, 0.1, "churn", 10_000, 5,
                           phis=(0.2, 0.5)),
    "quant_uniform": make_cfg("quantile", 1, 100, 0.1, "uniform", 10_000, 5),
    "quant_zipf_k5": make_cfg("quantile", 5, 100, 0.2, "zipf", 10_000, 5),
    "quant_burst_w1000": make_cfg("quantile", 1, 1000, 0.05, "burst", 20_000, 5),
}


@pytest.fixture(scope="module")
def corpus():
    reports = {}
    t0 = time.perf_counter()
    for name, cfg in CORPUS.items():
        reports[name] = run_simulation(cfg)
    return reports, time.perf_counter() - t0


def test_c1_hard_error_bounds(corpus):
    reports, elapsed = corpus
    violations = {n: r.violations for n, r in reports.items() if r.violations}
    audits = sum(len(r.records) for r in reports.values())
    verdict(
        "C1 hard error bounds: zero violations on the corpus",
        not violations and elapsed < 300.0,
        f"{audits} audit records, {elapsed:.1f}s, violations={violations}",
    )


def test_c2_tracked_items_within_fact1_bound(corpus):
    reports, _ = corpus
    worst = []
    for name, rep in reports.items():
        if rep.site_lam is None:
            continue
        bound = math.floor(1.0 / rep.site_lam)
        peak = max(rep.max_tracked)
        worst.append((name, peak, bound))
        if peak > bound:
            verdict("C2 off-flag bound", False, f"{name}: {peak} > {bound}")
    detail = "; ".join(f"{n}: {p}<={b}" for n, p, b in worst)
    verdict("C2 tracked items never exceed floor(1/lambda)", True, detail)


def test_c3_words_scale_no_worse_than_log_n():
    metrics = []
    for p in range(10, 17):
        n = 2 ** p
        spec = GeneratorSpec(kind="zipf", universe=64, rate=8,
                             duration=max(n // 8, 1), seed=42, zipf_s=1.2)
        cfg = RunConfig(window=WindowConfig(256), protocol="ac", epsilon=0.1,
                        generators=[spec], audit_every=64)
        rep = run_simulation(cfg)
        assert rep.violations == 0
        metrics.append(rep.max_window_words() / p)
    spread = max(metrics) / min(metrics)
    verdict(
        "C3 max window words / log2(n) spread <= 2 over n=2^10..2^16",
        spread <= 2.0,
        f"spread {spread:.2f}, metrics {[round(m, 1) for m in metrics]}",
    )


def test_c4_words_scale_inversely_with_epsilon():
    spec = GeneratorSpec(kind="zipf", universe=64, rate=8, duration=2048,
                         seed=7, zipf_s=1.2)
    words = {}
    for eps in (0.2, 0.1, 0.05):
        cfg = RunConfig(window=WindowConfig(256), protocol="ac", epsilon=eps,
                        generators=[spec], audit_every=32)
        rep = run_simulation(cfg)
        assert rep.violations == 0
        words[eps] = rep.max_window_words()
    r1 = words[0.1] / words[0.2]
    r2 = words[0.05] / words[0.1]
    verdict(
        "C4 halving epsilon grows max window words by a factor in [1.5, 3]",
        1.5 <= r1 <= 3.0 and 1.5 <= r2 <= 3.0,
        f"words {words}, ratios {r1:.2f}, {r2:.2f}",
    )


def test_c5_out_of_order_overhead():
    w = 100
    spec = GeneratorSpec(kind="zipf", universe=64, rate=8, duration=2000,
                         seed=3, zipf_s=1.2)
    ev0 = generate_stream(spec)
    ev1 = redelay(ev0, w // 2, seed=99)
    words = {}
    for tau, ev in ((0, ev0), (w // 2, ev1)):
        cfg = RunConfig(window=WindowConfig(w, tau), protocol="ac", epsilon=0.1,
                        traces=[ev], audit_every=8)
        rep = run_simulation(cfg)
        assert rep.violations == 0
        words[tau] = rep.max_window_words()
    limit = 3.0 * (w / (w - w // 2))
    ratio = words[w // 2] / words[0]
    verdict(
        "C5 tau=W/2 window cost within 3 * W/(W-tau) of tau=0",
        ratio <= limit,
        f"{words[0]} -> {words[w // 2]} words, ratio {ratio:.2f} <= {limit:g}",
    )


def test_c6_exponential_histogram_accuracy_and_size():
    # burst modulation runs at a mean of 1.875x the base rate, so a base
    # rate of 5.3 over 1e4 ticks yields right about 1e5 items
    lam, window, rate, duration = 0.12, 2000, 5.3, 10_000
    spec = GeneratorSpec(kind="burst", universe=50, rate=rate,
                         duration=duration, seed=8)
    ev = generate_stream(spec)
    eh = WindowEstimator(WindowConfig(window), lam=lam, backend="eh",
                         universe=50)
    ex = WindowEstimator(WindowConfig(window), lam=lam, backend="exact",
                         universe=50)
    t_end = duration + window
    bounds = np.searchsorted(ev.arrival, np.arange(1, t_end + 2))
    worst = 0.0
    peak_buckets = 0
    for t in range(1, t_end + 1):
        lo, hi = bounds[t - 1], bounds[t]
        eh.insert_batch(t, ev.timestamp[lo:hi], ev.item[lo:hi])
        ex.insert_batch(t, ev.timestamp[lo:hi], ev.item[lo:hi])
        c = ex.estimate_total(t)
        chat = eh.estimate_total(t)
        if c:
            worst = max(worst, abs(chat - c) / c)
        else:
            assert chat == 0
        peak_buckets = max(peak_buckets, eh.bucket_count)
    n = ev.n
    bucket_bound = 8.0 * (1.0 / lam) * math.log2(lam * n + 2)
    verdict(
        "C6 EH total within lam/6 at every tick of a 1e5-item trace,"
        " bucket count bounded",
        worst <= lam / 6 and peak_buckets <= bucket_bound
        and 90_000 <= n <= 110_000,
        f"n={n}, worst rel err {worst:.5f} <= {lam / 6:.5f},"
        f" buckets {peak_buckets} <= {bucket_bound:.0f}",
    )


def test_c7_replay_and_determinism(corpus, tmp_path):
    reports, _ = corpus
    # replaying each recorded message log reproduces the recorded answers
    for name in ("ac_zipf", "bc_uniform", "quant_zipf_k5", "freq_zipf_k5"):
        rep = reports[name]
        cfg = CORPUS[name]
        lam_q = cfg.epsilon / 20 if cfg.protocol == "quantile" else None
        got = replay_answers(rep, cfg.epsilon, lam_quantile=lam_q)
        want = [r.root_value for r in rep.records]
        if got != pytest.approx(want):
            verdict("C7 replay equivalence", False, name)
    # identical seeds give byte-identical report files
    for name in ("ac_zipf", "quant_uniform"):
        a = run_simulation(CORPUS[name])
        write_all(a, tmp_path / f"{name}_a", tag=name)
        write_all(reports[name], tmp_path / f"{name}_b", tag=name)
        for f in ("report.csv", "cost.csv", "messages.csv", "summary.csv"):
            ba = (tmp_path / f"{name}_a" / f).read_bytes()
            bb = (tmp_path / f"{name}_b" / f).read_bytes()
            if ba != bb:
                verdict("C7 determinism", False, f"{name}/{f} differs")
    verdict("C7 message-log replay and byte-identical reruns", True,
            "4 replayed logs, 2 rerun configs")


def test_c8_hand_derived_ac_rule_table(tmp_path):
    ev = read_trace(os.path.join(GOLDEN, "ac_hand_trace.csv"))
    cfg = RunConfig(window=WindowConfig(4, 0), protocol="ac", epsilon=0.55,
                    traces=[ev])
    rep = run_simulation(cfg)
    from slidemon.reports import write_messages_csv
    out = tmp_path / "messages.csv"
    write_messages_csv(rep, out)
    want = open(os.path.join(GOLDEN, "ac_hand_messages.csv"), "rb").read()
    ok = out.read_bytes() == want and rep.violations == 0
    verdict("C8 hand-derived up/off/down sequence reproduced exactly", ok,
            f"{len(rep.messages)} messages")
