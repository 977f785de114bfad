import numpy as np
import pytest

from slidemon.coordinator import RootState
from slidemon.protocol import Message


def up(sid, item, value, tick=1):
    return Message(sid, tick, "up", item=item, value=value, words=2)


def off(sid, item, tick=1):
    return Message(sid, tick, "off", item=item, value=0, words=2)


def total(sid, value, tick=1):
    return Message(sid, tick, "total_up", value=value, words=1)


def grid(sid, values, tick=1):
    return Message(sid, tick, "grid", grid=tuple(values), words=len(values))


def test_ingest_overwrites_slots():
    root = RootState(2, 8, epsilon=0.1)
    root.ingest(up(0, 3, 91))
    assert root.query_item(3) == 91
    root.ingest(off(0, 3))
    assert root.query_item(3) == 0
    root.ingest(total(0, 111))
    assert root.query_total() == 111


def test_ingest_rejects_unknown_stream_and_kind():
    root = RootState(1, 4, epsilon=0.1)
    with pytest.raises(ValueError, match="unknown stream"):
        root.ingest(up(5, 0, 1))
    with pytest.raises(ValueError, match="unknown message kind"):
        root.ingest(Message(0, 1, "bogus"))


def test_query_total_sums_streams():
    root = RootState(2, 4, epsilon=0.1)
    assert root.query_total() == 0
    root.ingest(total(0, 100))
    root.ingest(total(1, 50))
    assert root.query_total() == 150


def test_query_item_sums_and_defaults():
    root = RootState(3, 8, epsilon=0.1)
    assert root.query_item(7) == 0
    assert root.query_item(12345) == 0
    root.ingest(up(0, 2, 10))
    root.ingest(up(2, 2, 5))
    assert root.query_item(2) == 15


def test_frequent_classic_example():
    # one stream, exact counts a=60 b=30 c=10 of 100, phi 0.5, eps 0.1
    root = RootState(1, 4, epsilon=0.1)
    root.ingest(total(0, 100))
    root.ingest(up(0, 0, 60))
    root.ingest(up(0, 1, 30))
    root.ingest(up(0, 2, 10))
    res = root.query_frequent(0.5)
    assert res.items == frozenset({0}) and not res.degenerate


def test_frequent_single_item_phi_one():
    root = RootState(1, 4, epsilon=0.1)
    root.ingest(total(0, 5))
    root.ingest(up(0, 3, 5))
    assert root.query_frequent(1.0).items == frozenset({3})


def test_frequent_degenerate_low_phi_flagged():
    root = RootState(1, 4, epsilon=0.2)
    root.ingest(total(0, 100))
    root.ingest(up(0, 0, 60))
    root.ingest(up(0, 1, 1))
    res = root.query_frequent(0.1)      # phi <= eps/2
    assert res.degenerate and res.items == frozenset({0, 1})
    with pytest.raises(ValueError):
        root.query_frequent(0.0)


def test_frequent_pruned_zero_equals_absent():
    a = RootState(1, 4, epsilon=0.1)
    b = RootState(1, 4, epsilon=0.1)
    for r in (a, b):
        r.ingest(total(0, 10))
        r.ingest(up(0, 1, 9))
    a.ingest(up(0, 2, 3))
    a.ingest(off(0, 2))                 # reported then reset to zero
    assert a.query_frequent(0.5) == b.query_frequent(0.5)
    assert a.query_item(2) == b.query_item(2) == 0


def test_quantile_single_stream_phi_one_is_top_entry():
    root = RootState(1, 4, epsilon=0.1, lam_quantile=0.05)
    root.ingest(total(0, 100))
    root.ingest(grid(0, [10, 20, 30, 40]))
    assert root.query_quantile(1.0) == 40


def test_quantile_weighted_merge_hand_example():
    # r = 100 and 300 with lam 0.05: entry weights 25 and 75
    root = RootState(2, 4, epsilon=0.1, lam_quantile=0.05)
    root.ingest(total(0, 100))
    root.ingest(total(1, 300))
    root.ingest(grid(0, [10, 20, 30, 40]))
    root.ingest(grid(1, [5, 15, 25, 35]))
    # target ceil(0.5 * 400) = 200; cum: 5:75, 10:100, 15:175, 20:200
    assert root.query_quantile(0.5) == 20


def test_quantile_merge_against_reference_loop():
    rng = np.random.default_rng(4)
    lam = 0.05
    root = RootState(3, 4, epsilon=0.1, lam_quantile=lam)
    totals = [100, 40, 260]
    grids = [np.sort(rng.integers(0, 1000, 20)) for _ in range(3)]
    entries = []
    for sid in range(3):
        root.ingest(total(sid, totals[sid]))
        root.ingest(grid(sid, grids[sid]))
        entries += [(int(v), 5 * lam * totals[sid]) for v in grids[sid]]
    entries.sort()
    for phi in (0.05, 0.3, 0.5, 0.77, 1.0):
        target = np.ceil(phi * sum(totals))
        cum = 0.0
        want = entries[-1][0]
        seen = {}
        for v, w in entries:
            seen[v] = seen.get(v, 0.0) + w
        for v in sorted(seen):
            cum += seen[v]
            if cum >= target:
                want = v
                break
        assert root.query_quantile(phi) == want, phi


def test_quantile_skips_empty_streams():
    root = RootState(2, 4, epsilon=0.1, lam_quantile=0.05)
    root.ingest(total(0, 100))
    root.ingest(grid(0, [1, 2, 3, 4]))
    root.ingest(grid(1, [900, 901, 902, 903]))
    root.ingest(total(1, 0))            # stream 1 window is empty
    assert root.query_quantile(1.0) == 4


def test_quantile_errors():
    root = RootState(1, 4, epsilon=0.1, lam_quantile=0.05)
    with pytest.raises(ValueError, match="no grid"):
        root.query_quantile(0.5)
    noq = RootState(1, 4, epsilon=0.1)
    with pytest.raises(ValueError, match="quantile protocol"):
        noq.query_quantile(0.5)
    root.ingest(grid(0, [1, 2]))
    root.ingest(total(0, 2))
    with pytest.raises(ValueError, match="phi"):
        root.query_quantile(0.0)


def test_frequent_from_quantiles_dominant_item():
    # one item occupying ~90% of the window: it answers most phi queries
    eps = 0.1
    lam = eps / 20
    root = RootState(1, 200, epsilon=eps, lam_quantile=lam)
    counts = np.zeros(200, dtype=np.int64)
    counts[50] = 90
    counts[0:10] = 1
    c = int(counts.sum())
    cum = np.cumsum(counts)
    m = int(round(1 / (5 * lam)))
    g = [int(np.searchsorted(cum, np.ceil(5 * lam * k * c))) for k in range(1, m + 1)]
    root.ingest(total(0, c))
    root.ingest(grid(0, g))
    got = root.frequent_from_quantiles(0.5)   # threshold 0.5/0.1 - 2 = 3 runs
    assert got == frozenset({50})


def test_frequent_from_quantiles_uniform_is_empty():
    eps = 0.2
    root = RootState(1, 40, epsilon=eps, lam_quantile=eps / 20)
    root.ingest(total(0, 20))
    root.ingest(grid(0, list(range(1, 21))))
    assert root.frequent_from_quantiles(0.9) == frozenset()


def test_frequent_from_quantiles_threshold_errors():
    root = RootState(1, 4, epsilon=0.2, lam_quantile=0.01)
    with pytest.raises(ValueError, match="phi_prime"):
        root.frequent_from_quantiles(0.4)   # == 2 * eps


def test_reingesting_last_messages_is_idempotent():
    root = RootState(2, 8, epsilon=0.1, lam_quantile=0.05)
    msgs = [total(0, 100), up(0, 1, 40), off(0, 2), grid(0, [3, 5, 7, 9]),
            total(1, 50), up(1, 1, 11)]
    for m in msgs:
        root.ingest(m)
    before = (
        root.query_total(),
        root.query_item(1),
        root.query_frequent(0.3),
        root.query_quantile(0.5),
    )
    for m in msgs:      # every slot's latest message again
        root.ingest(m)
    after = (
        root.query_total(),
        root.query_item(1),
        root.query_frequent(0.3),
        root.query_quantile(0.5),
    )
    assert before == after
