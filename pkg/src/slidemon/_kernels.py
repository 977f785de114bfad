"""Hot inner loops, each with a numba-jitted and a pure-numpy twin.

The active backend is picked at import time: numba when importable, unless
the environment variable SLIDEMON_NUMBA is set to 0/false/off.  Call
set_backend() to switch at runtime (used by the equivalence tests and the
benchmark).  Both twins of a kernel must produce bit-identical results;
keep the float expression order in sync between them.
"""

from __future__ import annotations

import os

import numpy as np

# message kind codes shared with the protocol layer
UP = 0
OFF = 1
DOWN = 2

_EMPTY = np.empty(0, dtype=np.int64)


# ---------------------------------------------------------------------------
# numpy implementations

def _scan_ac_np(counts, last_sent, off, chat, lam):
    grow = 9.0 * lam * chat
    low = 3.0 * lam * chat
    up = counts > last_sent + grow
    offm = ~up & ~off & (counts < low)
    down = ~up & ~offm & ~off & (counts < last_sent - grow)
    items = np.nonzero(up | offm | down)[0].astype(np.int64)
    kinds = np.full(items.size, DOWN, dtype=np.int64)
    kinds[up[items]] = UP
    kinds[offm[items]] = OFF
    values = counts[items].copy()
    values[offm[items]] = 0
    last_sent[items] = values
    off[up] = False
    off[offm] = True
    return items, kinds, values


def _scan_simple_np(counts, last_sent, chat, lam):
    grow = 9.0 * lam * chat
    up = counts > last_sent + grow
    down = ~up & (counts < last_sent - grow)
    items = np.nonzero(up | down)[0].astype(np.int64)
    kinds = np.full(items.size, DOWN, dtype=np.int64)
    kinds[up[items]] = UP
    values = counts[items].copy()
    last_sent[items] = values
    return items, kinds, values


def _rank_select_np(counts, targets):
    # targets must be ascending; returns item of the first cumulative
    # count reaching each target rank
    cum = np.cumsum(counts)
    idx = np.searchsorted(cum, targets, side="left")
    return np.minimum(idx, counts.size - 1).astype(np.int64)


def _apply_delta_np(counts, add_items, sub_items):
    if add_items.size:
        counts += np.bincount(add_items, minlength=counts.size)
    if sub_items.size:
        counts -= np.bincount(sub_items, minlength=counts.size)


def _eh_insert_np(b_ts, b_size, b_exp, n, class_counts, cap, ts_batch):
    # ts_batch must be non-decreasing and no older than the newest bucket
    for x in range(ts_batch.size):
        b_ts[n] = ts_batch[x]
        b_size[n] = 1
        b_exp[n] = 0
        class_counts[0] += 1
        n += 1
        e = 0
        while class_counts[e] > cap:
            # start of the class-e run = number of buckets in older
            # (larger) classes; merge its two oldest buckets
            start = 0
            for ee in range(e + 1, class_counts.size):
                start += class_counts[ee]
            b_size[start + 1] = b_size[start] + b_size[start + 1]
            b_exp[start + 1] = e + 1
            b_ts[start:n - 1] = b_ts[start + 1:n]
            b_size[start:n - 1] = b_size[start + 1:n]
            b_exp[start:n - 1] = b_exp[start + 1:n]
            n -= 1
            class_counts[e] -= 2
            class_counts[e + 1] += 1
            e += 1
    return n


def _eh_expire_np(b_ts, b_size, b_exp, n, class_counts, boundary):
    drop = 0
    removed = 0
    while drop < n and b_ts[drop] < boundary:
        class_counts[b_exp[drop]] -= 1
        removed += int(b_size[drop])
        drop += 1
    if drop:
        b_ts[:n - drop] = b_ts[drop:n]
        b_size[:n - drop] = b_size[drop:n]
        b_exp[:n - drop] = b_exp[drop:n]
        n -= drop
    return n, removed


_NUMPY_IMPLS = {
    "scan_ac": _scan_ac_np,
    "scan_simple": _scan_simple_np,
    "rank_select": _rank_select_np,
    "apply_delta": _apply_delta_np,
    "eh_insert": _eh_insert_np,
    "eh_expire": _eh_expire_np,
}


# ---------------------------------------------------------------------------
# numba implementations

def _build_numba_impls():
    from numba import njit

    @njit(cache=True)
    def scan_ac(counts, last_sent, off, chat, lam):
        grow = 9.0 * lam * chat
        low = 3.0 * lam * chat
        n = 0
        for j in range(counts.size):
            cj = counts[j]
            if cj > last_sent[j] + grow:
                n += 1
            elif not off[j] and (cj < low or cj < last_sent[j] - grow):
                n += 1
        items = np.empty(n, np.int64)
        kinds = np.empty(n, np.int64)
        values = np.empty(n, np.int64)
        w = 0
        for j in range(counts.size):
            cj = counts[j]
            if cj > last_sent[j] + grow:
                items[w] = j
                kinds[w] = UP
                values[w] = cj
                last_sent[j] = cj
                off[j] = False
                w += 1
            elif not off[j]:
                if cj < low:
                    items[w] = j
                    kinds[w] = OFF
                    values[w] = 0
                    last_sent[j] = 0
                    off[j] = True
                    w += 1
                elif cj < last_sent[j] - grow:
                    items[w] = j
                    kinds[w] = DOWN
                    values[w] = cj
                    last_sent[j] = cj
                    w += 1
        return items, kinds, values

    @njit(cache=True)
    def scan_simple(counts, last_sent, chat, lam):
        grow = 9.0 * lam * chat
        n = 0
        for j in range(counts.size):
            cj = counts[j]
            if cj > last_sent[j] + grow or cj < last_sent[j] - grow:
                n += 1
        items = np.empty(n, np.int64)
        kinds = np.empty(n, np.int64)
        values = np.empty(n, np.int64)
        w = 0
        for j in range(counts.size):
            cj = counts[j]
            if cj > last_sent[j] + grow:
                items[w] = j
                kinds[w] = UP
                values[w] = cj
                last_sent[j] = cj
                w += 1
            elif cj < last_sent[j] - grow:
                items[w] = j
                kinds[w] = DOWN
                values[w] = cj
                last_sent[j] = cj
                w += 1
        return items, kinds, values

    @njit(cache=True)
    def rank_select(counts, targets):
        out = np.empty(targets.size, np.int64)
        cum = 0
        ti = 0
        for j in range(counts.size):
            cum += counts[j]
            while ti < targets.size and cum >= targets[ti]:
                out[ti] = j
                ti += 1
            if ti == targets.size:
                break
        while ti < targets.size:
            out[ti] = counts.size - 1
            ti += 1
        return out

    @njit(cache=True)
    def apply_delta(counts, add_items, sub_items):
        for i in range(add_items.size):
            counts[add_items[i]] += 1
        for i in range(sub_items.size):
            counts[sub_items[i]] -= 1

    @njit(cache=True)
    def eh_insert(b_ts, b_size, b_exp, n, class_counts, cap, ts_batch):
        for x in range(ts_batch.size):
            b_ts[n] = ts_batch[x]
            b_size[n] = 1
            b_exp[n] = 0
            class_counts[0] += 1
            n += 1
            e = 0
            while class_counts[e] > cap:
                start = 0
                for ee in range(e + 1, class_counts.size):
                    start += class_counts[ee]
                b_size[start + 1] = b_size[start] + b_size[start + 1]
                b_exp[start + 1] = e + 1
                for i in range(start, n - 1):
                    b_ts[i] = b_ts[i + 1]
                    b_size[i] = b_size[i + 1]
                    b_exp[i] = b_exp[i + 1]
                n -= 1
                class_counts[e] -= 2
                class_counts[e + 1] += 1
                e += 1
        return n

    @njit(cache=True)
    def eh_expire(b_ts, b_size, b_exp, n, class_counts, boundary):
        drop = 0
        removed = 0
        while drop < n and b_ts[drop] < boundary:
            class_counts[b_exp[drop]] -= 1
            removed += b_size[drop]
            drop += 1
        if drop > 0:
            for i in range(drop, n):
                b_ts[i - drop] = b_ts[i]
                b_size[i - drop] = b_size[i]
                b_exp[i - drop] = b_exp[i]
            n -= drop
        return n, removed

    return {
        "scan_ac": scan_ac,
        "scan_simple": scan_simple,
        "rank_select": rank_select,
        "apply_delta": apply_delta,
        "eh_insert": eh_insert,
        "eh_expire": eh_expire,
    }


_NUMBA_IMPLS = None


def _numba_impls():
    global _NUMBA_IMPLS
    if _NUMBA_IMPLS is None:
        _NUMBA_IMPLS = _build_numba_impls()
    return _NUMBA_IMPLS


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


_active = "numpy"


def set_backend(name: str) -> None:
    """Bind the public kernel names to the numba or numpy implementations."""
    global _active
    if name == "numba":
        if not numba_available():
            raise RuntimeError("numba backend requested but numba is not importable")
        impls = _numba_impls()
    elif name == "numpy":
        impls = _NUMPY_IMPLS
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    for fname, fn in impls.items():
        globals()[fname] = fn
    _active = name


def active_backend() -> str:
    return _active


def _default_backend() -> str:
    flag = os.environ.get("SLIDEMON_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return "numpy"
    return "numba" if numba_available() else "numpy"


set_backend(_default_backend())
