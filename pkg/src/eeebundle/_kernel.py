"""Compiled event loop shared by the single-link and bundle simulators.

Links are advanced lazily: before a frame arrives at time t every pending
mode change with time <= t is applied first (mode changes win ties against
arrivals). The memory guard trips when a link's backlog exceeds the work of
MAX_BACKLOG average-sized frames. Each link keeps its frames in a singly linked FIFO threaded
through ``nxt``; the not-yet-scheduled tail starts at ``pend_head``.
"""

import numpy as np
from numba import njit

ACTIVE, SLEEPING, IDLE, WAKING = 0, 1, 2, 3
MAX_BACKLOG = 1_000_000


@njit(cache=True)
def _should_wake(n_pend, first_arr, now, burst, qw, tmax):
    if n_pend == 0:
        return False
    if not burst:
        return True
    return n_pend >= qw or now >= first_arr + tmax


@njit(cache=True)
def _advance(i, t, mode, mstart, busy, n_pend, pend_head, first_arr,
             acc, cycles, start, nxt, sizes, cap, ts, tw, burst, qw, tmax):
    while True:
        m = mode[i]
        if m == ACTIVE:
            if busy[i] <= t:
                acc[i, ACTIVE] += busy[i] - mstart[i]
                mode[i] = SLEEPING
                mstart[i] = busy[i]
                cycles[i] += 1
            else:
                return
        elif m == SLEEPING:
            end = mstart[i] + ts
            if end > t:
                return
            acc[i, SLEEPING] += ts
            mstart[i] = end
            if _should_wake(n_pend[i], first_arr[i], end, burst, qw, tmax):
                mode[i] = WAKING
            else:
                mode[i] = IDLE
        elif m == IDLE:
            if not (burst and n_pend[i] > 0):
                return
            w = first_arr[i] + tmax
            if w > t:
                return
            acc[i, IDLE] += w - mstart[i]
            mode[i] = WAKING
            mstart[i] = w
        else:
            end = mstart[i] + tw
            if end > t:
                return
            acc[i, WAKING] += tw
            s = end
            k = pend_head[i]
            while k >= 0:
                start[k] = s
                s += 8.0 * sizes[k] / cap[i]
                k = nxt[k]
            busy[i] = s
            n_pend[i] = 0
            pend_head[i] = -1
            mode[i] = ACTIVE
            mstart[i] = end


@njit(cache=True)
def _snapshot(T, mode, mstart, acc, out):
    # accumulators as if the run were closed at time T
    for i in range(acc.shape[0]):
        for j in range(4):
            out[i, j] = acc[i, j]
        out[i, mode[i]] += T - mstart[i]


@njit(cache=True)
def simulate(times, sizes, assign, dynamic, cap, ts, tw, burst, qw, tmax,
             expected_delay, beta, post_enqueue, warmup, horizon):
    """Run the event loop.

    ``assign`` gives the link of each frame for static splits; with
    ``dynamic`` it is filled in by the delay-controlled water-filling rule.
    Returns ``(start, acc_window, cycles_window, backlog_overflow)`` where
    ``start`` is the service start of every frame (NaN if never started).
    """
    n_links = cap.shape[0]
    n = times.shape[0]
    guard_bits = MAX_BACKLOG * 8.0 * (sizes.mean() if n else 0.0)
    start = np.full(n, np.nan)
    nxt = np.full(n, -1, dtype=np.int64)

    mode = np.zeros(n_links, dtype=np.int64)
    mstart = np.zeros(n_links)
    busy = np.zeros(n_links)
    n_pend = np.zeros(n_links, dtype=np.int64)
    pend_bits = np.zeros(n_links)
    pend_head = np.full(n_links, -1, dtype=np.int64)
    tail = np.full(n_links, -1, dtype=np.int64)
    first_arr = np.zeros(n_links)
    acc = np.zeros((n_links, 4))
    cycles = np.zeros(n_links, dtype=np.int64)
    warm_acc = np.zeros((n_links, 4))
    warm_cycles = np.zeros(n_links, dtype=np.int64)
    warm_done = warmup <= 0.0
    q = np.zeros(n_links)
    d_av = 0.0

    for k in range(n):
        t = times[k]
        if not warm_done and t >= warmup:
            for i in range(n_links):
                _advance(i, warmup, mode, mstart, busy, n_pend, pend_head, first_arr,
                         acc, cycles, start, nxt, sizes, cap, ts, tw, burst, qw, tmax)
            _snapshot(warmup, mode, mstart, acc, warm_acc)
            warm_cycles[:] = cycles
            warm_done = True

        if dynamic:
            for i in range(n_links):
                _advance(i, t, mode, mstart, busy, n_pend, pend_head, first_arr,
                         acc, cycles, start, nxt, sizes, cap, ts, tw, burst, qw, tmax)
                if mode[i] == ACTIVE:
                    q[i] = busy[i] - t
                elif n_pend[i] > 0:
                    q[i] = pend_bits[i] / cap[i]
                else:
                    q[i] = 0.0
            c = n_links - 1
            if d_av < expected_delay:
                c = 0
            else:
                for i in range(n_links):
                    if q[i] < expected_delay:
                        c = i
                        break
            assign[k] = c
            if not post_enqueue:
                d_av = beta * q[c] + (1.0 - beta) * d_av
        else:
            c = assign[k]
            _advance(c, t, mode, mstart, busy, n_pend, pend_head, first_arr,
                     acc, cycles, start, nxt, sizes, cap, ts, tw, burst, qw, tmax)

        if tail[c] >= 0:
            nxt[tail[c]] = k
        tail[c] = k

        fb = 8.0 * sizes[k]
        b = fb / cap[c]
        if mode[c] == ACTIVE:
            start[k] = busy[c]
            busy[c] += b
            if (busy[c] - t) * cap[c] > guard_bits:
                return start, acc, cycles, True
        else:
            if n_pend[c] == 0:
                first_arr[c] = t
                pend_head[c] = k
                pend_bits[c] = 0.0
            n_pend[c] += 1
            pend_bits[c] += fb
            if pend_bits[c] > guard_bits:
                return start, acc, cycles, True
            if mode[c] == IDLE and _should_wake(n_pend[c], first_arr[c], t, burst, qw, tmax):
                acc[c, IDLE] += t - mstart[c]
                mode[c] = WAKING
                mstart[c] = t
        if dynamic and post_enqueue:
            if mode[c] == ACTIVE:
                qc = busy[c] - t
            else:
                qc = pend_bits[c] / cap[c] if n_pend[c] > 0 else 0.0
            d_av = beta * qc + (1.0 - beta) * d_av

    if not warm_done:
        for i in range(n_links):
            _advance(i, warmup, mode, mstart, busy, n_pend, pend_head, first_arr,
                     acc, cycles, start, nxt, sizes, cap, ts, tw, burst, qw, tmax)
        _snapshot(warmup, mode, mstart, acc, warm_acc)
        warm_cycles[:] = cycles
    for i in range(n_links):
        _advance(i, horizon, mode, mstart, busy, n_pend, pend_head, first_arr,
                 acc, cycles, start, nxt, sizes, cap, ts, tw, burst, qw, tmax)
    final = np.zeros((n_links, 4))
    _snapshot(horizon, mode, mstart, acc, final)
    return start, final - warm_acc, cycles - warm_cycles, False


@njit(cache=True)
def tally(times, sizes, assign, start, cap, warmup, horizon):
    """Per-link byte and delay totals of a finished run.

    Returns ``(offered, transmitted, carried_window, offered_window,
    wait_sum, wait_count)``; byte totals cover the whole run, ``*_window``
    only ``[warmup, horizon]``.
    """
    n_links = cap.shape[0]
    offered = np.zeros(n_links, dtype=np.int64)
    sent = np.zeros(n_links, dtype=np.int64)
    carried = np.zeros(n_links, dtype=np.int64)
    offered_w = np.zeros(n_links, dtype=np.int64)
    wait_sum = np.zeros(n_links)
    wait_n = np.zeros(n_links, dtype=np.int64)
    for k in range(times.shape[0]):
        i = assign[k]
        s = sizes[k]
        offered[i] += s
        t = times[k]
        if t >= warmup:
            offered_w[i] += s
        st = start[k]
        if np.isnan(st):
            continue
        dep = st + 8.0 * s / cap[i]
        if dep <= horizon:
            sent[i] += s
            if dep >= warmup:
                carried[i] += s
        if t >= warmup and st <= horizon:
            wait_sum[i] += st - t
            wait_n[i] += 1
    return offered, sent, carried, offered_w, wait_sum, wait_n
