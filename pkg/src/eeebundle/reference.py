"""Plain-Python discrete-event simulator used to cross-check the compiled one.

Every mode change and departure is an explicit event in one heap shared by
all links; arrivals sort after other events at equal timestamps. It is slow
and meant for streams of a few thousand frames.
"""

from __future__ import annotations

import heapq
import itertools

import numpy as np

from .allocation import BundleSpec
from .bundlesim import DispatcherConfig, DispatcherState, dispatch_frame
from .linksim import EnergyAccumulator, LinkState, Mode, governor_wake_decision
from .model import GovernorSpec
from .traffic import TraceStream

_EVENT, _ARRIVAL = 0, 1


class _Link:
    def __init__(self, index, capacity, params, gov, push):
        self.index = index
        self.capacity = capacity
        self.params = params
        self.gov = gov
        self.push = push
        self.state = LinkState()
        self.acc = EnergyAccumulator()
        self.serving = None  # (frame id, size, departure time)
        self.timer_token = 0

    def _enter(self, mode, now, schedule=True):
        spent = now - self.state.mode_entered_at
        if self.state.mode is Mode.ACTIVE:
            self.acc.active_time += spent
        elif self.state.mode is Mode.SLEEPING:
            self.acc.sleeping_time += spent
        elif self.state.mode is Mode.IDLE:
            self.acc.idle_time += spent
        else:
            self.acc.waking_time += spent
        self.state.mode = mode
        self.state.mode_entered_at = now
        if not schedule:
            return
        if mode is Mode.SLEEPING:
            self.acc.sleep_cycles += 1
            self.push(now + self.params.ts, self, "sleep_done")
        elif mode is Mode.WAKING:
            self.push(now + self.params.tw, self, "wake_done")

    def start(self):
        # active with an empty queue at t = 0: fall asleep immediately
        self._enter(Mode.SLEEPING, 0.0)

    def queue_delay(self, now):
        bits = 8.0 * self.state.backlog_bytes
        if self.serving is not None:
            bits -= 8.0 * self.serving[1]
            bits += (self.serving[2] - now) * self.capacity
        return bits / self.capacity

    def arrive(self, now, fid, size, starts):
        st = self.state
        if not st.queue and self.serving is None:
            st.coalesce_first_arrival = now
        st.queue.append((fid, size, now))
        st.backlog_bytes += size
        if st.mode is Mode.IDLE:
            if governor_wake_decision(st, now, self.gov):
                self._enter(Mode.WAKING, now)
            elif self.gov.is_burst and len(st.queue) == 1:
                self.timer_token += 1
                self.push(now + self.gov.tmax, self, ("timer", self.timer_token))
        elif st.mode is Mode.ACTIVE and self.serving is None:
            self._serve(now, starts)

    def _serve(self, now, starts):
        fid, size, _ = self.state.queue.popleft()
        starts[fid] = now
        self.serving = (fid, size, now + 8.0 * size / self.capacity)
        self.push(self.serving[2], self, "departure")

    def handle(self, now, what, starts):
        st = self.state
        if what == "sleep_done":
            self._enter(Mode.IDLE, now)
            if governor_wake_decision(st, now, self.gov):
                self._enter(Mode.WAKING, now)
            elif self.gov.is_burst and st.queue:
                self.timer_token += 1
                wake_at = st.coalesce_first_arrival + self.gov.tmax
                self.push(wake_at, self, ("timer", self.timer_token))
        elif what == "wake_done":
            self._enter(Mode.ACTIVE, now)
            self._serve(now, starts)
        elif what == "departure":
            st.backlog_bytes -= self.serving[1]
            self.serving = None
            if st.queue:
                self._serve(now, starts)
            else:
                st.coalesce_first_arrival = None
                self._enter(Mode.SLEEPING, now)
        elif isinstance(what, tuple) and what[1] == self.timer_token:
            if st.mode is Mode.IDLE and governor_wake_decision(st, now, self.gov):
                self._enter(Mode.WAKING, now)

    def close(self, horizon):
        self._enter(self.state.mode, horizon, schedule=False)


def simulate_reference(stream: TraceStream, bundle: BundleSpec, gov: GovernorSpec,
                       assign=None, config: DispatcherConfig | None = None,
                       duration: float | None = None):
    """Run the heap-based simulator.

    Pass either a per-frame ``assign`` array (static split, indices in the
    bundle's sorted order) or a dynamic ``config``. Returns
    ``(starts, assign, accumulators)`` with accumulators in sorted order.
    """
    horizon = stream.duration if duration is None else duration
    caps = bundle.capacities[bundle.order]
    heap = []
    seq = itertools.count()

    def push(t, link, what):
        heapq.heappush(heap, (t, _EVENT, next(seq), link, what))

    links = [_Link(i, c, bundle.params, gov, push) for i, c in enumerate(caps)]
    for lk in links:
        lk.start()
    n = len(stream)
    starts = np.full(n, np.nan)
    chosen = np.zeros(n, dtype=np.int64)
    dstate = DispatcherState([0.0] * len(links))
    for k, t in enumerate(stream.timestamps.tolist()):
        heapq.heappush(heap, (t, _ARRIVAL, next(seq), None, k))

    while heap and heap[0][0] <= horizon:
        t, kind, _, link, what = heapq.heappop(heap)
        if kind == _EVENT:
            link.handle(t, what, starts)
            continue
        k = what
        if config is None:
            c = int(assign[k])
        else:
            dstate.queue_delays = [lk.queue_delay(t) for lk in links]
            c = dispatch_frame(dstate, config)
        chosen[k] = c
        links[c].arrive(t, k, int(stream.sizes[k]), starts)
        if config is not None and config.post_enqueue:
            q = links[c].queue_delay(t)
            dstate.d_av = config.beta * q + (1 - config.beta) * dstate.d_av
    for lk in links:
        lk.close(horizon)
    return starts, chosen, [lk.acc for lk in links]
