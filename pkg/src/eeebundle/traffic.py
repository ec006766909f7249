"""Synthetic traffic generators and trace files.

A trace file is plain text, one frame per line, ``timestamp_seconds,size_bytes``.
Blank lines and lines starting with ``#`` are skipped. Files ending in
``.gz`` are read and written gzip-compressed.
"""

from __future__ import annotations

import gzip
import os
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

MIN_FRAME = 64
MAX_FRAME = 9000


class TraceFormatError(ValueError):
    """A trace file line could not be parsed or breaks timestamp order."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class FrameEvent:
    timestamp: float
    size: int

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be non-negative, got {self.timestamp}")
        if not MIN_FRAME <= self.size <= MAX_FRAME:
            raise ValueError(f"frame size {self.size} outside [{MIN_FRAME}, {MAX_FRAME}]")


@dataclass
class TraceStream:
    """Timestamp-ordered frames held as two parallel arrays.

    ``duration`` is the observation window; it defaults to the last
    timestamp and sets the denominator of ``mean_rate``.
    """

    timestamps: np.ndarray
    sizes: np.ndarray
    duration: float | None = None
    size_bounds: tuple[int, int] = field(default=(MIN_FRAME, MAX_FRAME), repr=False)

    def __post_init__(self):
        self.timestamps = np.ascontiguousarray(self.timestamps, dtype=np.float64)
        self.sizes = np.ascontiguousarray(self.sizes, dtype=np.int32)
        if self.timestamps.shape != self.sizes.shape or self.timestamps.ndim != 1:
            raise ValueError("timestamps and sizes must be 1-D arrays of equal length")
        if len(self):
            if self.timestamps[0] < 0:
                raise ValueError("timestamps must be non-negative")
            if np.any(np.diff(self.timestamps) < 0):
                raise ValueError("timestamps must be non-decreasing")
            lo, hi = self.size_bounds
            if self.sizes.min() < lo or self.sizes.max() > hi:
                raise ValueError(f"frame sizes must lie in [{lo}, {hi}]")
        if self.duration is None:
            self.duration = float(self.timestamps[-1]) if len(self) else 0.0
        elif len(self) and self.duration < self.timestamps[-1]:
            raise ValueError("duration is shorter than the last timestamp")

    @classmethod
    def from_events(cls, events, duration: float | None = None) -> "TraceStream":
        events = list(events)
        return cls(np.array([e.timestamp for e in events], dtype=float),
                   np.array([e.size for e in events], dtype=np.int32), duration)

    @classmethod
    def empty(cls, duration: float = 0.0) -> "TraceStream":
        return cls(np.empty(0), np.empty(0, dtype=np.int32), duration)

    def __len__(self) -> int:
        return len(self.timestamps)

    def __iter__(self) -> Iterator[FrameEvent]:
        for t, s in zip(self.timestamps.tolist(), self.sizes.tolist()):
            yield FrameEvent(t, s)

    @property
    def total_bytes(self) -> int:
        return int(self.sizes.sum(dtype=np.int64))

    @property
    def mean_size(self) -> float:
        return float(self.sizes.mean()) if len(self) else 0.0

    @property
    def mean_rate(self) -> float:
        """Offered bits per second over ``duration``."""
        if not self.duration:
            return 0.0
        return 8.0 * self.total_bytes / self.duration

    def window(self, start: float, stop: float) -> "TraceStream":
        """Frames with ``start <= t < stop``, re-based to start at zero."""
        lo, hi = np.searchsorted(self.timestamps, [start, stop], side="left")
        return TraceStream(self.timestamps[lo:hi] - start, self.sizes[lo:hi], stop - start)


def _interarrival_count(mean_gap: float, duration: float) -> int:
    n = duration / mean_gap
    return int(n + 8 * np.sqrt(n) + 16)


def _materialize(gaps_fn, mean_gap: float, pkt_size: int, duration: float) -> TraceStream:
    if duration <= 0:
        return TraceStream.empty(max(duration, 0.0))
    chunks, t0 = [], 0.0
    while True:
        times = np.cumsum(gaps_fn(_interarrival_count(mean_gap, duration - t0)))
        times += t0
        cut = int(np.searchsorted(times, duration, side="left"))
        chunks.append(times[:cut])
        if cut < len(times):
            break
        t0 = float(times[-1])
    times = chunks[0] if len(chunks) == 1 else np.concatenate(chunks)
    return TraceStream(times, np.full(len(times), pkt_size, dtype=np.int32), duration)


def gen_poisson(rate: float, pkt_size: int, duration: float, seed: int) -> TraceStream:
    """Poisson arrivals of fixed-size frames offering ``rate`` bits/s."""
    if not rate > 0:
        raise ValueError("rate must be positive")
    mean_gap = 8.0 * pkt_size / rate
    rng = np.random.default_rng(seed)
    return _materialize(lambda n: rng.exponential(mean_gap, n), mean_gap, pkt_size, duration)


def pareto_scale(shape: float, mean_gap: float) -> float:
    """Pareto minimum ``x_m`` giving mean ``mean_gap`` for shape ``alpha``."""
    return (shape - 1.0) / shape * mean_gap


def gen_pareto(rate: float, pkt_size: int, shape: float, duration: float, seed: int) -> TraceStream:
    """Fixed-size frames with Pareto(alpha, x_m) inter-arrival times.

    ``x_m`` is chosen so that the mean inter-arrival matches ``rate``.
    """
    if shape <= 2:
        raise ValueError(f"Pareto shape must exceed 2 for finite variance, got {shape}")
    if not rate > 0:
        raise ValueError("rate must be positive")
    mean_gap = 8.0 * pkt_size / rate
    xm = pareto_scale(shape, mean_gap)
    rng = np.random.default_rng(seed)
    return _materialize(lambda n: xm * (1.0 + rng.pareto(shape, n)), mean_gap, pkt_size, duration)


def _open(path, mode):
    path = os.fspath(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="ascii")
    return open(path, mode, encoding="ascii")


def load_trace(path, duration: float | None = None) -> TraceStream:
    """Read a ``timestamp,size`` trace file."""
    times, sizes = [], []
    last = -np.inf
    with _open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split(",")
            if len(parts) != 2:
                raise TraceFormatError(f"expected 'timestamp,size', got {text!r}", lineno)
            try:
                t = float(parts[0])
                s = int(parts[1])
            except ValueError:
                raise TraceFormatError(f"cannot parse {text!r}", lineno) from None
            if not np.isfinite(t) or t < 0:
                raise TraceFormatError(f"invalid timestamp {parts[0]!r}", lineno)
            if not MIN_FRAME <= s <= MAX_FRAME:
                raise TraceFormatError(f"frame size {s} outside [{MIN_FRAME}, {MAX_FRAME}]", lineno)
            if t < last:
                raise TraceFormatError(f"timestamp {t} earlier than previous {last}", lineno)
            last = t
            times.append(t)
            sizes.append(s)
    return TraceStream(np.array(times, dtype=float), np.array(sizes, dtype=np.int32), duration)


def save_trace(stream: TraceStream, path) -> None:
    """Write ``stream`` in the trace format; timestamps keep 17 significant digits."""
    with _open(path, "w") as fh:
        for t, s in zip(stream.timestamps.tolist(), stream.sizes.tolist()):
            fh.write(f"{t!r},{s}\n")


def scale_trace(stream: TraceStream, factor: float = 1.0, copies: int = 1) -> TraceStream:
    """Concatenate ``copies`` back-to-back repetitions, then compress time by ``factor``.

    Relative order inside each copy is untouched, so any auto-correlation
    survives; the mean rate is multiplied by ``factor``.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if copies < 1 or int(copies) != copies:
        raise ValueError(f"copies must be a positive integer, got {copies}")
    span = stream.duration
    times = np.concatenate([stream.timestamps + k * span for k in range(copies)])
    sizes = np.tile(stream.sizes, copies)
    return TraceStream(times / factor, sizes, copies * span / factor)
