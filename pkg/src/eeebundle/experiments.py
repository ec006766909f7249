"""Experiment recipes: sweeps over loads, shares, strategies and delay targets.

Every recipe returns a list of flat dict rows in a deterministic order, ready
for ``write_csv``. Loads are expressed as fractions of one link's capacity
for the two-link share sweep and as fractions of the bundle capacity
elsewhere.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .allocation import AllocationVector, BundleSpec, allocate
from .bundlesim import DispatcherConfig, Strategy, run_allocation, run_bundle
from .model import (CONCAVITY_VARIANTS, Distribution, GovernorSpec, LinkParams, TrafficSpec,
                    bundle_energy, concavity_grid, link_energy, rho_star, toff)
from .traffic import TraceStream, gen_pareto, gen_poisson

SIG_DIGITS = 9
TABLE_RATES = (6.21e9, 12.60e9, 18.81e9, 25.08e9, 31.40e9)


def fmt(value) -> str:
    """Text form used in every CSV cell: 9 significant digits for reals."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), f".{SIG_DIGITS}g")
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(fmt(v) for v in value)
    return str(value)


def write_csv(rows: Sequence[dict], path=None, columns: Sequence[str] | None = None) -> str:
    """Write ``rows`` as CSV (to ``path`` if given) and return the text."""
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])
    text = buf.getvalue()
    if path is not None:
        parent = os.path.dirname(os.fspath(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
    return text


def _parse_cell(text: str):
    if ";" in text:
        return [_parse_cell(t) for t in text.split(";")]
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_csv(path) -> list[dict]:
    """Rows of a file written by ``write_csv``; numbers come back as int/float."""
    with open(path, encoding="ascii", newline="") as fh:
        return [{k: _parse_cell(v) for k, v in row.items()} for row in csv.DictReader(fh)]


@dataclass(frozen=True)
class TrafficSource:
    """How to obtain a stream at a given offered rate.

    ``kind`` is ``poisson``, ``pareto`` or ``trace``. A trace ignores the
    requested rate; its own (scaled) rate is used instead.
    """

    kind: str = "poisson"
    pkt_size: int = 1000
    pareto_shape: float = 2.5
    trace: TraceStream | None = None

    def stream(self, rate: float, duration: float, seed: int) -> TraceStream:
        if self.kind == "trace":
            if self.trace is None:
                raise ValueError("trace traffic needs a loaded trace")
            return self.trace
        if rate <= 0:
            return TraceStream.empty(duration)
        if self.kind == "poisson":
            return gen_poisson(rate, self.pkt_size, duration, seed)
        if self.kind == "pareto":
            return gen_pareto(rate, self.pkt_size, self.pareto_shape, duration, seed)
        raise ValueError(f"unknown traffic kind {self.kind!r}")

    @property
    def distribution(self) -> Distribution:
        return Distribution.POISSON if self.kind == "poisson" else Distribution.GENERAL


def _pkt_for_model(source: TrafficSource, stream: TraceStream | None = None) -> float:
    if stream is not None and len(stream):
        return stream.mean_size
    return float(source.pkt_size)


# --- analytic ----------------------------------------------------------------

def model_rows(gov: GovernorSpec, params: LinkParams, loads: Iterable[float],
               pkt_sizes: Iterable[int], distribution=Distribution.POISSON) -> list[dict]:
    """T_off and E(rho) on a (pkt, rho) grid; burst rows carry the regime used."""
    rows = []
    for pkt in pkt_sizes:
        mu = params.service_rate(pkt)
        for rho in loads:
            spec = TrafficSpec(mu, float(rho), distribution)
            if gov.is_burst:
                regime = "low" if rho < rho_star(gov, spec) else "high"
            else:
                regime = "frame"
            t_off = float("inf") if rho == 0 else toff(spec, gov, params)
            rows.append({"governor": gov.kind.value, "distribution": distribution.value,
                         "pkt_size": int(pkt), "load": float(rho), "regime": regime,
                         "toff": t_off, "energy": link_energy(spec, gov, params)})
    return rows


def concavity_rows(params: LinkParams, pkt_sizes: Sequence[int], loads: Sequence[float],
                   gov: GovernorSpec | None = None,
                   variants: Sequence[str] = CONCAVITY_VARIANTS) -> list[dict]:
    rows = []
    for variant in variants:
        grid = concavity_grid(variant, params, pkt_sizes, loads, gov)
        for i, pkt in enumerate(pkt_sizes):
            for j, rho in enumerate(loads):
                rows.append({"variant": variant, "pkt_size": int(pkt), "load": float(rho),
                             "margin": float(grid[i, j]), "positive": bool(grid[i, j] > 0)})
    return rows


def table_rows(rates: Sequence[float] = TABLE_RATES, n_links: int = 4,
               params: LinkParams | None = None, max_utilization: float = 0.9,
               strategies: Sequence[str] = ("equitable", "capped")) -> list[dict]:
    """Per-link offered rates (Gb/s) of the static strategies for each bundle rate."""
    bundle = BundleSpec.homogeneous(n_links, params, max_utilization)
    rows = []
    for rate in rates:
        for name in strategies:
            alloc = allocate(name, bundle, rate)
            row = {"bundle_gbps": rate / 1e9, "strategy": name}
            row.update({f"link{i + 1}": r / 1e9 for i, r in enumerate(alloc.rates)})
            rows.append(row)
    return rows


def dynamic_table_rows(rates: Sequence[float], gov: GovernorSpec, source: TrafficSource,
                       n_links: int = 4, params: LinkParams | None = None,
                       expected_delay: float = 10e-6, duration: float = 10.0,
                       warmup: float = 1.0, seed: int = 1) -> list[dict]:
    """Carried rates (Gb/s) per link measured under the dynamic dispatcher."""
    bundle = BundleSpec.homogeneous(n_links, params)
    config = DispatcherConfig(Strategy.DYNAMIC_WATERFILL, expected_delay)
    rows = []
    for rate in rates:
        stream = source.stream(rate, duration, seed)
        report = run_bundle(stream, bundle, gov, config, duration, warmup)
        row = {"bundle_gbps": rate / 1e9, "strategy": f"dynamic-{gov.kind.value}"}
        row.update({f"link{i + 1}": c / 1e9 for i, c in enumerate(report.per_link_carried)})
        rows.append(row)
    return rows


def format_table(rows: Sequence[dict], digits: int = 2) -> str:
    """Plain-text rendering of table rows."""
    links = sorted((k for k in rows[0] if k.startswith("link")), key=lambda k: int(k[4:]))
    head = ["Bundle", "Strategy"] + [f"Link #{k[4:]}" for k in links]
    body = [[f"{r['bundle_gbps']:.{digits}f}", r["strategy"]]
            + [f"{r[k]:.{digits}f}" for k in links] for r in rows]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    lines = ["  ".join(x.rjust(w) for x, w in zip(line, widths)) for line in [head] + body]
    return "\n".join(lines) + "\n"


# --- simulation sweeps -------------------------------------------------------

def share_points(load: float, n: int) -> np.ndarray:
    """Second-link loads from the water-fill corner to the equal split."""
    lo = max(0.0, load - 1.0)
    hi = load / 2.0
    if n == 1:
        return np.array([lo])
    return np.linspace(lo, hi, n)


def share_sweep(loads: Sequence[float], seeds: Sequence[int], gov: GovernorSpec,
                source: TrafficSource | None = None, params: LinkParams | None = None,
                n_shares: int = 4, shares: Sequence[float] | None = None,
                duration: float = 10.0, warmup: float = 1.0,
                progress: Callable[[str], None] | None = None) -> list[dict]:
    """Two-link bundle energy versus the load placed on the second link.

    ``loads`` are aggregate loads in units of one link's capacity. Each seed
    draws one aggregate stream per load, reused for every share point and
    split at random. Rows hold the mean and sample standard deviation over
    seeds and the analytic value.
    """
    source = source or TrafficSource()
    params = params or LinkParams()
    bundle = BundleSpec.homogeneous(2, params)
    cap = params.capacity_bps
    rows = []
    for load in loads:
        if not 0 <= load <= 2:
            raise ValueError(f"aggregate load {load} outside [0, 2] link capacities")
        grid = share_points(load, n_shares) if shares is None else np.asarray(shares, float)
        grid = grid[(grid <= min(load, 1.0) + 1e-12) & (load - grid <= 1.0 + 1e-12)]
        energies = np.empty((len(grid), len(seeds)))
        delays = np.empty_like(energies)
        pkt = float(source.pkt_size)
        for j, seed in enumerate(seeds):
            stream = source.stream(load * cap, duration, seed)
            pkt = _pkt_for_model(source, stream)
            for i, x2 in enumerate(grid):
                rates = (min(load - x2, 1.0) * cap, x2 * cap)
                alloc = AllocationVector(rates, sum(rates), (cap, cap))
                rep = run_allocation(stream, bundle, gov, alloc, duration, warmup,
                                     split="random", seed=[seed, i])
                energies[i, j] = rep.bundle_energy_normalized
                delays[i, j] = rep.mean_delay
            del stream
            if progress:
                progress(f"share-sweep load={load:g} seed={seed} done")
        for i, x2 in enumerate(grid):
            x1 = min(load - x2, 1.0)
            model = bundle_energy([x1 * cap, x2 * cap], gov, params, pkt,
                                  source.distribution).normalized
            std = float(energies[i].std(ddof=1)) if len(seeds) > 1 else 0.0
            rows.append({"load": float(load), "x1": float(x1), "x2": float(x2),
                         "seeds": len(seeds), "energy_mean": float(energies[i].mean()),
                         "energy_std": std, "energy_model": float(model),
                         "delay_mean": float(delays[i].mean())})
    return rows


STRATEGY_NAMES = tuple(s.value for s in Strategy)


def bundle_sweep(link_counts: Sequence[int], loads: Sequence[float], seeds: Sequence[int],
                 gov: GovernorSpec, strategies: Sequence[str] = STRATEGY_NAMES,
                 source: TrafficSource | None = None, params: LinkParams | None = None,
                 expected_delay: float = 10e-6, beta: float = 0.1,
                 max_utilization: float = 0.9, split: str = "round_robin",
                 duration: float = 10.0, warmup: float = 1.0,
                 progress: Callable[[str], None] | None = None) -> list[dict]:
    """One row per (N, load, strategy, seed); loads are fractions of N*C."""
    source = source or TrafficSource()
    params = params or LinkParams()
    rows = []
    for n in link_counts:
        bundle = BundleSpec.homogeneous(n, params, max_utilization)
        for load in loads:
            for seed in seeds:
                stream = source.stream(load * bundle.total_capacity, duration, seed)
                pkt = _pkt_for_model(source, stream)
                for name in strategies:
                    config = DispatcherConfig(name, expected_delay, beta, split=split)
                    rep = run_bundle(stream, bundle, gov, config, duration, warmup, seed=seed)
                    model = float("nan")
                    if config.strategy is not Strategy.DYNAMIC_WATERFILL:
                        offered = 8.0 * stream.total_bytes / duration
                        alloc = allocate(config.static_name, bundle, offered)
                        model = bundle_energy(alloc, gov, params, pkt,
                                              source.distribution).normalized
                    rows.append(_result_row(f"N{n}", name, seed, load, bundle, rep, model))
                del stream
                if progress:
                    progress(f"bundle-sweep N={n} load={load:g} seed={seed} done")
    return rows


def _result_row(exp_id, strategy, seed, load, bundle, rep, model) -> dict:
    return {"experiment": exp_id, "strategy": strategy, "seed": int(seed),
            "load": float(load),
            "link_loads": [c / cap for c, cap in zip(rep.per_link_carried, bundle.capacities)],
            "link_energy": rep.per_link_energy, "energy": rep.bundle_energy_normalized,
            "energy_model": model, "mean_delay": rep.mean_delay}


def delay_sweep(targets: Sequence[float], loads: Sequence[float], seeds: Sequence[int],
                gov: GovernorSpec, n_links: int = 4, source: TrafficSource | None = None,
                params: LinkParams | None = None, beta: float = 0.1,
                post_enqueue: bool = False, duration: float = 10.0, warmup: float = 1.0,
                progress: Callable[[str], None] | None = None) -> list[dict]:
    """Measured delay and bundle energy of the dynamic dispatcher per target delay."""
    source = source or TrafficSource()
    params = params or LinkParams()
    bundle = BundleSpec.homogeneous(n_links, params)
    rows = []
    for load in loads:
        for seed in seeds:
            stream = source.stream(load * bundle.total_capacity, duration, seed)
            for target in targets:
                config = DispatcherConfig(Strategy.DYNAMIC_WATERFILL, target, beta, post_enqueue)
                rep = run_bundle(stream, bundle, gov, config, duration, warmup)
                row = _result_row(f"N{n_links}", "dynamic", seed, load, bundle, rep,
                                  float("nan"))
                del row["energy_model"]
                row["target"] = float(target)
                rows.append(row)
            del stream
            if progress:
                progress(f"delay-sweep load={load:g} seed={seed} done")
    rows.sort(key=lambda r: (r["load"], r["target"], r["seed"]))
    return rows
