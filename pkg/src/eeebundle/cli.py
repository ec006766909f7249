"""Command-line front end.

Every subcommand reads an optional ``--config`` file, applies flag overrides,
writes tidy CSV and prints where it went. Exit status is 0 on success, 1 for
configuration errors and 2 for failures while running.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace

import numpy as np

from . import experiments as ex
from .allocation import BundleSpec, InfeasibleDemand, allocate
from .config import OUTPUT_ENV, ConfigError, ExperimentConfig, build_config
from .model import CONCAVITY_VARIANTS, Distribution, bundle_energy

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

CONCAVITY_PKTS = (64, 128, 256, 512, 1000, 1500, 4500, 9000)

# per-command defaults layered under the config file
DEFAULTS = {
    "model": dict(loads=tuple(np.round(np.arange(0.1, 1.0, 0.1), 10)), pkt_sizes=(1000,)),
    "allocate": dict(links=(4,), rates=ex.TABLE_RATES,
                     strategies=("equitable", "waterfill", "capped")),
    "share-sweep": dict(links=(2,), loads=(0.25, 0.75, 1.25, 1.75), split="random"),
    "bundle-sweep": dict(links=(2, 4, 8), loads=(0.1, 0.3, 0.5, 0.7)),
    "delay-sweep": dict(links=(4,), loads=(0.3, 0.6)),
    "table": dict(links=(4,), rates=ex.TABLE_RATES, strategies=("equitable", "capped"),
                  seeds=(1,)),
    "validate-concavity": dict(loads=tuple(np.round(np.arange(1, 100) / 100, 10)),
                               pkt_sizes=CONCAVITY_PKTS),
}

HELP = {
    "model": "analytic T_off and link energy over a load grid",
    "allocate": "static allocations and their analytic bundle energy",
    "share-sweep": "two-link energy versus the second link's share (simulated and analytic)",
    "bundle-sweep": "bundle energy of each strategy across bundle sizes and loads",
    "delay-sweep": "measured delay and energy of the dynamic dispatcher per target delay",
    "table": "per-link rates of each strategy for a list of bundle rates",
    "validate-concavity": "check the concavity margin on a (packet size x load) grid",
}


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _source(cfg: ExperimentConfig) -> ex.TrafficSource:
    trace = cfg.load_stream() if cfg.traffic == "trace" else None
    return ex.TrafficSource(cfg.traffic, cfg.pkt_size, cfg.pareto_shape, trace)


def _single_links(cfg: ExperimentConfig, name: str) -> int:
    if len(cfg.links) != 1:
        raise ConfigError(f"{name} takes a single link count, got {cfg.links}")
    return cfg.links[0]


def _emit(cfg: ExperimentConfig, rows, name: str) -> None:
    path = cfg.output_path(name)
    ex.write_csv(rows, path)
    _log(f"wrote {len(rows)} rows to {path}")


def cmd_model(cfg: ExperimentConfig) -> int:
    rows = ex.model_rows(cfg.governor_spec(), cfg.link_params(), cfg.loads, cfg.pkt_sizes,
                         Distribution(cfg.distribution))
    _emit(cfg, rows, "model.csv")
    return EXIT_OK


def cmd_allocate(cfg: ExperimentConfig) -> int:
    n = _single_links(cfg, "allocate")
    params = cfg.link_params()
    bundle = BundleSpec.homogeneous(n, params, cfg.max_utilization)
    gov = cfg.governor_spec()
    rows = []
    for demand in cfg.rates:
        for name in cfg.strategies:
            alloc = allocate(name, bundle, demand)
            energy = bundle_energy(alloc, gov, params, cfg.pkt_size, Distribution(cfg.distribution))
            rows.append({"demand": demand, "strategy": name, "rates": alloc.rates,
                         "energy": energy.normalized, "energy_raw": energy.total})
    _emit(cfg, rows, "allocate.csv")
    return EXIT_OK


def cmd_share_sweep(cfg: ExperimentConfig) -> int:
    if cfg.links != (2,):
        raise ConfigError("share-sweep needs exactly 2 links")
    rows = ex.share_sweep(cfg.loads, cfg.seeds, cfg.governor_spec(), _source(cfg),
                          cfg.link_params(), cfg.n_shares, cfg.shares or None,
                          cfg.duration, cfg.warmup, progress=_log)
    _emit(cfg, rows, "share_sweep.csv")
    return EXIT_OK


def cmd_bundle_sweep(cfg: ExperimentConfig) -> int:
    rows = ex.bundle_sweep(cfg.links, cfg.loads, cfg.seeds, cfg.governor_spec(), cfg.strategies,
                           _source(cfg), cfg.link_params(), cfg.expected_delay, cfg.beta,
                           cfg.max_utilization, cfg.split, cfg.duration, cfg.warmup,
                           progress=_log)
    _emit(cfg, rows, "bundle_sweep.csv")
    return EXIT_OK


def cmd_delay_sweep(cfg: ExperimentConfig) -> int:
    n = _single_links(cfg, "delay-sweep")
    rows = ex.delay_sweep(cfg.targets, cfg.loads, cfg.seeds, cfg.governor_spec(), n,
                          _source(cfg), cfg.link_params(), cfg.beta, cfg.post_enqueue,
                          cfg.duration, cfg.warmup, progress=_log)
    _emit(cfg, rows, "delay_sweep.csv")
    return EXIT_OK


def cmd_table(cfg: ExperimentConfig) -> int:
    n = _single_links(cfg, "table")
    static = [s for s in cfg.strategies if s != "dynamic"]
    rows = ex.table_rows(cfg.rates, n, cfg.link_params(), cfg.max_utilization, static)
    if "dynamic" in cfg.strategies:
        rows += ex.dynamic_table_rows(cfg.rates, cfg.governor_spec(), _source(cfg), n,
                                      cfg.link_params(), cfg.expected_delay, cfg.duration,
                                      cfg.warmup, cfg.seeds[0])
        rows.sort(key=lambda r: r["bundle_gbps"])
    print(ex.format_table(rows), end="")
    _emit(cfg, rows, "table.csv")
    return EXIT_OK


def cmd_validate_concavity(cfg: ExperimentConfig) -> int:
    loads = np.asarray(cfg.loads, dtype=float)
    if np.any(loads <= 0) or np.any(loads >= 1):
        raise ConfigError("concavity loads must lie strictly inside (0, 1)")
    rows = ex.concavity_rows(cfg.link_params(), cfg.pkt_sizes, cfg.loads,
                             cfg.governor_spec() if cfg.governor == "burst" else None)
    ok = True
    for variant in CONCAVITY_VARIANTS:
        margins = [r["margin"] for r in rows if r["variant"] == variant]
        good = all(r["positive"] for r in rows if r["variant"] == variant)
        ok &= good
        print(f"{variant:20s} min margin {min(margins):.3e}  {'ok' if good else 'VIOLATED'}")
    _emit(cfg, rows, "concavity.csv")
    return EXIT_OK if ok else EXIT_RUNTIME


COMMANDS = {
    "model": cmd_model,
    "allocate": cmd_allocate,
    "share-sweep": cmd_share_sweep,
    "bundle-sweep": cmd_bundle_sweep,
    "delay-sweep": cmd_delay_sweep,
    "table": cmd_table,
    "validate-concavity": cmd_validate_concavity,
}


class _Parser(argparse.ArgumentParser):
    # bad flags are configuration errors, not argparse's default status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="eeebundle",
        description="Energy model, allocation and simulation of bundled EEE links.",
        epilog=f"Output files default to ${OUTPUT_ENV} (or the current directory).")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        p.add_argument("--config", metavar="PATH", help="flat key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key (repeatable)")
        group = p.add_argument_group("config keys (lists are comma separated)")
        for f in fields(ExperimentConfig):
            if f.name.startswith("_"):
                continue
            group.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None,
                               metavar=f.name.upper())
    return parser


def _config_from_args(args) -> ExperimentConfig:
    base = replace(ExperimentConfig(), **DEFAULTS[args.command])
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip().replace("-", "_")] = value.strip()
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    return build_config(base, args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, InfeasibleDemand) as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        _log(f"error: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
