"""Experiment configuration: a flat ``key = value`` file plus overrides.

Lists are comma separated. Blank lines and ``#`` comments are ignored.
Unknown keys are an error so that typos do not silently fall back to
defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace

from .model import GovernorSpec, LinkParams
from .traffic import TraceStream, load_trace, scale_trace

OUTPUT_ENV = "EEEBUNDLE_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _words(text):
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    links: tuple[int, ...] = (2,)
    capacity: float = 10e9
    ts: float = 2.88e-6
    tw: float = 4.48e-6
    sigma_off: float = 0.1
    governor: str = "frame"
    qw: int = 20
    tmax: float = 100e-6
    traffic: str = "poisson"
    pkt_size: int = 1000
    distribution: str = "poisson"
    pareto_shape: float = 2.5
    trace: str = ""
    scale: float = 1.0
    copies: int = 1
    strategies: tuple[str, ...] = ("equitable", "waterfill", "capped", "dynamic")
    expected_delay: float = 10e-6
    targets: tuple[float, ...] = (5e-6, 10e-6, 20e-6, 50e-6)
    beta: float = 0.1
    post_enqueue: bool = False
    max_utilization: float = 0.9
    split: str = "round_robin"
    loads: tuple[float, ...] = ()
    shares: tuple[float, ...] = ()
    n_shares: int = 5
    pkt_sizes: tuple[int, ...] = (64, 512, 1000, 1500, 9000)
    rates: tuple[float, ...] = ()
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    duration: float = 10.0
    warmup: float = 1.0
    output: str = ""
    _trace_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def validate(self) -> "ExperimentConfig":
        if not self.links or any(n < 1 for n in self.links):
            raise ConfigError("links must list positive link counts")
        if self.governor not in ("frame", "burst"):
            raise ConfigError(f"governor must be 'frame' or 'burst', got {self.governor!r}")
        if self.traffic not in ("poisson", "pareto", "trace"):
            raise ConfigError(f"traffic must be poisson, pareto or trace, got {self.traffic!r}")
        if self.traffic == "trace":
            if not self.trace:
                raise ConfigError("traffic = trace needs a trace path")
            if not os.path.isfile(self.trace):
                raise ConfigError(f"trace file not found: {self.trace}")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        if not 0 <= self.warmup < self.duration:
            raise ConfigError("warmup must lie in [0, duration)")
        if self.distribution not in ("poisson", "general"):
            raise ConfigError("distribution must be poisson or general")
        if self.split not in ("round_robin", "random"):
            raise ConfigError("split must be round_robin or random")
        if self.n_shares < 1:
            raise ConfigError("n_shares must be at least 1")
        try:
            self.link_params()
            self.governor_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def link_params(self) -> LinkParams:
        return LinkParams(self.capacity, self.ts, self.tw, self.sigma_off)

    def governor_spec(self) -> GovernorSpec:
        if self.governor == "burst":
            return GovernorSpec.burst(self.qw, self.tmax)
        return GovernorSpec.frame()

    def load_stream(self) -> TraceStream:
        if "stream" not in self._trace_cache:
            stream = load_trace(self.trace)
            self._trace_cache["stream"] = scale_trace(stream, self.scale, self.copies)
        return self._trace_cache["stream"]

    def output_path(self, default_name: str) -> str:
        if self.output:
            return self.output
        return os.path.join(os.environ.get(OUTPUT_ENV, "."), default_name)


_PARSERS = {}
for _f in fields(ExperimentConfig):
    if _f.name.startswith("_"):
        continue
    _PARSERS[_f.name] = {
        "tuple[int, ...]": _ints, "tuple[float, ...]": _floats, "tuple[str, ...]": _words,
        "bool": _bool, "int": int, "float": float, "str": str,
    }[_f.type]


def parse_value(key: str, text):
    if key not in _PARSERS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return _PARSERS[key](text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def read_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    out = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in text.split("=", 1))
        key = key.replace("-", "_")
        out[key] = parse_value(key, value)
    return out


def build_config(base: ExperimentConfig, path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then file values, then explicit overrides."""
    values = {}
    if path:
        values.update(read_config_file(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = parse_value(key, value) if isinstance(value, str) else value
    return replace(base, **values).validate()
