"""Run configuration: documented defaults, presets, and the config-file format.

A run is described by one RunConfig.  Values come from three layers with
increasing precedence: a named preset, a flat ``key = value`` config
file, and command-line flags.  The file format is one assignment per
line, ``#`` comments, lists comma-separated, grids optionally in
``start:stop:step`` form, and ``none`` for optional values.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sdnscp.scenarios import SIGNALING_KINDS, ScenarioKind


class ConfigError(ValueError):
    """A config file or merged configuration is invalid."""


class RunConfig(BaseModel):
    """Fully merged parameters of one invocation."""

    model_config = ConfigDict(extra="forbid")

    scenarios: list[ScenarioKind] = Field(min_length=1)
    rates: list[float] = []
    connections: list[int] = []
    sim_duration_s: float = 3600.0
    attach_span_s: float = 60.0
    cache_validity_s: Optional[float] = 10.0
    hard_timeout_s: Optional[float] = 20.0
    idle_timeout_s: Optional[float] = None
    hop_us: int = 1000
    amf_count: int = 1
    ausf_count: int = 1
    smf_count: int = 1
    ausf_loads: list[int] = []
    smf_loads: list[int] = []
    policy: str = "round-robin"
    overload_threshold: int = 90
    authorization: list[str] = ["AMF:AUSF", "AMF:SMF"]
    binding_required: bool = False
    model_nrf_traffic: bool = True
    controller_preseeded: bool = True
    arrival: str = "deterministic"
    seed: int = 0
    # calibration anchors for the testbed-comparison sweeps (requests/s)
    direct_rps: float = 31000.0
    sdn_data_rps: float = 30000.0
    scp_independent_rps: float = 10000.0
    scp_colocated_rps: float = 5000.0
    through_app_rps: float = 11000.0
    warmup_s: float = 0.1
    window_s: float = 0.25
    output: Optional[str] = None
    format: str = "csv"
    trace: bool = False

    @field_validator("sim_duration_s", "attach_span_s", "warmup_s", "window_s")
    @classmethod
    def _positive_duration(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("durations must be positive")
        return v

    @field_validator("cache_validity_s", "hard_timeout_s", "idle_timeout_s")
    @classmethod
    def _positive_or_none(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v <= 0:
            raise ValueError("timeouts must be positive (or none to disable)")
        return v

    @field_validator("rates")
    @classmethod
    def _rates_non_negative(cls, v: list[float]) -> list[float]:
        if any(r < 0 for r in v):
            raise ValueError("rates must be non-negative")
        return v

    @field_validator("connections")
    @classmethod
    def _connections_positive(cls, v: list[int]) -> list[int]:
        if any(c <= 0 for c in v):
            raise ValueError("connection counts must be positive")
        return v

    @field_validator("hop_us", "amf_count", "ausf_count", "smf_count")
    @classmethod
    def _positive_int(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @field_validator("policy")
    @classmethod
    def _known_policy(cls, v: str) -> str:
        if v not in ("round-robin", "least-load"):
            raise ValueError("policy must be round-robin or least-load")
        return v

    @field_validator("overload_threshold")
    @classmethod
    def _threshold_range(cls, v: int) -> int:
        if not 1 <= v <= 100:
            raise ValueError("overload threshold must be in 1..100")
        return v

    @field_validator("arrival")
    @classmethod
    def _known_arrival(cls, v: str) -> str:
        if v not in ("deterministic", "poisson"):
            raise ValueError("arrival must be deterministic or poisson")
        return v

    @field_validator("format")
    @classmethod
    def _known_format(cls, v: str) -> str:
        if v not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        return v

    @model_validator(mode="after")
    def _span_inside_duration(self) -> "RunConfig":
        has_signaling = any(s in SIGNALING_KINDS for s in self.scenarios)
        if has_signaling and self.rates and self.attach_span_s >= self.sim_duration_s:
            raise ValueError("attach span must be shorter than the simulated duration")
        return self


#: Named parameterizations matching the published experiments.
PRESETS: dict[str, dict] = {
    # fraction of control-plane packets through the app vs attachment rate
    "fig8": {
        "scenarios": ["sdn-reactive"],
        "rates": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        "sim_duration_s": 3600.0,
        "attach_span_s": 60.0,
        "cache_validity_s": 10.0,
        "hard_timeout_s": 20.0,
        "arrival": "deterministic",
    },
    # throughput of the three app-forwarding variants vs parallel connections
    "fig7": {
        "scenarios": ["sdn-proactive", "sdn-consumer-forwarded", "sdn-both-forwarded"],
        "connections": list(range(1, 100, 2)),
    },
}


def preset(name: str) -> dict:
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset: {name!r} (available: {', '.join(sorted(PRESETS))})")


# --- config file parsing --------------------------------------------------------


def _grid_int(value: str) -> list[int]:
    """``1:99:2`` range syntax, or a comma-separated list."""
    if ":" in value:
        parts = value.split(":")
        if len(parts) != 3:
            raise ValueError("range syntax is start:stop:step")
        start, stop, step = (int(p.strip()) for p in parts)
        if step <= 0:
            raise ValueError("range step must be positive")
        return list(range(start, stop + 1, step))
    return [int(p.strip()) for p in value.split(",") if p.strip()]


def _grid_float(value: str) -> list[float]:
    if ":" in value:
        start, stop, step = (float(p.strip()) for p in value.split(":"))
        if step <= 0:
            raise ValueError("range step must be positive")
        out, x = [], start
        while x <= stop + 1e-9:
            out.append(round(x, 9))
            x += step
        return out
    return [float(p.strip()) for p in value.split(",") if p.strip()]


def _opt_float(value: str) -> Optional[float]:
    if value.lower() in ("none", "null", ""):
        return None
    return float(value)


def _boolean(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _strings(value: str) -> list[str]:
    return [p.strip() for p in value.split(",") if p.strip()]


def _ints(value: str) -> list[int]:
    return [int(p.strip()) for p in value.split(",") if p.strip()]


_FILE_KEYS: dict[str, Callable[[str], object]] = {
    "scenarios": _strings,
    "rates": _grid_float,
    "connections": _grid_int,
    "sim_duration_s": float,
    "attach_span_s": float,
    "cache_validity_s": _opt_float,
    "hard_timeout_s": _opt_float,
    "idle_timeout_s": _opt_float,
    "hop_us": int,
    "amf_count": int,
    "ausf_count": int,
    "smf_count": int,
    "ausf_loads": _ints,
    "smf_loads": _ints,
    "policy": str,
    "overload_threshold": int,
    "authorization": _strings,
    "binding_required": _boolean,
    "model_nrf_traffic": _boolean,
    "controller_preseeded": _boolean,
    "arrival": str,
    "seed": int,
    "direct_rps": float,
    "sdn_data_rps": float,
    "scp_independent_rps": float,
    "scp_colocated_rps": float,
    "through_app_rps": float,
    "warmup_s": float,
    "window_s": float,
    "output": str,
    "format": str,
    "trace": _boolean,
}


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` file to a dict of RunConfig fields.

    Rejects unknown and duplicate keys, with the offending line number in
    the diagnostic.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.partition("#")[0].strip()
        converter = _FILE_KEYS.get(key)
        if converter is None:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            out[key] = converter(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}")
    return out


def merge_config(
    preset_values: Optional[dict] = None,
    file_values: Optional[dict] = None,
    flag_values: Optional[dict] = None,
) -> RunConfig:
    """Layer the three sources (flags win over file, file over preset)."""
    merged: dict = {}
    for layer in (preset_values, file_values, flag_values):
        if layer:
            merged.update({k: v for k, v in layer.items() if v is not None})
    if not merged.get("scenarios"):
        raise ConfigError("no scenario given: use --scenario, --preset, or a config file")
    try:
        return RunConfig(**merged)
    except Exception as exc:
        raise ConfigError(str(exc))
