"""Command-line entry point.

Precedence for every parameter: built-in defaults, then ``--preset``,
then ``--config <file>``, then explicit flags.  Exit codes: 0 success,
1 configuration error, 2 runtime error (partial rows are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from sdnscp.config import ConfigError, PRESETS, merge_config, parse_config_file, preset
from sdnscp.runner import ResultRow, emit, run_experiment
from sdnscp.scenarios import ScenarioKind

_SCENARIO_VALUES = [kind.value for kind in ScenarioKind]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdnscp",
        description=(
            "Simulate 5G core control-plane signaling with an SDN-application "
            "service mesh and reproduce its published measurements."
        ),
    )
    parser.add_argument(
        "--scenario",
        action="append",
        choices=_SCENARIO_VALUES,
        help="scenario to run (repeatable)",
    )
    parser.add_argument(
        "--rate",
        action="append",
        type=float,
        help="user attachment rate per second (repeatable, signaling scenarios)",
    )
    parser.add_argument(
        "--connections",
        help="parallel-connection grid for sweep scenarios: start:stop:step or a comma list",
    )
    parser.add_argument("--duration", type=float, help="simulated seconds per point")
    parser.add_argument("--attach-span", type=float, help="seconds a user stays attached")
    parser.add_argument(
        "--validity", help="discovery cache validity in seconds, or 'none' to never expire"
    )
    parser.add_argument(
        "--hard-timeout", help="flow rule hard timeout in seconds, or 'none' to disable"
    )
    parser.add_argument(
        "--idle-timeout", help="flow rule idle timeout in seconds, or 'none' to disable"
    )
    parser.add_argument("--policy", choices=["round-robin", "least-load"])
    parser.add_argument("--overload-threshold", type=int, help="load above which instances are skipped")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named parameterization")
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--output", help="write results here instead of standard output")
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument(
        "--trace",
        action="store_true",
        default=None,
        help="record per-run controller events to <output>.trace (or standard error)",
    )
    parser.add_argument("--amf-count", type=int)
    parser.add_argument("--ausf-count", type=int)
    parser.add_argument("--smf-count", type=int)
    parser.add_argument("--arrival", choices=["deterministic", "poisson"])
    return parser


def _optional_seconds(flag: str, value: Optional[str]) -> Optional[float]:
    if value is None or value.lower() in ("none", "null"):
        return None
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{flag} expects a number of seconds or 'none', got {value!r}")


def _flag_values(args: argparse.Namespace) -> dict:
    from sdnscp.config import _grid_int  # the same grid syntax as config files

    values: dict = {
        "scenarios": args.scenario,
        "rates": args.rate,
        "sim_duration_s": args.duration,
        "attach_span_s": args.attach_span,
        "policy": args.policy,
        "overload_threshold": args.overload_threshold,
        "seed": args.seed,
        "output": args.output,
        "format": args.format,
        "trace": args.trace,
        "amf_count": args.amf_count,
        "ausf_count": args.ausf_count,
        "smf_count": args.smf_count,
        "arrival": args.arrival,
    }
    if args.connections is not None:
        try:
            values["connections"] = _grid_int(args.connections)
        except ValueError as exc:
            raise ConfigError(f"--connections: {exc}")
    if args.validity is not None:
        values["cache_validity_s"] = _optional_seconds("--validity", args.validity)
        if values["cache_validity_s"] is None:
            del values["cache_validity_s"]
            values["_validity_none"] = True
    if args.hard_timeout is not None:
        values["hard_timeout_s"] = _optional_seconds("--hard-timeout", args.hard_timeout)
        if values["hard_timeout_s"] is None:
            del values["hard_timeout_s"]
            values["_hard_none"] = True
    if args.idle_timeout is not None:
        values["idle_timeout_s"] = _optional_seconds("--idle-timeout", args.idle_timeout)
        if values["idle_timeout_s"] is None:
            del values["idle_timeout_s"]
            values["_idle_none"] = True
    return values


def _summarize(row: ResultRow) -> str:
    point = (
        f"rate={row.rate_per_s:g}/s" if row.rate_per_s is not None else f"conn={row.connections}"
    )
    parts = [f"{row.scenario:<22s} {point:<12s} throughput={row.throughput_rps:.6g}/s"]
    if row.pct_through_app is not None:
        parts.append(f"through-app={100 * row.pct_through_app:.3f}%")
    parts.append(f"p95={row.p95_ms:.3g}ms")
    if row.failed_flows:
        parts.append(f"failed={row.failed_flows}")
    return "  ".join(parts)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        preset_values = preset(args.preset) if args.preset else None
        file_values = parse_config_file(args.config) if args.config else None
        flag_values = _flag_values(args)
        # explicit 'none' on optional timeouts must override lower layers
        overrides = {
            "_validity_none": "cache_validity_s",
            "_hard_none": "hard_timeout_s",
            "_idle_none": "idle_timeout_s",
        }
        forced_none = [field for key, field in overrides.items() if flag_values.pop(key, False)]
        config = merge_config(preset_values, file_values, flag_values)
        if forced_none:
            config = config.model_copy(update={field: None for field in forced_none})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    traces: list[dict] = []

    def trace_sink(scenario: str, rate: float, events) -> None:
        traces.append(
            {
                "scenario": scenario,
                "rate_per_s": rate,
                "events": [
                    {"time": e.time, "kind": e.kind, **e.detail} for e in events
                ],
            }
        )

    rows: list[ResultRow] = []
    try:
        run_experiment(
            config,
            on_row=rows.append,
            trace_sink=trace_sink if config.trace else None,
        )
    except Exception as exc:
        if rows:
            emit(rows, config.format, config.output)
        print(f"error: {exc}", file=sys.stderr)
        return 2

    emit(rows, config.format, config.output)
    if not rows:
        print(
            "note: no measurement points (signaling scenarios need --rate, "
            "sweeps need --connections)",
            file=sys.stderr,
        )
    for row in rows:
        print(_summarize(row), file=sys.stderr)
    if config.trace and traces:
        trace_text = "\n".join(json.dumps(t) for t in traces) + "\n"
        if config.output:
            with open(config.output + ".trace", "w") as fh:
                fh.write(trace_text)
        else:
            sys.stderr.write(trace_text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
