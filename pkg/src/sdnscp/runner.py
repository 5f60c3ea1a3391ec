"""Drives experiments from a RunConfig and serializes result rows.

Signaling scenarios run once per attachment rate; testbed-comparison
scenarios run a closed-loop sweep over the connection grid.  Rows are
ordered by (scenario, point) so identical configs serialize to
byte-identical CSV.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, fields
from typing import Callable, Optional

from sdnscp.config import RunConfig
from sdnscp.controller import AuthorizationMatrix
from sdnscp.scenarios import (
    Anchors,
    SIGNALING_KINDS,
    ScenarioKind,
    calibrate_costs,
    throughput_latency_sweep,
)
from sdnscp.simulator import US, SignalingConfig, SignalingSimulation

#: app stations per steady-state cycle in the sweep topologies
_APP_VISITS = {
    ScenarioKind.SDN_CONSUMER_FORWARDED: 1,
    ScenarioKind.SDN_BOTH_FORWARDED: 2,
}

#: sweep kinds with no SDN application on any path: app-touch is undefined
_NO_APP_KINDS = (ScenarioKind.SCP_INDEPENDENT, ScenarioKind.SCP_COLOCATED)


@dataclass(frozen=True)
class ResultRow:
    """One measurement point; either rate_per_s or connections is set."""

    scenario: str
    rate_per_s: Optional[float]
    connections: Optional[int]
    total_packets: Optional[int]
    packets_through_app: Optional[int]
    pct_through_app: Optional[float]
    throughput_rps: float
    p50_ms: float
    p95_ms: float
    failed_flows: int
    seed: int


CSV_HEADER = tuple(f.name for f in fields(ResultRow))


def signaling_config(config: RunConfig, scenario: ScenarioKind, rate: float) -> SignalingConfig:
    """Translate merged run parameters into one signaling run's config."""

    def us(seconds: Optional[float]) -> Optional[int]:
        return None if seconds is None else round(seconds * US)

    pairs = AuthorizationMatrix.from_pairs(config.authorization).pairs
    return SignalingConfig(
        scenario=scenario,
        rate_per_s=rate,
        duration_us=us(config.sim_duration_s),
        attach_span_us=us(config.attach_span_s),
        validity_us=us(config.cache_validity_s),
        hard_timeout_us=us(config.hard_timeout_s),
        idle_timeout_us=us(config.idle_timeout_s),
        hop_us=config.hop_us,
        amf_count=config.amf_count,
        ausf_count=config.ausf_count,
        smf_count=config.smf_count,
        ausf_loads=tuple(config.ausf_loads),
        smf_loads=tuple(config.smf_loads),
        policy=config.policy,
        overload_threshold=config.overload_threshold,
        authorization=pairs,
        binding_required=config.binding_required,
        model_nrf_traffic=config.model_nrf_traffic,
        controller_preseeded=config.controller_preseeded,
        arrival=config.arrival,
        seed=config.seed,
        record_events=config.trace,
    )


def _anchors(config: RunConfig) -> Anchors:
    return Anchors(
        direct_rps=config.direct_rps,
        sdn_data_rps=config.sdn_data_rps,
        scp_independent_rps=config.scp_independent_rps,
        scp_colocated_rps=config.scp_colocated_rps,
        through_app_rps=config.through_app_rps,
    )


def _run_signaling_point(
    config: RunConfig,
    scenario: ScenarioKind,
    rate: float,
    trace_sink: Optional[Callable] = None,
) -> ResultRow:
    sim = SignalingSimulation(signaling_config(config, scenario, rate))
    metrics = sim.run()
    if trace_sink is not None and sim.controller is not None:
        trace_sink(scenario.value, rate, sim.controller.events)
    counts = metrics.counts()
    total = counts.total_packets
    through = counts.packets_through_app
    return ResultRow(
        scenario=scenario.value,
        rate_per_s=rate,
        connections=None,
        total_packets=total,
        packets_through_app=through,
        pct_through_app=(through / total) if total else 0.0,
        throughput_rps=counts.delivered_packets / config.sim_duration_s,
        p50_ms=metrics.latency_percentile_ms(0.5),
        p95_ms=metrics.latency_percentile_ms(0.95),
        failed_flows=counts.failed_flows,
        seed=config.seed,
    )


def run_experiment(
    config: RunConfig,
    on_row: Optional[Callable[[ResultRow], None]] = None,
    trace_sink: Optional[Callable] = None,
) -> list[ResultRow]:
    """All result rows for ``config``, in deterministic (scenario, point) order.

    ``on_row`` is invoked as each row completes, so a caller can flush
    partial results if a later point raises.
    """
    # a signaling-capable scenario runs once per rate; every scenario also
    # has a closed-loop topology, so a connection grid sweeps all of them
    work: list[tuple[str, float, ScenarioKind, Optional[float], Optional[int]]] = []
    for scenario in set(config.scenarios):
        if scenario in SIGNALING_KINDS:
            for rate in config.rates:
                work.append((scenario.value, rate, scenario, rate, None))
        for conn in config.connections:
            work.append((scenario.value, float(conn), scenario, None, conn))
    work.sort(key=lambda w: (w[0], w[1]))

    sweep_kinds = sorted(
        {w[2] for w in work if w[4] is not None}, key=lambda s: s.value
    )
    sweep_points: dict[tuple[ScenarioKind, int], ResultRow] = {}
    if sweep_kinds:
        model = calibrate_costs(_anchors(config))
        grid = sorted(set(config.connections))
        for kind in sweep_kinds:
            for point in throughput_latency_sweep(
                kind, grid, model=model, warmup_s=config.warmup_s, window_s=config.window_s
            ):
                total = 2 * point.completed
                if kind in _NO_APP_KINDS:
                    through: Optional[int] = None
                    pct: Optional[float] = None
                else:
                    through = _APP_VISITS.get(kind, 0) * point.completed
                    pct = (through / total) if total else 0.0
                sweep_points[(kind, point.connections)] = ResultRow(
                    scenario=kind.value,
                    rate_per_s=None,
                    connections=point.connections,
                    total_packets=total,
                    packets_through_app=through,
                    pct_through_app=pct,
                    throughput_rps=point.throughput_rps,
                    p50_ms=point.p50_ms,
                    p95_ms=point.p95_ms,
                    failed_flows=0,
                    seed=config.seed,
                )

    rows: list[ResultRow] = []
    for _, _, scenario, rate, conn in work:
        if rate is not None:
            row = _run_signaling_point(config, scenario, rate, trace_sink)
        else:
            row = sweep_points[(scenario, conn)]
        rows.append(row)
        if on_row is not None:
            on_row(row)
    return rows


# --- serialization --------------------------------------------------------------


def _cell(name: str, value) -> str:
    if value is None:
        return ""
    if name == "pct_through_app":
        return f"{value:.6f}"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        d = asdict(row)
        writer.writerow([_cell(name, d[name]) for name in CSV_HEADER])
    return buf.getvalue()


def rows_to_json(rows: list[ResultRow]) -> str:
    return json.dumps([asdict(row) for row in rows], indent=2) + "\n"


def emit(rows: list[ResultRow], fmt: str, path: Optional[str]) -> None:
    """Write rows as CSV or JSON to ``path``, or standard output when None."""
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
