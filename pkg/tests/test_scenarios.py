"""Scenario calibration and closed-loop sweep tests."""

from __future__ import annotations

import pytest

from sdnscp.scenarios import (
    Anchors,
    CalibrationError,
    ScenarioKind,
    SIGNALING_KINDS,
    StationRole,
    build_topology,
    calibrate_costs,
    cycle_time_empty,
    predicted_saturation,
    simulate_closed_loop,
    throughput_latency_sweep,
)

ANCHORED = {
    ScenarioKind.DIRECT: "direct_rps",
    ScenarioKind.SDN_PROACTIVE: "sdn_data_rps",
    ScenarioKind.SCP_INDEPENDENT: "scp_independent_rps",
    ScenarioKind.SCP_COLOCATED: "scp_colocated_rps",
    ScenarioKind.SDN_CONSUMER_FORWARDED: "through_app_rps",
    ScenarioKind.SDN_BOTH_FORWARDED: "through_app_rps",
}


# --- calibration ---


def test_calibration_reproduces_every_anchor_in_closed_form() -> None:
    model = calibrate_costs()
    for kind, anchor_name in ANCHORED.items():
        anchor = getattr(model.anchors, anchor_name)
        assert predicted_saturation(kind, model) == pytest.approx(anchor, rel=0.01)


def test_calibration_with_custom_anchors() -> None:
    anchors = Anchors(
        direct_rps=20000,
        sdn_data_rps=19000,
        scp_independent_rps=8000,
        scp_colocated_rps=4000,
        through_app_rps=9000,
    )
    model = calibrate_costs(anchors)
    assert predicted_saturation(ScenarioKind.SCP_COLOCATED, model) == pytest.approx(4000, rel=0.01)


def test_incompatible_anchors_rejected() -> None:
    with pytest.raises(CalibrationError):
        calibrate_costs(Anchors(sdn_data_rps=40000))  # above the direct anchor
    with pytest.raises(CalibrationError):
        calibrate_costs(Anchors(scp_colocated_rps=20000))  # above half the direct anchor
    with pytest.raises(CalibrationError):
        calibrate_costs(Anchors(direct_rps=-1))
    with pytest.raises(CalibrationError):
        calibrate_costs(path_delay_s=-0.1)


def test_colocation_halves_the_shared_stations() -> None:
    model = calibrate_costs()
    direct_stack = model.service_time(ScenarioKind.DIRECT, StationRole.CONSUMER_STACK)
    shared_stack = model.service_time(ScenarioKind.SCP_COLOCATED, StationRole.CONSUMER_STACK)
    assert shared_stack == 2 * direct_stack


def test_both_forwarded_app_visit_costs_half() -> None:
    model = calibrate_costs()
    once = model.service_time(ScenarioKind.SDN_CONSUMER_FORWARDED, StationRole.SDN_APP)
    twice = model.service_time(ScenarioKind.SDN_BOTH_FORWARDED, StationRole.SDN_APP)
    assert twice == once / 2


# --- topology shapes ---


def test_direct_cycle_round_trip_time() -> None:
    model = calibrate_costs()
    topo = build_topology(ScenarioKind.DIRECT, model)
    stack = 1.0 / model.anchors.direct_rps
    assert cycle_time_empty(topo) == pytest.approx(2 * stack + 2 * model.path_delay_s)


def test_scp_topologies_visit_the_agent() -> None:
    model = calibrate_costs()
    independent = build_topology(ScenarioKind.SCP_INDEPENDENT, model)
    assert independent.cycle.count("agent") == 1
    colocated = build_topology(ScenarioKind.SCP_COLOCATED, model)
    roles = {st.role for st in colocated.path_stations()}
    assert StationRole.SCP_AGENT in roles


def test_reactive_first_cycle_detours_through_the_app() -> None:
    model = calibrate_costs()
    topo = build_topology(ScenarioKind.SDN_REACTIVE, model)
    assert topo.first_cycle is not None
    assert "app" in topo.first_cycle
    assert "app" not in topo.cycle


def test_forwarded_cycles_visit_the_app_per_leg() -> None:
    model = calibrate_costs()
    once = build_topology(ScenarioKind.SDN_CONSUMER_FORWARDED, model)
    twice = build_topology(ScenarioKind.SDN_BOTH_FORWARDED, model)
    assert once.cycle.count("app") == 1
    assert twice.cycle.count("app") == 2


def test_signaling_kinds_subset() -> None:
    assert SIGNALING_KINDS == {
        ScenarioKind.DIRECT,
        ScenarioKind.SDN_PROACTIVE,
        ScenarioKind.SDN_REACTIVE,
    }


# --- closed-loop behaviour ---


def test_single_connection_latency_equals_cycle_time() -> None:
    model = calibrate_costs()
    topo = build_topology(ScenarioKind.DIRECT, model)
    point = simulate_closed_loop(topo, connections=1)
    rtt_ms = cycle_time_empty(topo) * 1000
    assert point.p50_ms == pytest.approx(rtt_ms, rel=1e-6)
    assert point.p95_ms == pytest.approx(rtt_ms, rel=1e-6)
    assert point.throughput_rps == pytest.approx(1 / cycle_time_empty(topo), rel=0.05)


def test_direct_plateau_hits_its_anchor() -> None:
    model = calibrate_costs()
    topo = build_topology(ScenarioKind.DIRECT, model)
    point = simulate_closed_loop(topo, connections=99)
    assert point.throughput_rps == pytest.approx(model.anchors.direct_rps, rel=0.05)


def test_colocated_plateau_hits_its_anchor() -> None:
    model = calibrate_costs()
    topo = build_topology(ScenarioKind.SCP_COLOCATED, model)
    point = simulate_closed_loop(topo, connections=99)
    assert point.throughput_rps == pytest.approx(model.anchors.scp_colocated_rps, rel=0.05)


def test_throughput_grows_then_saturates() -> None:
    points = throughput_latency_sweep(ScenarioKind.SCP_INDEPENDENT, [1, 9, 99])
    assert points[0].throughput_rps < points[1].throughput_rps <= points[2].throughput_rps * 1.05
    assert points[2].p95_ms > points[0].p95_ms


def test_sweep_validation() -> None:
    with pytest.raises(ValueError):
        throughput_latency_sweep(ScenarioKind.DIRECT, [])
    with pytest.raises(ValueError):
        throughput_latency_sweep(ScenarioKind.DIRECT, [0])
