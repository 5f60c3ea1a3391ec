"""Engine-versus-oracle equivalence on randomized reactive configurations.

The analytic oracle recomputes every packet counter and every delivery
latency from closed-form hop arithmetic.  These tests require exact
equality (tolerance 0) between a full engine run and the oracle across
randomized small configurations: at most 100 users, at most 3 instances
per producer type, deterministic arrivals.

The generator keeps consecutive flow starts at least 60 ms apart (attach
grids of at most 5/s; detach offsets chosen against the grid), which is
what makes the oracle's one-flow-at-a-time walk valid.
"""

from __future__ import annotations

import random
import time

from _support import assert_exact_match, random_small_config
from sdnscp.oracle import OracleError, analytic_metrics, analytic_oracle_count
from sdnscp.scenarios import ScenarioKind
from sdnscp.simulator import SignalingConfig, US, WorkloadEvent


def test_25_randomized_configs_match_exactly_under_a_minute() -> None:
    rng = random.Random(42)
    started = time.monotonic()
    for i in range(25):
        assert_exact_match(random_small_config(rng), f"config {i}")
    assert time.monotonic() - started < 60.0


def test_single_user_cold_start_matches() -> None:
    cfg = SignalingConfig(
        scenario=ScenarioKind.SDN_REACTIVE,
        rate_per_s=1.0,
        duration_us=61 * US,
        attach_span_us=60 * US,
        controller_preseeded=False,
    )
    assert_exact_match(cfg, "single user cold start")
    # the counts are also non-trivial: the through-app fraction is a real ratio
    counts = analytic_oracle_count(cfg)
    assert counts.total_packets > 0
    assert 0 < counts.packets_through_app < counts.total_packets


def test_mid_flow_truncation_matches() -> None:
    """Durations cutting a flow mid-exchange still account identically."""
    for duration_ms in (2505, 2502, 2501):
        cfg = SignalingConfig(
            scenario=ScenarioKind.SDN_REACTIVE,
            rate_per_s=1.0,
            duration_us=duration_ms * 1000,
            attach_span_us=1_500_000,
        )
        assert_exact_match(cfg, f"truncation at {duration_ms} ms")


def test_every_policy_and_seeding_combination_matches() -> None:
    for policy in ("round-robin", "least-load"):
        for preseeded in (True, False):
            for nrf_traffic in (True, False):
                cfg = SignalingConfig(
                    scenario=ScenarioKind.SDN_REACTIVE,
                    rate_per_s=2.0,
                    duration_us=20 * US,
                    attach_span_us=5_300_000,
                    ausf_count=3,
                    smf_count=2,
                    ausf_loads=(0, 50, 92),
                    policy=policy,
                    controller_preseeded=preseeded,
                    model_nrf_traffic=nrf_traffic,
                    binding_required=policy == "least-load",
                )
                assert_exact_match(cfg, f"{policy}/preseeded={preseeded}/nrf={nrf_traffic}")


def test_oracle_rejects_what_it_cannot_account_for() -> None:
    base = dict(rate_per_s=1.0, duration_us=61 * US, attach_span_us=60 * US)
    proactive = SignalingConfig(scenario=ScenarioKind.SDN_PROACTIVE, **base)
    try:
        analytic_metrics(proactive)
        raise AssertionError("proactive runs must be rejected")
    except OracleError:
        pass
    stats = SignalingConfig(
        scenario=ScenarioKind.SDN_REACTIVE, stats_interval_us=US, **base
    )
    try:
        analytic_metrics(stats)
        raise AssertionError("stats collection must be rejected")
    except OracleError:
        pass


def test_oracle_detects_overlapping_flows() -> None:
    """Flows packed closer than a flow's own duration abort the walk."""
    cfg = SignalingConfig(
        scenario=ScenarioKind.SDN_REACTIVE,
        rate_per_s=1.0,
        duration_us=3 * US,
        attach_span_us=US,
    )
    crowded = [WorkloadEvent(time_us=i * 1000, kind="attach", user_id=i) for i in range(4)]
    try:
        analytic_metrics(cfg, crowded)
        raise AssertionError("overlapping flows must be rejected")
    except OracleError:
        pass
