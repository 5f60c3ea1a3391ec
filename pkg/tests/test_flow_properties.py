"""Randomized flow-table properties checked against a brute-force oracle.

Five properties, each over at least 1000 generated cases: priority
shadowing, byte conservation, rewrite round-trip identity, timeout
exactness, and deterministic tie-breaking.  The oracle is an independent
linear-scan table that re-implements the documented semantics (max
priority, then min rule id; inclusive timeout boundaries; idle refresh
on match) without sharing any code with the engine.
"""

from __future__ import annotations

from typing import Optional

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from _support import brute_counts, build_pair
from sdnscp.flow_engine import (
    Endpoint,
    ForwardOut,
    MatchCriteria,
    Packet,
    RewriteDst,
    RewriteSrc,
    apply_actions,
)

CASES = settings(
    max_examples=1000,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow],
)

ADDRESSES = ("10.0.0.1", "10.0.0.2", "10.0.0.3")
PORTS = (80, 8080)

endpoints = st.builds(Endpoint, address=st.sampled_from(ADDRESSES), port=st.sampled_from(PORTS))

packets = (
    st.tuples(endpoints, endpoints, st.integers(min_value=1, max_value=500))
    .filter(lambda t: t[0] != t[1])
    .map(lambda t: Packet(src=t[0], dst=t[1], size_bytes=t[2]))
)


def _optional(values) -> st.SearchStrategy:
    return st.one_of(st.none(), st.sampled_from(values))


criteria = st.builds(
    MatchCriteria,
    src_address=_optional(ADDRESSES),
    src_port=_optional(PORTS),
    dst_address=_optional(ADDRESSES),
    dst_port=_optional(PORTS),
)


# --- priority shadowing ---


@CASES
@given(
    rules=st.lists(st.tuples(st.integers(min_value=0, max_value=4), criteria), min_size=2, max_size=10),
    traffic=st.lists(packets, min_size=1, max_size=20),
)
def test_priority_shadowing(rules, traffic) -> None:
    """The winner always carries the highest priority of any matching rule."""
    table, brute = build_pair([(p, m, None, None) for p, m in rules])
    now = 1
    for packet in traffic:
        got = table.lookup(packet, now)
        assert got == brute.lookup(packet, now)
        if got is not None:
            winner = table.get(got)
            shadowed = [
                r for r in table.rules() if r.match.matches(packet) and r.rule_id != got
            ]
            assert all(r.priority <= winner.priority for r in shadowed)
            # a strictly lower-priority matching rule never gains counters
            assert all(r.packet_count == brute_counts(brute, r.rule_id) for r in shadowed)
        now += 1


# --- byte conservation ---


@CASES
@given(
    rules=st.lists(st.tuples(st.integers(min_value=0, max_value=4), criteria), min_size=1, max_size=8),
    traffic=st.lists(packets, min_size=1, max_size=25),
)
def test_byte_conservation(rules, traffic) -> None:
    """Every offered byte lands in exactly one rule counter or in the miss bucket."""
    table, brute = build_pair([(p, m, None, None) for p, m in rules])
    offered = 0
    missed = 0
    now = 1
    for packet in traffic:
        offered += packet.size_bytes
        got = table.lookup(packet, now)
        assert got == brute.lookup(packet, now)
        if got is None:
            missed += packet.size_bytes
        now += 1
    assert sum(r.byte_count for r in table.rules()) + missed == offered
    for r in table.rules():
        oracle_rule = next(b for b in brute.rules if b.rule_id == r.rule_id)
        assert (r.packet_count, r.byte_count) == (oracle_rule.packets, oracle_rule.bytes)


# --- rewrite round-trip identity ---


@CASES
@given(
    consumer=endpoints,
    main=endpoints,
    instance=endpoints,
    size=st.integers(min_value=1, max_value=500),
)
def test_rewrite_round_trip_identity(consumer, main, instance, size) -> None:
    """NAT round trip: the consumer only ever sees the main endpoint.

    Also the literal inverse: rewriting dst away and back restores the
    packet exactly.
    """
    if len({consumer, main, instance}) != 3:
        return
    request = Packet(src=consumer, dst=main, size_bytes=size)

    # request leg: main endpoint rewritten to the concrete instance
    wire_request, _ = apply_actions(request, (RewriteDst(instance), ForwardOut(2)))
    assert wire_request.src == consumer and wire_request.dst == instance
    assert wire_request.size_bytes == request.size_bytes
    assert wire_request.message is request.message

    # response leg: instance masked behind the main endpoint again
    reply = Packet(src=instance, dst=consumer, size_bytes=size)
    visible_reply, _ = apply_actions(reply, (RewriteSrc(main), ForwardOut(1)))
    assert (visible_reply.src, visible_reply.dst) == (request.dst, request.src)

    # rewrite then inverse rewrite is the identity
    back, _ = apply_actions(
        request, (RewriteDst(instance), RewriteDst(request.dst), ForwardOut(1))
    )
    assert back == request


# --- timeout exactness ---


@st.composite
def timeout_cases(draw):
    n_rules = draw(st.integers(min_value=1, max_value=4))
    specs = []
    for _ in range(n_rules):
        idle = draw(_optional((1, 2, 3, 5, 8)))
        hard = draw(_optional((2, 4, 7, 10, 15)))
        specs.append((draw(st.integers(min_value=0, max_value=3)), draw(criteria), idle, hard))
    timeline = draw(
        st.lists(st.tuples(st.integers(min_value=1, max_value=4), packets), min_size=1, max_size=25)
    )
    return specs, timeline


@CASES
@given(case=timeout_cases())
def test_timeout_exactness(case) -> None:
    """Hit/miss at every instant, and the final sweep, match the replay oracle.

    The oracle computes liveness from the match timeline alone, so any
    off-by-one in the engine's inclusive boundary or idle refresh shows
    up as a divergence.
    """
    specs, timeline = case
    table, brute = build_pair(specs)
    now = 0
    for gap, packet in timeline:
        now += gap
        assert table.lookup(packet, now) == brute.lookup(packet, now)
    removed = table.expire_rules(now + 5)
    expected = brute.expire(now + 5)
    got = [(n.rule_id, n.reason, n.packet_count, n.byte_count) for n in removed]
    assert got == expected
    # removal is final: a second sweep at the same instant is empty
    assert table.expire_rules(now + 5) == []
    assert {r.rule_id for r in table.rules()} == {r.rule_id for r in brute.rules}


# --- deterministic tie-breaking ---


@CASES
@given(
    matches=st.lists(criteria, min_size=2, max_size=8),
    priority=st.integers(min_value=0, max_value=5),
    traffic=st.lists(packets, min_size=1, max_size=20),
)
def test_deterministic_tie_breaking(matches, priority, traffic) -> None:
    """Equal priorities resolve to the smallest rule id, identically on replay."""
    def run_once() -> list[Optional[int]]:
        table, brute = build_pair([(priority, m, None, None) for m in matches])
        decisions = []
        now = 1
        for packet in traffic:
            got = table.lookup(packet, now)
            assert got == brute.lookup(packet, now)
            if got is not None:
                matching_ids = [
                    r.rule_id for r in table.rules() if r.match.matches(packet)
                ]
                assert got == min(matching_ids)
            decisions.append(got)
            now += 1
        return decisions

    assert run_once() == run_once()
