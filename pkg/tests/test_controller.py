"""Unit tests for the controller: discovery, selection, rule fabrication, repair."""

from __future__ import annotations

import pytest

from sdnscp.controller import (
    AuthorizationMatrix,
    Controller,
    FlowMod,
    LOCAL_PORT,
    MAIN_ADDRESS_BLOCK,
    PacketIn,
    PacketOut,
    SelectionError,
    TRANSLATION_PRIORITY,
    UPLINK_PORT,
)
from sdnscp.flow_engine import (
    Endpoint,
    FlowStatsEntry,
    FlowStatsReport,
    ForwardOut,
    MatchCriteria,
    Packet,
    RewriteDst,
    RewriteSrc,
    SendToController,
)
from sdnscp.nf_model import MsgKind, NFProfile, NFType, Nrf, SBIMessage

NRF_EP = Endpoint("10.0.0.10", 8080)
AMF_EP = Endpoint("10.0.1.1", 8080)


def ausf_ep(i: int) -> Endpoint:
    return Endpoint(f"10.0.2.{i}", 8080)


def smf_ep(i: int) -> Endpoint:
    return Endpoint(f"10.0.3.{i}", 8080)


class CountSink:
    """Minimal metrics stand-in recording every counting call."""

    def __init__(self) -> None:
        self.calls: list[tuple] = []

    def count_emitted(self, category: str) -> None:
        self.calls.append(("emitted", category))

    def count_through_app(self, category: str) -> None:
        self.calls.append(("through", category))

    def count_consumed(self, category: str) -> None:
        self.calls.append(("consumed", category))

    def count_dropped(self, category: str) -> None:
        self.calls.append(("dropped", category))

    def count_nrf_query(self, n: int) -> None:
        self.calls.append(("query", n))

    def count(self, *key) -> int:
        return self.calls.count(key)


def make_controller(
    ausf_loads=(0, 0, 0),
    smf_loads=(0,),
    preseed: bool = True,
    **kwargs,
) -> tuple[Controller, CountSink]:
    nrf = Nrf(NRF_EP)
    sink = CountSink()
    ctrl = Controller(nrf=nrf, metrics=sink, record_events=True, **kwargs)
    ctrl.register_switch("sw-nrf", NRF_EP, NFType.NRF)
    ctrl.register_switch("sw-amf-1", AMF_EP, NFType.AMF)
    profiles = [
        NFProfile(instance_id=1, nf_type=NFType.AMF, endpoint=AMF_EP),
    ]
    for i, load in enumerate(ausf_loads, start=1):
        ep = ausf_ep(i)
        ctrl.register_switch(f"sw-ausf-{i}", ep, NFType.AUSF)
        profiles.append(NFProfile(instance_id=10 + i, nf_type=NFType.AUSF, endpoint=ep, load=load))
    for i, load in enumerate(smf_loads, start=1):
        ep = smf_ep(i)
        ctrl.register_switch(f"sw-smf-{i}", ep, NFType.SMF)
        profiles.append(NFProfile(instance_id=20 + i, nf_type=NFType.SMF, endpoint=ep, load=load))
    for p in profiles:
        nrf.register(p)
        if preseed:
            ctrl.observe_registration(p)
    return ctrl, sink


def discovery_packet(target: NFType, corr: int = 1) -> Packet:
    return Packet(
        src=AMF_EP,
        dst=NRF_EP,
        message=SBIMessage(kind=MsgKind.DISCOVERY_REQUEST, correlation_id=corr, target_type=target),
    )


def data_packet(dst: Endpoint, kind: MsgKind = MsgKind.AUTHENTICATION_REQUEST, src: Endpoint = AMF_EP) -> Packet:
    return Packet(src=src, dst=dst, message=SBIMessage(kind=kind, correlation_id=1))


# --- main endpoints ---


def test_main_endpoints_distinct_and_reserved() -> None:
    ctrl, _ = make_controller()
    mains = ctrl.mains.all_mains()
    assert len(set(mains)) == len(mains) == 3
    for ep in mains:
        assert ep.address.startswith(MAIN_ADDRESS_BLOCK)
        assert ctrl.mains.type_for(ep) is not None
    assert ctrl.mains.type_for(AMF_EP) is None


# --- authorization matrix ---


def test_matrix_parsing_and_membership() -> None:
    m = AuthorizationMatrix.from_pairs(["AMF:AUSF", ("AMF", "SMF")])
    assert m.allows(NFType.AMF, NFType.AUSF)
    assert m.allows(NFType.AMF, NFType.SMF)
    assert not m.allows(NFType.AUSF, NFType.AMF)
    assert not m.allows(NFType.SMF, NFType.AUSF)


def test_matrix_rejects_mutual_pairs() -> None:
    with pytest.raises(ValueError):
        AuthorizationMatrix.from_pairs(["AMF:AUSF", "AUSF:AMF"])


# --- bootstrap ---


def test_bootstrap_installs_only_the_nrf_trap() -> None:
    ctrl, _ = make_controller()
    mods = ctrl.bootstrap_switch("sw-amf-1")
    assert len(mods) == 1
    rule = mods[0].rule
    assert rule.match == MatchCriteria.for_dst(NRF_EP)
    assert rule.actions == (SendToController(),)
    assert rule.idle_timeout is None and rule.hard_timeout is None
    with pytest.raises(KeyError):
        ctrl.bootstrap_switch("sw-unknown")


# --- delegated discovery ---


def test_discovery_answered_with_single_main_endpoint() -> None:
    ctrl, sink = make_controller()
    out = ctrl.handle_packet_in(PacketIn("sw-amf-1", discovery_packet(NFType.AUSF)), now=100)
    assert len(out) == 1 and isinstance(out[0], PacketOut)
    response = out[0].packet
    assert response.src == NRF_EP and response.dst == AMF_EP
    assert response.message.kind is MsgKind.DISCOVERY_RESPONSE
    assert response.message.endpoints == (ctrl.mains.main_for(NFType.AUSF),)
    assert out[0].delay_hops == 1  # preseeded: no NRF round trip
    assert sink.count("consumed", "discovery") == 1
    assert sink.count("emitted", "discovery") == 1


def test_discovery_cold_cache_queries_nrf_once() -> None:
    ctrl, sink = make_controller(preseed=False)
    out = ctrl.handle_packet_in(PacketIn("sw-amf-1", discovery_packet(NFType.AUSF)), now=0)
    assert out[0].delay_hops == 3  # NRF round trip happened first
    assert sink.count("query", 2) == 1
    # second discovery of the same type: answered from the local registry
    out = ctrl.handle_packet_in(PacketIn("sw-amf-1", discovery_packet(NFType.AUSF, corr=2)), now=10)
    assert out[0].delay_hops == 1
    assert sink.count("query", 2) == 1
    assert ctrl.nrf_query_count == 2


def test_discovery_denied_for_unauthorized_consumer() -> None:
    ctrl, sink = make_controller(
        authorization=AuthorizationMatrix.from_pairs(["AMF:SMF"])
    )
    out = ctrl.handle_packet_in(PacketIn("sw-amf-1", discovery_packet(NFType.AUSF)), now=0)
    assert len(out) == 1
    reply = out[0].packet
    assert reply.message.kind is MsgKind.ERROR
    assert reply.message.error_code == "unauthorized"
    assert reply.src == NRF_EP  # transparency: the NRF appears to answer
    assert not any(isinstance(m, FlowMod) for m in out)
    assert sink.count("query", 2) == 0  # denied before any NRF contact


# --- producer selection ---


def test_round_robin_cycles_eligible_instances() -> None:
    ctrl, _ = make_controller(ausf_loads=(0, 0, 0))
    picks = [ctrl.select_producer(NFType.AUSF, now=i).instance_id for i in range(6)]
    assert picks == [11, 12, 13, 11, 12, 13]


def test_overloaded_instances_skipped() -> None:
    ctrl, _ = make_controller(ausf_loads=(95, 0, 0), overload_threshold=90)
    picks = {ctrl.select_producer(NFType.AUSF, now=i).instance_id for i in range(4)}
    assert picks == {12, 13}


def test_all_overloaded_raises() -> None:
    ctrl, _ = make_controller(ausf_loads=(95, 96, 97), overload_threshold=90)
    with pytest.raises(SelectionError) as err:
        ctrl.select_producer(NFType.AUSF, now=0)
    assert err.value.code == "overloaded"


def test_threshold_boundary_excludes_equal_load() -> None:
    ctrl, _ = make_controller(ausf_loads=(90, 10, 90), overload_threshold=90)
    picks = {ctrl.select_producer(NFType.AUSF, now=i).instance_id for i in range(3)}
    assert picks == {12}


def test_unknown_type_selection_fails() -> None:
    ctrl, _ = make_controller()
    ctrl._profiles[NFType.SMF] = []  # simulate an empty fetched bucket
    with pytest.raises(SelectionError) as err:
        ctrl.select_producer(NFType.SMF, now=0)
    assert err.value.code == "not_found"


def test_least_load_prefers_lowest_then_observed_bytes() -> None:
    ctrl, _ = make_controller(ausf_loads=(30, 10, 10), policy="least-load")
    assert ctrl.select_producer(NFType.AUSF, now=0).instance_id == 12
    # equal loads: fewer observed bytes wins
    report = FlowStatsReport(
        switch_id="sw-amf-1",
        generated_at=1,
        entries=(
            FlowStatsEntry(rule_id=1, priority=10, match=MatchCriteria(), packet_count=2, byte_count=512, delta_bytes=512),
        ),
    )
    pair_mods = ctrl.install_translation_pair(
        "sw-amf-1", AMF_EP, NFType.AUSF, ctrl._profiles[NFType.AUSF][1], now=0
    )
    report = FlowStatsReport(
        switch_id="sw-amf-1",
        generated_at=1,
        entries=(
            FlowStatsEntry(
                rule_id=pair_mods[0].rule.rule_id,
                priority=10,
                match=MatchCriteria(),
                packet_count=2,
                byte_count=512,
                delta_bytes=512,
            ),
        ),
    )
    ctrl.handle_stats(report, now=1)
    assert ctrl.observed_bytes(12) == 512
    assert ctrl.select_producer(NFType.AUSF, now=2).instance_id == 13


def test_binding_sticks_across_selections() -> None:
    ctrl, _ = make_controller(ausf_loads=(0, 0, 0))
    first = ctrl.select_producer(NFType.AUSF, now=0, consumer_endpoint=AMF_EP, binding_required=True)
    for i in range(4):
        again = ctrl.select_producer(
            NFType.AUSF, now=i, consumer_endpoint=AMF_EP, binding_required=True
        )
        assert again.instance_id == first.instance_id
    # non-binding selection still advances round-robin independently
    assert ctrl.select_producer(NFType.AUSF, now=9).instance_id != first.instance_id


# --- translation pairs ---


def test_install_translation_pair_builds_four_rules() -> None:
    ctrl, _ = make_controller(hard_timeout=20_000_000, idle_timeout=None)
    instance = ctrl._profiles[NFType.AUSF][0]
    main = ctrl.mains.main_for(NFType.AUSF)
    mods = ctrl.install_translation_pair("sw-amf-1", AMF_EP, NFType.AUSF, instance, now=5)
    assert [m.switch_id for m in mods] == ["sw-amf-1", "sw-amf-1", "sw-ausf-1", "sw-ausf-1"]
    r1, r2, r3, r4 = (m.rule for m in mods)
    assert r1.match == MatchCriteria.for_pair(AMF_EP, main)
    assert r1.actions == (RewriteDst(instance.endpoint), ForwardOut(UPLINK_PORT))
    assert r2.match == MatchCriteria.for_pair(instance.endpoint, AMF_EP)
    assert r2.actions == (RewriteSrc(main), ForwardOut(LOCAL_PORT))
    assert r3.match == MatchCriteria.for_pair(AMF_EP, instance.endpoint)
    assert r3.actions == (ForwardOut(LOCAL_PORT),)
    assert r4.match == MatchCriteria.for_pair(instance.endpoint, AMF_EP)
    assert r4.actions == (ForwardOut(UPLINK_PORT),)
    for rule in (r1, r2, r3, r4):
        assert rule.priority == TRANSLATION_PRIORITY
        assert rule.hard_timeout == 20_000_000 and rule.idle_timeout is None


# --- first-packet handling ---


def test_first_packet_installs_pair_and_replays() -> None:
    ctrl, sink = make_controller()
    main = ctrl.mains.main_for(NFType.AUSF)
    out = ctrl.handle_packet_in(PacketIn("sw-amf-1", data_packet(main)), now=50)
    mods = [m for m in out if isinstance(m, FlowMod)]
    outs = [m for m in out if isinstance(m, PacketOut)]
    assert len(mods) == 4 and len(outs) == 1
    assert outs[0].switch_id == "sw-amf-1"
    assert outs[0].actions[0] == RewriteDst(ausf_ep(1))
    assert sink.count("through", "data") == 1


def test_denied_data_packet_gets_error_and_no_flowmods() -> None:
    ctrl, sink = make_controller(authorization=AuthorizationMatrix.from_pairs(["AMF:SMF"]))
    main = ctrl.mains.main_for(NFType.AUSF)
    out = ctrl.handle_packet_in(PacketIn("sw-amf-1", data_packet(main)), now=0)
    assert not any(isinstance(m, FlowMod) for m in out)
    assert len(out) == 1
    reply = out[0].packet
    assert reply.message.kind is MsgKind.ERROR and reply.message.error_code == "unauthorized"
    assert reply.src == main  # the main endpoint answers; no instance is exposed
    assert sink.count("dropped", "data") == 1


def test_selection_failure_returns_error_reply() -> None:
    ctrl, _ = make_controller(ausf_loads=(95, 95, 95), overload_threshold=90)
    main = ctrl.mains.main_for(NFType.AUSF)
    out = ctrl.handle_packet_in(PacketIn("sw-amf-1", data_packet(main)), now=0)
    assert len(out) == 1
    assert out[0].packet.message.error_code == "overloaded"


# --- mid-flow repair ---


def test_request_repair_keeps_instance_and_delivers_locally() -> None:
    ctrl, _ = make_controller(ausf_loads=(0, 0, 0))
    # a request already rewritten to instance 2 punts at the producer switch
    pkt = data_packet(ausf_ep(2))
    out = ctrl.handle_packet_in(PacketIn("sw-ausf-2", pkt), now=0)
    mods = [m for m in out if isinstance(m, FlowMod)]
    outs = [m for m in out if isinstance(m, PacketOut)]
    assert len(mods) == 4
    assert outs == [PacketOut(switch_id="sw-ausf-2", packet=pkt, actions=(ForwardOut(LOCAL_PORT),))]
    # the reinstalled pair targets the packet's instance, not a fresh pick
    rewrites = [a for m in mods for a in m.rule.actions if isinstance(a, RewriteDst)]
    assert rewrites == [RewriteDst(ausf_ep(2))]


def test_response_repair_at_consumer_switch_masks_source() -> None:
    ctrl, _ = make_controller()
    response = Packet(
        src=ausf_ep(1), dst=AMF_EP, message=SBIMessage(kind=MsgKind.AUTHENTICATION_REPLY)
    )
    out = ctrl.handle_packet_in(PacketIn("sw-amf-1", response), now=0)
    outs = [m for m in out if isinstance(m, PacketOut)]
    assert outs[0].actions == (RewriteSrc(ctrl.mains.main_for(NFType.AUSF)), ForwardOut(LOCAL_PORT))


def test_response_repair_at_producer_switch_forwards_uplink() -> None:
    ctrl, _ = make_controller()
    response = Packet(
        src=ausf_ep(1), dst=AMF_EP, message=SBIMessage(kind=MsgKind.AUTHENTICATION_REPLY)
    )
    out = ctrl.handle_packet_in(PacketIn("sw-ausf-1", response), now=0)
    outs = [m for m in out if isinstance(m, PacketOut)]
    assert outs[0].actions == (ForwardOut(UPLINK_PORT),)


def test_unroutable_packet_dropped() -> None:
    ctrl, sink = make_controller()
    stray = Packet(src=Endpoint("192.168.0.9", 1234), dst=Endpoint("192.168.0.8", 1234))
    assert ctrl.handle_packet_in(PacketIn("sw-amf-1", stray), now=0) == []
    assert sink.count("dropped", "data") == 1


# --- registration relay ---


def test_registration_observed_and_relayed() -> None:
    ctrl, _ = make_controller(preseed=False)
    new_profile = NFProfile(instance_id=31, nf_type=NFType.SMF, endpoint=smf_ep(1))
    reg = Packet(
        src=smf_ep(1),
        dst=NRF_EP,
        message=SBIMessage(kind=MsgKind.REGISTER, profile=new_profile),
    )
    out = ctrl.handle_packet_in(PacketIn("sw-smf-1", reg), now=0)
    assert len(out) == 1 and out[0].switch_id == "sw-nrf"
    assert NFType.SMF in ctrl._fetched  # observed without querying
    assert ctrl.nrf_query_count == 0


def test_deregistration_clears_bindings() -> None:
    ctrl, _ = make_controller()
    bound = ctrl.select_producer(NFType.AUSF, now=0, consumer_endpoint=AMF_EP, binding_required=True)
    ctrl.observe_deregistration(bound.instance_id)
    fresh = ctrl.select_producer(NFType.AUSF, now=1, consumer_endpoint=AMF_EP, binding_required=True)
    assert fresh.instance_id != bound.instance_id
