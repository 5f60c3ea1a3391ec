"""Deterministic discrete-event simulation of attach/detach signaling.

Time is integer microseconds.  Every link traversal (NF to switch, switch
to switch, switch or NF to controller, controller to NRF) costs one hop
delay; processing at switches, the controller and NFs is instantaneous.
Events at equal timestamps run in scheduling order, so runs are exactly
reproducible and an analytic oracle can replay the packet accounting
without touching the engine.

Three scenario kinds have a signaling plane:

* ``sdn-reactive``  the full machinery: flow tables, the controller
  application, delegated discovery, reactive translation-pair installs;
* ``direct``        no switches; consumers discover against the NRF
  directly and talk straight to producer instances;
* ``sdn-proactive`` switches pre-programmed with permanent rules and
  consumers preconfigured with the main endpoints, so no packet ever
  reaches the controller during the run.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Optional

from sdnscp.controller import (
    AuthorizationMatrix,
    Controller,
    FlowMod,
    LOCAL_PORT,
    PacketIn,
    UPLINK_PORT,
)
from sdnscp.flow_engine import (
    Drop,
    Endpoint,
    FlowTable,
    ForwardOut,
    Packet,
    Periodic,
    SendToController,
    StatsCollector,
    Threshold,
    apply_actions,
)
from sdnscp.nf_model import (
    ATTACH_STEPS,
    ConsumerCache,
    DETACH_STEPS,
    DISCOVERY_KINDS,
    MsgKind,
    NFProfile,
    NFType,
    Nrf,
    REGISTRATION_KINDS,
    RESPONSE_KIND,
    Request,
    Resolve,
    SBIMessage,
)
from sdnscp.scenarios import SIGNALING_KINDS, ScenarioKind

US = 1_000_000


class SimulationError(RuntimeError):
    """A run could not be executed as configured."""


# --- workload -----------------------------------------------------------------


@dataclass(frozen=True)
class WorkloadEvent:
    time_us: int
    kind: str  # "attach" or "detach"
    user_id: int


@dataclass(frozen=True)
class WorkloadSpec:
    """Attach arrivals at ``rate_per_s``; each user detaches ``attach_span_s`` later.

    Attaches stop early enough that every detach falls inside the run.
    """

    rate_per_s: float
    attach_span_s: float
    duration_s: float
    arrival: str = "deterministic"

    def __post_init__(self) -> None:
        if self.rate_per_s <= 0:
            raise ValueError("attachment rate must be positive")
        if self.attach_span_s <= 0:
            raise ValueError("attach span must be positive")
        if self.duration_s <= self.attach_span_s:
            raise ValueError("duration must exceed the attach span")
        if self.arrival not in ("deterministic", "poisson"):
            raise ValueError(f"unknown arrival process: {self.arrival}")


def generate_workload(spec: WorkloadSpec, seed: int = 0) -> list[WorkloadEvent]:
    """Attach/detach events, sorted by (time, attach-before-detach, user id).

    Deterministic arrivals put user i at floor(i / rate) microseconds, an
    exact grid free of float drift; Poisson arrivals draw exponential gaps
    from ``seed``.
    """
    duration_us = round(spec.duration_s * US)
    span_us = round(spec.attach_span_s * US)
    last_attach_us = duration_us - span_us
    attach_times: list[int] = []

    if spec.arrival == "deterministic":
        rate = Fraction(str(spec.rate_per_s))
        i = 0
        while True:
            t = int(i * US / rate)
            if t >= last_attach_us:
                break
            attach_times.append(t)
            i += 1
    else:
        rng = random.Random(seed)
        t = 0.0
        while True:
            t += rng.expovariate(spec.rate_per_s)
            t_us = int(t * US)
            if t_us >= last_attach_us:
                break
            attach_times.append(t_us)

    events = [
        WorkloadEvent(time_us=t, kind="attach", user_id=i) for i, t in enumerate(attach_times)
    ]
    events += [
        WorkloadEvent(time_us=t + span_us, kind="detach", user_id=i)
        for i, t in enumerate(attach_times)
    ]
    events.sort(key=lambda e: (e.time_us, 0 if e.kind == "attach" else 1, e.user_id))
    return events


# --- metrics ------------------------------------------------------------------


@dataclass(frozen=True)
class PacketCounts:
    """Integer packet accounting of one run; the oracle reproduces this exactly."""

    data_packets: int
    discovery_packets: int
    registration_packets: int
    nrf_query_packets: int
    through_app_nrf_bound: int
    through_app_first_packets: int
    through_app_queries: int
    delivered_packets: int
    consumed_packets: int
    dropped_packets: int
    failed_flows: int
    attaches_completed: int
    detaches_completed: int

    @property
    def total_packets(self) -> int:
        return (
            self.data_packets
            + self.discovery_packets
            + self.registration_packets
            + self.nrf_query_packets
        )

    @property
    def packets_through_app(self) -> int:
        return (
            self.through_app_nrf_bound
            + self.through_app_first_packets
            + self.through_app_queries
        )


class Metrics:
    """Mutable counters and latency samples; also the controller's count sink.

    ``total_packets`` spans data, discovery, registration and the
    controller's own NRF queries.  ``packets_through_app`` splits into
    NRF-bound packets (discovery and registration ride the trap rules),
    first packets of data flows (plus mid-flow repairs and error replies),
    and the controller-NRF query pairs.
    """

    def __init__(self) -> None:
        self.data_packets = 0
        self.discovery_packets = 0
        self.registration_packets = 0
        self.nrf_query_packets = 0
        self.through_app_nrf_bound = 0
        self.through_app_first_packets = 0
        self.through_app_queries = 0
        self.delivered_packets = 0
        self.consumed_packets = 0
        self.dropped_packets = 0
        self.failed_flows = 0
        self.attaches_completed = 0
        self.detaches_completed = 0
        self.latencies_us: list[int] = []

    # count-sink interface used by the controller and the engine
    def count_emitted(self, category: str) -> None:
        if category == "data":
            self.data_packets += 1
        elif category == "discovery":
            self.discovery_packets += 1
        elif category == "registration":
            self.registration_packets += 1
        else:
            raise ValueError(f"unknown packet category: {category}")

    def count_through_app(self, category: str) -> None:
        if category == "data":
            self.through_app_first_packets += 1
        else:
            self.through_app_nrf_bound += 1

    def count_consumed(self, category: str) -> None:
        self.consumed_packets += 1

    def count_dropped(self, category: str) -> None:
        self.dropped_packets += 1

    def count_nrf_query(self, n: int) -> None:
        self.nrf_query_packets += n
        self.through_app_queries += n

    # derived views
    @property
    def total_packets(self) -> int:
        return (
            self.data_packets
            + self.discovery_packets
            + self.registration_packets
            + self.nrf_query_packets
        )

    @property
    def packets_through_app(self) -> int:
        return (
            self.through_app_nrf_bound
            + self.through_app_first_packets
            + self.through_app_queries
        )

    def percentage_through_app(self) -> float:
        """Fraction (0..1) of all control-plane packets that touched the app."""
        if self.total_packets == 0:
            return 0.0
        return self.packets_through_app / self.total_packets

    def counts(self) -> PacketCounts:
        return PacketCounts(**{f.name: getattr(self, f.name) for f in fields(PacketCounts)})

    def latency_percentile_ms(self, q: float) -> float:
        """Nearest-rank percentile of delivery latency, in milliseconds."""
        if not self.latencies_us:
            return 0.0
        ordered = sorted(self.latencies_us)
        rank = max(1, math.ceil(q * len(ordered)))
        return ordered[rank - 1] / 1000.0


def percentage_through_app(metrics: Metrics) -> float:
    return metrics.percentage_through_app()


# --- configuration ------------------------------------------------------------


@dataclass(frozen=True)
class SignalingConfig:
    """Fully resolved parameters of one signaling run (times in microseconds)."""

    scenario: ScenarioKind
    rate_per_s: float
    duration_us: int
    attach_span_us: int
    validity_us: Optional[int] = 10 * US
    hard_timeout_us: Optional[int] = 20 * US
    idle_timeout_us: Optional[int] = None
    hop_us: int = 1000
    amf_count: int = 1
    ausf_count: int = 1
    smf_count: int = 1
    ausf_loads: tuple[int, ...] = ()
    smf_loads: tuple[int, ...] = ()
    policy: str = "round-robin"
    overload_threshold: int = 90
    authorization: frozenset[tuple[NFType, NFType]] = frozenset(
        {(NFType.AMF, NFType.AUSF), (NFType.AMF, NFType.SMF)}
    )
    binding_required: bool = False
    model_nrf_traffic: bool = True
    controller_preseeded: bool = True
    arrival: str = "deterministic"
    seed: int = 0
    stats_interval_us: Optional[int] = None
    stats_threshold_bytes: Optional[int] = None
    record_events: bool = False

    def __post_init__(self) -> None:
        if self.scenario not in SIGNALING_KINDS:
            raise SimulationError(
                f"scenario {self.scenario.value} has no signaling plane; "
                "run it as a connection sweep instead"
            )
        if self.hop_us <= 0:
            raise SimulationError("hop delay must be positive")
        if min(self.amf_count, self.ausf_count, self.smf_count) < 1:
            raise SimulationError("every NF type needs at least one instance")
        if self.stats_interval_us is not None and self.stats_threshold_bytes is not None:
            raise SimulationError("configure either periodic or threshold stats, not both")

    def workload_spec(self) -> WorkloadSpec:
        return WorkloadSpec(
            rate_per_s=self.rate_per_s,
            attach_span_s=self.attach_span_us / US,
            duration_s=self.duration_us / US,
            arrival=self.arrival,
        )


# --- topology addressing --------------------------------------------------------

NRF_ENDPOINT = Endpoint(address="10.0.0.10", port=8080)

_TYPE_SUBNET = {NFType.AMF: 1, NFType.AUSF: 2, NFType.SMF: 3}


def instance_endpoint(nf_type: NFType, index: int) -> Endpoint:
    return Endpoint(address=f"10.0.{_TYPE_SUBNET[nf_type]}.{index + 1}", port=8080)


# --- internal state -------------------------------------------------------------


class _Flow:
    __slots__ = ("corr", "user_id", "amf", "steps", "idx", "resolved", "is_attach")

    def __init__(self, corr, user_id, amf, steps, is_attach):
        self.corr = corr
        self.user_id = user_id
        self.amf = amf
        self.steps = steps
        self.idx = 0
        self.resolved: dict[NFType, Endpoint] = {}
        self.is_attach = is_attach


class _Host:
    __slots__ = ("profile", "switch_id", "cache", "flows", "attached")

    def __init__(self, profile: NFProfile, switch_id: Optional[str]) -> None:
        self.profile = profile
        self.switch_id = switch_id
        self.cache: Optional[ConsumerCache] = None
        self.flows: dict[int, _Flow] = {}
        self.attached: set[int] = set()


# event kind codes
_EV_ATTACH = 0
_EV_DETACH = 1
_EV_SW_ARRIVE = 2
_EV_PACKET_IN = 3
_EV_FLOWMOD = 4
_EV_PKTOUT = 5
_EV_DELIVER = 6
_EV_RULE_CHECK = 7
_EV_FLOW_REMOVED = 8
_EV_STATS_TICK = 9
_EV_STATS_REPORT = 10


class SignalingSimulation:
    """One signaling run over a fixed workload."""

    def __init__(self, config: SignalingConfig, workload: Optional[list[WorkloadEvent]] = None):
        self.config = config
        self.metrics = Metrics()
        self.workload = (
            workload
            if workload is not None
            else generate_workload(config.workload_spec(), config.seed)
        )
        self._heap: list = []
        self._seq = 0
        self._now = 0
        self._corr = 0

        self.nrf = Nrf(NRF_ENDPOINT)
        self.hosts: dict[Endpoint, _Host] = {}
        self.switches: dict[str, FlowTable] = {}
        self.switch_host: dict[str, _Host] = {}
        self.collectors: dict[str, StatsCollector] = {}
        self._check_armed: dict[str, int] = {}
        self.amfs: list[_Host] = []
        self.controller: Optional[Controller] = None
        self._proactive_targets: dict[tuple[Endpoint, NFType], Endpoint] = {}

        self._build()

    # -- construction --

    def _profiles(self) -> list[NFProfile]:
        cfg = self.config
        out = []
        iid = 1
        for nf_type, count, loads in (
            (NFType.AMF, cfg.amf_count, ()),
            (NFType.AUSF, cfg.ausf_count, cfg.ausf_loads),
            (NFType.SMF, cfg.smf_count, cfg.smf_loads),
        ):
            for i in range(count):
                load = loads[i] if i < len(loads) else 0
                out.append(
                    NFProfile(
                        instance_id=iid,
                        nf_type=nf_type,
                        endpoint=instance_endpoint(nf_type, i),
                        load=load,
                    )
                )
                iid += 1
        return out

    def _build(self) -> None:
        cfg = self.config
        reactive = cfg.scenario is ScenarioKind.SDN_REACTIVE
        profiles = self._profiles()

        if reactive:
            self.controller = Controller(
                nrf=self.nrf,
                authorization=AuthorizationMatrix(cfg.authorization),
                policy=cfg.policy,
                overload_threshold=cfg.overload_threshold,
                hard_timeout=cfg.hard_timeout_us,
                idle_timeout=cfg.idle_timeout_us,
                metrics=self.metrics,
                record_events=cfg.record_events,
            )

        nrf_host = _Host(
            NFProfile(instance_id=0, nf_type=NFType.NRF, endpoint=NRF_ENDPOINT),
            switch_id="sw-nrf" if reactive else None,
        )
        self._add_host(nrf_host, reactive=reactive)

        for profile in profiles:
            switch_id = f"sw-{profile.nf_type.value.lower()}-{profile.instance_id}"
            host = _Host(profile, switch_id if reactive else None)
            if profile.nf_type is NFType.AMF:
                host.cache = ConsumerCache(cfg.validity_us)
                self.amfs.append(host)
            self._add_host(host, reactive=reactive)

        if reactive:
            for switch_id in self.switches:
                for mod in self.controller.bootstrap_switch(switch_id):
                    self.switches[switch_id].install(mod.rule, 0)

        # registrations happen at scenario bring-up, before the workload:
        # counted, instantaneous, outside latency stats
        for profile in profiles:
            self.nrf.register(profile)
            if reactive and (cfg.controller_preseeded or not cfg.model_nrf_traffic):
                self.controller.observe_registration(profile)
            if cfg.model_nrf_traffic:
                self.metrics.count_emitted("registration")
                self.metrics.count_emitted("registration")
                self.metrics.delivered_packets += 2
                if reactive:
                    self.metrics.count_through_app("registration")
                    self.metrics.count_through_app("registration")

        if cfg.scenario is ScenarioKind.SDN_PROACTIVE:
            self._provision_proactive(profiles)

        if reactive and cfg.stats_interval_us is not None:
            for switch_id in self.switches:
                self.collectors[switch_id] = StatsCollector(Periodic(cfg.stats_interval_us))
                self._push(cfg.stats_interval_us, _EV_STATS_TICK, switch_id, None)
        if reactive and cfg.stats_threshold_bytes is not None:
            for switch_id in self.switches:
                self.collectors[switch_id] = StatsCollector(Threshold(cfg.stats_threshold_bytes))

        for ev in self.workload:
            self._push(
                ev.time_us, _EV_ATTACH if ev.kind == "attach" else _EV_DETACH, ev.user_id, None
            )

    def _add_host(self, host: _Host, reactive: bool) -> None:
        self.hosts[host.profile.endpoint] = host
        if reactive:
            table = FlowTable(
                host.switch_id,
                ports={LOCAL_PORT: str(host.profile.endpoint), UPLINK_PORT: "uplink"},
            )
            self.switches[host.switch_id] = table
            self.switch_host[host.switch_id] = host
            self.controller.register_switch(
                host.switch_id, host.profile.endpoint, host.profile.nf_type
            )

    def _provision_proactive(self, profiles: list[NFProfile]) -> None:
        """Pick one producer instance per (consumer, type) at bring-up.

        Proactive deployments pre-program the switch rules and configure
        consumers with permanently valid discovery results, so selection
        happens once here and no NRF or controller traffic occurs later.
        """
        cfg = self.config
        by_type: dict[NFType, list[NFProfile]] = {}
        for p in profiles:
            by_type.setdefault(p.nf_type, []).append(p)
        cursor: dict[NFType, int] = {}
        for amf in self.amfs:
            for target in (NFType.AUSF, NFType.SMF):
                if (NFType.AMF, target) not in cfg.authorization:
                    continue
                candidates = by_type.get(target, [])
                eligible = [p for p in candidates if p.load < cfg.overload_threshold]
                pool = eligible or candidates
                if not pool:
                    continue
                if cfg.policy == "least-load":
                    chosen = min(pool, key=lambda p: (p.load, p.instance_id))
                else:
                    k = cursor.get(target, 0)
                    chosen = pool[k % len(pool)]
                    cursor[target] = k + 1
                self._proactive_targets[(amf.profile.endpoint, target)] = chosen.endpoint

    # -- event plumbing --

    def _push(self, time_us: int, kind: int, a, b) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (time_us, self._seq, kind, a, b))

    def run(self) -> Metrics:
        duration = self.config.duration_us
        heap = self._heap
        while heap:
            time_us, _, kind, a, b = heapq.heappop(heap)
            if time_us >= duration:
                break
            self._now = time_us
            if kind == _EV_SW_ARRIVE:
                self._on_switch_arrive(a, b)
            elif kind == _EV_DELIVER:
                self._on_deliver(a, b)
            elif kind == _EV_PACKET_IN:
                self._on_packet_in(a, b)
            elif kind == _EV_FLOWMOD:
                self._on_flowmod(a, b)
            elif kind == _EV_PKTOUT:
                self._on_packet_out(a, b)
            elif kind == _EV_ATTACH:
                self._on_attach(a)
            elif kind == _EV_DETACH:
                self._on_detach(a)
            elif kind == _EV_RULE_CHECK:
                self._on_rule_check(a)
            elif kind == _EV_FLOW_REMOVED:
                self.controller.handle_flow_removed(a, time_us)
            elif kind == _EV_STATS_TICK:
                self._on_stats_tick(a)
            elif kind == _EV_STATS_REPORT:
                self.controller.handle_stats(a, time_us)
            else:  # pragma: no cover
                raise SimulationError(f"unknown event kind {kind}")
        return self.metrics

    # -- packet movement --

    @staticmethod
    def _category(msg: SBIMessage) -> str:
        if msg.kind in DISCOVERY_KINDS:
            return "discovery"
        if msg.kind in REGISTRATION_KINDS:
            return "registration"
        return "data"

    def _send(
        self, src: _Host, dst: Endpoint, msg: SBIMessage, category: Optional[str] = None
    ) -> None:
        """Emit one packet from an NF at the current time."""
        now = self._now
        pkt = Packet(src=src.profile.endpoint, dst=dst, message=msg, size_bytes=256, created_at=now)
        self.metrics.count_emitted(category or self._category(msg))
        hop = self.config.hop_us
        scenario = self.config.scenario
        if scenario is ScenarioKind.SDN_REACTIVE:
            self._push(now + hop, _EV_SW_ARRIVE, src.switch_id, pkt)
        elif scenario is ScenarioKind.DIRECT:
            self._deliver_later(pkt, now + 2 * hop)
        else:  # proactive: three fixed hops through the pre-programmed switches
            self._deliver_later(pkt, now + 3 * hop)

    def _deliver_later(self, pkt: Packet, at_us: int) -> None:
        host = self.hosts.get(pkt.dst)
        if host is None:
            self.metrics.count_dropped(self._category(pkt.message))
            return
        self._push(at_us, _EV_DELIVER, host, pkt)

    def _on_switch_arrive(self, switch_id: str, pkt: Packet) -> None:
        now = self._now
        table = self.switches[switch_id]
        rule_id = table.lookup(pkt, now)
        if rule_id is None:
            self._push(now + self.config.hop_us, _EV_PACKET_IN, switch_id, pkt)
            return
        collector = self.collectors.get(switch_id)
        if collector is not None:
            report = collector.after_traffic(table, now)
            if report is not None:
                self._push(now + self.config.hop_us, _EV_STATS_REPORT, report, None)
        out_pkt, terminal = table.apply(rule_id, pkt)
        self._route_terminal(switch_id, out_pkt, terminal)

    def _route_terminal(self, switch_id: str, pkt: Packet, terminal) -> None:
        now = self._now
        hop = self.config.hop_us
        if isinstance(terminal, ForwardOut):
            if terminal.port == LOCAL_PORT:
                host = self.switch_host[switch_id]
                if pkt.dst != host.profile.endpoint:
                    self.metrics.count_dropped(self._category(pkt.message))
                    return
                self._push(now + hop, _EV_DELIVER, host, pkt)
            else:
                nxt = self.controller.switch_for(pkt.dst) if self.controller else None
                if nxt is None:
                    self.metrics.count_dropped(self._category(pkt.message))
                    return
                self._push(now + hop, _EV_SW_ARRIVE, nxt, pkt)
        elif isinstance(terminal, SendToController):
            self._push(now + hop, _EV_PACKET_IN, switch_id, pkt)
        elif isinstance(terminal, Drop):
            self.metrics.count_dropped(self._category(pkt.message))
        else:  # pragma: no cover
            raise SimulationError(f"unroutable terminal {terminal!r}")

    def _on_packet_in(self, switch_id: str, pkt: Packet) -> None:
        now = self._now
        hop = self.config.hop_us
        messages = self.controller.handle_packet_in(PacketIn(switch_id=switch_id, packet=pkt), now)
        for msg in messages:
            if isinstance(msg, FlowMod):
                self._push(now + hop, _EV_FLOWMOD, msg.switch_id, msg.rule)
            else:
                self._push(
                    now + msg.delay_hops * hop, _EV_PKTOUT, msg.switch_id, (msg.packet, msg.actions)
                )

    def _on_flowmod(self, switch_id: str, rule) -> None:
        self.switches[switch_id].install(rule, self._now)
        self._arm_rule_check(switch_id)

    def _on_packet_out(self, switch_id: str, payload) -> None:
        pkt, actions = payload
        out_pkt, terminal = apply_actions(pkt, actions)
        self._route_terminal(switch_id, out_pkt, terminal)

    # -- rule expiry --

    def _arm_rule_check(self, switch_id: str) -> None:
        deadline = self.switches[switch_id].next_deadline()
        if deadline is None:
            return
        armed = self._check_armed.get(switch_id)
        if armed is not None and armed <= deadline:
            return
        self._check_armed[switch_id] = deadline
        self._push(deadline, _EV_RULE_CHECK, switch_id, None)

    def _on_rule_check(self, switch_id: str) -> None:
        now = self._now
        if self._check_armed.get(switch_id) != now:
            return  # superseded by an earlier re-arm
        self._check_armed.pop(switch_id, None)
        removals = self.switches[switch_id].expire_rules(now)
        hop = self.config.hop_us
        for removal in removals:
            self._push(now + hop, _EV_FLOW_REMOVED, removal, None)
        self._arm_rule_check(switch_id)

    def _on_stats_tick(self, switch_id: str) -> None:
        table = self.switches.get(switch_id)
        collector = self.collectors.get(switch_id)
        if table is None or collector is None:
            return
        report = collector.on_tick(table, self._now)
        if report is not None:
            self._push(self._now + self.config.hop_us, _EV_STATS_REPORT, report, None)
        interval = self.config.stats_interval_us
        if interval is not None:
            self._push(self._now + interval, _EV_STATS_TICK, switch_id, None)

    # -- NF behaviour --

    def _on_deliver(self, host: _Host, pkt: Packet) -> None:
        now = self._now
        self.metrics.delivered_packets += 1
        self.metrics.latencies_us.append(now - pkt.created_at)
        msg = pkt.message
        nf_type = host.profile.nf_type
        if nf_type is NFType.NRF:
            response = self.nrf.handle_message(msg)
            category = "registration" if msg.kind in REGISTRATION_KINDS else "discovery"
            self._send(host, pkt.src, response, category)
            return
        if nf_type is NFType.AMF:
            self._amf_receive(host, pkt)
            return
        # producer instance: answer the request in zero service time
        response_kind = RESPONSE_KIND.get(msg.kind)
        if response_kind is None:
            self.metrics.count_dropped(self._category(msg))
            return
        self._send(
            host, pkt.src, SBIMessage(kind=response_kind, correlation_id=msg.correlation_id), "data"
        )

    def _amf_receive(self, host: _Host, pkt: Packet) -> None:
        now = self._now
        msg = pkt.message
        flow = host.flows.get(msg.correlation_id)
        if flow is None:
            return
        if msg.kind is MsgKind.ERROR:
            host.flows.pop(flow.corr, None)
            self.metrics.failed_flows += 1
            return
        if msg.kind is MsgKind.DISCOVERY_RESPONSE:
            endpoint = msg.endpoints[0]
            host.cache.store(msg.target_type, endpoint, now)
            flow.resolved[msg.target_type] = endpoint
            flow.idx += 1
            self._flow_proceed(host, flow)
            return
        step = flow.steps[flow.idx]
        if isinstance(step, Request) and msg.kind is RESPONSE_KIND.get(step.kind):
            flow.idx += 1
            self._flow_proceed(host, flow)

    def _flow_proceed(self, host: _Host, flow: _Flow) -> None:
        cfg = self.config
        now = self._now
        while flow.idx < len(flow.steps):
            step = flow.steps[flow.idx]
            if isinstance(step, Resolve):
                if step.target in flow.resolved:
                    flow.idx += 1
                    continue
                preset = self._preconfigured_endpoint(host, step.target)
                if preset is not None:
                    flow.resolved[step.target] = preset
                    flow.idx += 1
                    continue
                if not cfg.model_nrf_traffic or cfg.scenario is ScenarioKind.SDN_PROACTIVE:
                    # nothing provisioned for this target and no discovery
                    # plane to fall back to: the flow cannot proceed
                    host.flows.pop(flow.corr, None)
                    self.metrics.failed_flows += 1
                    return
                cached = host.cache.resolve(step.target, now)
                if cached is not None:
                    flow.resolved[step.target] = cached
                    flow.idx += 1
                    continue
                self._send(
                    host,
                    self.nrf.endpoint,
                    SBIMessage(
                        kind=MsgKind.DISCOVERY_REQUEST,
                        correlation_id=flow.corr,
                        target_type=step.target,
                    ),
                )
                return
            # request step
            dst = flow.resolved[step.target]
            self._send(
                host,
                dst,
                SBIMessage(
                    kind=step.kind,
                    correlation_id=flow.corr,
                    binding_required=cfg.binding_required,
                ),
            )
            return
        # flow complete
        host.flows.pop(flow.corr, None)
        if flow.is_attach:
            host.attached.add(flow.user_id)
            self.metrics.attaches_completed += 1
        else:
            self.metrics.detaches_completed += 1

    def _preconfigured_endpoint(self, host: _Host, target: NFType) -> Optional[Endpoint]:
        cfg = self.config
        if cfg.scenario is ScenarioKind.SDN_PROACTIVE:
            return self._proactive_targets.get((host.profile.endpoint, target))
        if not cfg.model_nrf_traffic:
            if cfg.scenario is ScenarioKind.SDN_REACTIVE:
                return self.controller.mains.main_for(target)
            profiles = self.nrf.discover(target)
            return profiles[0].endpoint if profiles else None
        return None

    # -- workload --

    def _amf_of(self, user_id: int) -> _Host:
        return self.amfs[user_id % len(self.amfs)]

    def _on_attach(self, user_id: int) -> None:
        host = self._amf_of(user_id)
        self._corr += 1
        flow = _Flow(self._corr, user_id, host, ATTACH_STEPS, is_attach=True)
        host.flows[flow.corr] = flow
        self._flow_proceed(host, flow)

    def _on_detach(self, user_id: int) -> None:
        host = self._amf_of(user_id)
        if user_id not in host.attached:
            return  # the attach failed; there is no session to tear down
        host.attached.discard(user_id)
        self._corr += 1
        flow = _Flow(self._corr, user_id, host, DETACH_STEPS, is_attach=False)
        host.flows[flow.corr] = flow
        self._flow_proceed(host, flow)


def run(config: SignalingConfig, workload: Optional[list[WorkloadEvent]] = None) -> Metrics:
    """Build and run one signaling simulation."""
    return SignalingSimulation(config, workload).run()
