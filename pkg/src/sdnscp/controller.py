"""SDN controller application that replaces the service communication proxy.

The controller owns one *main* (virtual) endpoint per discoverable NF type.
Consumers only ever learn main endpoints; the controller reactively installs
translation rule pairs that NAT a main endpoint to a concrete producer
instance on the consumer's switch and plain forwarding rules on the
producer's switch.  NRF-bound traffic is trapped to the controller, which
answers discovery itself (delegated discovery) and relays registrations.

All handlers are pure with respect to time: they take ``now`` from the
caller and return the control messages to emit, so the simulator decides
when each message lands.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from sdnscp.flow_engine import (
    Action,
    Endpoint,
    FlowRemoved,
    FlowRule,
    FlowStatsReport,
    ForwardOut,
    MatchCriteria,
    Packet,
    RewriteDst,
    RewriteSrc,
    SendToController,
)
from sdnscp.nf_model import (
    MsgKind,
    NFProfile,
    NFType,
    Nrf,
    PRODUCER_CAPABLE_TYPES,
    SBIMessage,
)

#: Switch port conventions: every switch fronts exactly one NF.
LOCAL_PORT = 1
UPLINK_PORT = 2

NRF_TRAP_PRIORITY = 100
TRANSLATION_PRIORITY = 10

#: Address block the main (virtual) endpoints are minted from.  It is
#: reserved, so it can never collide with a real NF instance address.
MAIN_ADDRESS_BLOCK = "198.51.100"
MAIN_PORT = 8080


class SelectionError(Exception):
    """Producer selection failed; ``code`` is an SBI error code."""

    def __init__(self, code: str, detail: str = "") -> None:
        super().__init__(detail or code)
        self.code = code


@dataclass(frozen=True)
class PacketIn:
    """A packet punted to the controller by a switch."""

    switch_id: str
    packet: Packet


@dataclass(frozen=True)
class FlowMod:
    """Install ``rule`` on ``switch_id``."""

    switch_id: str
    rule: FlowRule


@dataclass(frozen=True)
class PacketOut:
    """Apply ``actions`` to ``packet`` at ``switch_id``.

    ``delay_hops`` is the control-channel distance this message has to
    cover; the plain case is one hop, a discovery answered only after an
    NRF round trip needs three.
    """

    switch_id: str
    packet: Packet
    actions: tuple[Action, ...]
    delay_hops: int = 1


ControlMessage = Union[FlowMod, PacketOut]


@dataclass(frozen=True)
class ControllerEvent:
    """Trace record for tests and debugging."""

    time: Union[int, float]
    kind: str
    detail: dict


class MainEndpointRegistry:
    """Mints and resolves the virtual main endpoint of each NF type."""

    def __init__(self, nf_types: tuple[NFType, ...] = PRODUCER_CAPABLE_TYPES) -> None:
        self._by_type: dict[NFType, Endpoint] = {}
        self._by_endpoint: dict[Endpoint, NFType] = {}
        for i, nf_type in enumerate(nf_types, start=1):
            ep = Endpoint(address=f"{MAIN_ADDRESS_BLOCK}.{i}", port=MAIN_PORT)
            self._by_type[nf_type] = ep
            self._by_endpoint[ep] = nf_type

    def main_for(self, nf_type: NFType) -> Endpoint:
        return self._by_type[nf_type]

    def type_for(self, endpoint: Endpoint) -> Optional[NFType]:
        return self._by_endpoint.get(endpoint)

    def all_mains(self) -> tuple[Endpoint, ...]:
        return tuple(self._by_type.values())


class AuthorizationMatrix:
    """Which (consumer type, producer type) pairs may communicate.

    Pairs must be asymmetric: allowing both A->B and B->A would give the
    request rule of one pair and the response rule of the other an
    identical match at the same switch, so the translation scheme could
    no longer tell the two directions apart.
    """

    def __init__(self, pairs: frozenset[tuple[NFType, NFType]]) -> None:
        for consumer, producer in pairs:
            if (producer, consumer) in pairs:
                raise ValueError(
                    f"mutual authorization {consumer.value}<->{producer.value} "
                    "would make request and response translation rules collide"
                )
        self.pairs = pairs

    @classmethod
    def from_pairs(cls, pairs) -> "AuthorizationMatrix":
        out = set()
        for item in pairs:
            if isinstance(item, str):
                left, _, right = item.partition(":")
                out.add((NFType(left.strip()), NFType(right.strip())))
            else:
                consumer, producer = item
                out.add((NFType(consumer), NFType(producer)))
        return cls(frozenset(out))

    def allows(self, consumer: NFType, producer: NFType) -> bool:
        return (consumer, producer) in self.pairs


#: Default matrix for the attach/detach workload.
DEFAULT_AUTHORIZATION = AuthorizationMatrix(
    frozenset({(NFType.AMF, NFType.AUSF), (NFType.AMF, NFType.SMF)})
)


@dataclass
class InstalledPair:
    """Controller-side record of one translation pair installation."""

    consumer_switch: str
    consumer_endpoint: Endpoint
    producer_switch: str
    producer_type: NFType
    instance_id: int
    rule_ids: tuple[int, ...] = ()


class Controller:
    """The SDN application: delegated discovery plus reactive translation rules.

    ``metrics`` is an optional sink with ``count_emitted(category)``,
    ``count_through_app(category)``, ``count_dropped(category)`` and
    ``count_nrf_query(n)`` methods; the simulator supplies one, unit tests
    may pass None.  ``hard_timeout``/``idle_timeout`` are in the same time
    unit the caller uses for ``now``.
    """

    def __init__(
        self,
        nrf: Nrf,
        authorization: AuthorizationMatrix = DEFAULT_AUTHORIZATION,
        policy: str = "round-robin",
        overload_threshold: int = 90,
        hard_timeout: Optional[Union[int, float]] = None,
        idle_timeout: Optional[Union[int, float]] = None,
        metrics: Optional[object] = None,
        record_events: bool = False,
    ) -> None:
        if policy not in ("round-robin", "least-load"):
            raise ValueError(f"unknown selection policy: {policy}")
        if not 0 < overload_threshold <= 100:
            raise ValueError("overload threshold must be within 1..100")
        self.nrf = nrf
        self.authorization = authorization
        self.policy = policy
        self.overload_threshold = overload_threshold
        self.hard_timeout = hard_timeout
        self.idle_timeout = idle_timeout
        self.metrics = metrics
        self.record_events = record_events

        self.mains = MainEndpointRegistry()
        self.events: list[ControllerEvent] = []
        self.nrf_query_count = 0

        # static topology knowledge, filled by register_switch
        self._switch_host: dict[str, tuple[Endpoint, NFType]] = {}
        self._switch_of_endpoint: dict[Endpoint, str] = {}

        # discovery cache: profiles per type, with a fetched marker so a
        # confirmed-empty answer is cached too
        self._profiles: dict[NFType, list[NFProfile]] = {}
        self._fetched: set[NFType] = set()

        self._rr_cursor: dict[NFType, int] = {}
        self._bindings: dict[tuple[Endpoint, NFType], int] = {}
        self._observed_bytes: dict[int, int] = {}
        self._rule_pairs: dict[tuple[str, int], InstalledPair] = {}
        self._next_rule_id = 1

    # -- trace helpers --

    def _log(self, now: Union[int, float], kind: str, **detail) -> None:
        if self.record_events:
            self.events.append(ControllerEvent(time=now, kind=kind, detail=detail))

    def _count(self, method: str, *args) -> None:
        if self.metrics is not None:
            getattr(self.metrics, method)(*args)

    # -- topology --

    def register_switch(self, switch_id: str, host_endpoint: Endpoint, host_type: NFType) -> None:
        """Record that ``switch_id`` fronts the NF at ``host_endpoint``."""
        self._switch_host[switch_id] = (host_endpoint, host_type)
        self._switch_of_endpoint[host_endpoint] = switch_id

    def switch_for(self, endpoint: Endpoint) -> Optional[str]:
        return self._switch_of_endpoint.get(endpoint)

    def bootstrap_switch(self, switch_id: str) -> list[ControlMessage]:
        """Initial rules for a switch: trap all NRF-bound packets."""
        if switch_id not in self._switch_host:
            raise KeyError(f"unknown switch: {switch_id}")
        trap = FlowRule(
            priority=NRF_TRAP_PRIORITY,
            match=MatchCriteria.for_dst(self.nrf.endpoint),
            actions=(SendToController(),),
            rule_id=self._mint_rule_id(),
        )
        return [FlowMod(switch_id=switch_id, rule=trap)]

    def _mint_rule_id(self) -> int:
        rid = self._next_rule_id
        self._next_rule_id += 1
        return rid

    # -- registry observation --

    def observe_registration(self, profile: NFProfile) -> None:
        """Learn a registration without an NRF query (the relay passes through us)."""
        bucket = self._profiles.setdefault(profile.nf_type, [])
        for i, existing in enumerate(bucket):
            if existing.instance_id == profile.instance_id:
                bucket[i] = profile
                break
        else:
            bucket.append(profile)
        self._fetched.add(profile.nf_type)

    def observe_deregistration(self, instance_id: int) -> None:
        for bucket in self._profiles.values():
            for i, existing in enumerate(bucket):
                if existing.instance_id == instance_id:
                    del bucket[i]
                    break
        self._bindings = {k: v for k, v in self._bindings.items() if v != instance_id}

    def _ensure_profiles(self, nf_type: NFType) -> tuple[list[NFProfile], bool]:
        """Profiles of ``nf_type``, querying the NRF on a cache miss.

        Returns (profiles, queried).  A query costs one request/response
        pair on the controller-NRF channel, which the metrics sink counts.
        """
        if nf_type in self._fetched:
            return self._profiles.get(nf_type, []), False
        profiles = self.nrf.discover(nf_type)
        self._profiles[nf_type] = list(profiles)
        self._fetched.add(nf_type)
        self.nrf_query_count += 2
        self._count("count_nrf_query", 2)
        return self._profiles[nf_type], True

    # -- selection --

    def authorize(self, consumer: NFType, producer: NFType) -> bool:
        return self.authorization.allows(consumer, producer)

    def select_producer(
        self,
        nf_type: NFType,
        now: Union[int, float],
        consumer_endpoint: Optional[Endpoint] = None,
        binding_required: bool = False,
    ) -> NFProfile:
        """Pick a producer instance of ``nf_type`` per the configured policy.

        Instances at or above the overload threshold are skipped; if all
        are, selection fails with ``overloaded``.  A binding-required flow
        sticks to its first instance across rule expiries.
        """
        profiles, _ = self._ensure_profiles(nf_type)
        if not profiles:
            raise SelectionError("not_found", f"no registered {nf_type.value}")

        if binding_required and consumer_endpoint is not None:
            bound = self._bindings.get((consumer_endpoint, nf_type))
            if bound is not None:
                for p in profiles:
                    if p.instance_id == bound:
                        return p

        eligible = [p for p in profiles if p.load < self.overload_threshold]
        if not eligible:
            raise SelectionError("overloaded", f"all {nf_type.value} instances saturated")

        if self.policy == "least-load":
            chosen = min(
                eligible,
                key=lambda p: (p.load, self._observed_bytes.get(p.instance_id, 0), p.instance_id),
            )
        else:
            cursor = self._rr_cursor.get(nf_type, 0)
            chosen = eligible[cursor % len(eligible)]
            self._rr_cursor[nf_type] = (cursor + 1) % len(eligible)

        if binding_required and consumer_endpoint is not None:
            self._bindings[(consumer_endpoint, nf_type)] = chosen.instance_id
        return chosen

    # -- rule fabrication --

    def install_translation_pair(
        self,
        consumer_switch: str,
        consumer_endpoint: Endpoint,
        producer_type: NFType,
        instance: NFProfile,
        now: Union[int, float],
    ) -> list[FlowMod]:
        """Four FlowMods realising main-endpoint NAT for one consumer/producer pair.

        Consumer switch: requests to the main endpoint are rewritten to the
        instance and sent uplink; responses from the instance are rewritten
        back to the main endpoint and delivered locally.  Producer switch:
        plain forwarding both ways.
        """
        main = self.mains.main_for(producer_type)
        producer_switch = self._switch_of_endpoint[instance.endpoint]
        mods = []
        specs = [
            (
                consumer_switch,
                MatchCriteria.for_pair(consumer_endpoint, main),
                (RewriteDst(instance.endpoint), ForwardOut(UPLINK_PORT)),
            ),
            (
                consumer_switch,
                MatchCriteria.for_pair(instance.endpoint, consumer_endpoint),
                (RewriteSrc(main), ForwardOut(LOCAL_PORT)),
            ),
            (
                producer_switch,
                MatchCriteria.for_pair(consumer_endpoint, instance.endpoint),
                (ForwardOut(LOCAL_PORT),),
            ),
            (
                producer_switch,
                MatchCriteria.for_pair(instance.endpoint, consumer_endpoint),
                (ForwardOut(UPLINK_PORT),),
            ),
        ]
        rule_ids = []
        pair = InstalledPair(
            consumer_switch=consumer_switch,
            consumer_endpoint=consumer_endpoint,
            producer_switch=producer_switch,
            producer_type=producer_type,
            instance_id=instance.instance_id,
        )
        for switch_id, match, actions in specs:
            rule = FlowRule(
                priority=TRANSLATION_PRIORITY,
                match=match,
                actions=actions,
                idle_timeout=self.idle_timeout,
                hard_timeout=self.hard_timeout,
                rule_id=self._mint_rule_id(),
            )
            rule_ids.append(rule.rule_id)
            self._rule_pairs[(switch_id, rule.rule_id)] = pair
            mods.append(FlowMod(switch_id=switch_id, rule=rule))
        pair.rule_ids = tuple(rule_ids)
        self._log(
            now,
            "install_pair",
            consumer=str(consumer_endpoint),
            producer_type=producer_type.value,
            instance_id=instance.instance_id,
        )
        return mods

    # -- packet-in handling --

    def handle_packet_in(self, event: PacketIn, now: Union[int, float]) -> list[ControlMessage]:
        """Dispatch a punted packet: NRF-bound, NRF-origin, or data-path."""
        packet = event.packet
        self._count("count_through_app", self._category_of(packet))
        if packet.dst == self.nrf.endpoint:
            return self.handle_nrf_bound(event, now)
        if packet.src == self.nrf.endpoint:
            return self._relay_nrf_origin(event, now)
        return self._handle_data_packet(event, now)

    @staticmethod
    def _category_of(packet: Packet) -> str:
        msg = packet.message
        if isinstance(msg, SBIMessage):
            if msg.kind in (MsgKind.DISCOVERY_REQUEST, MsgKind.DISCOVERY_RESPONSE):
                return "discovery"
            if msg.kind in (
                MsgKind.REGISTER,
                MsgKind.REGISTER_ACK,
                MsgKind.DEREGISTER,
                MsgKind.DEREGISTER_ACK,
            ):
                return "registration"
        return "data"

    def _error_reply(
        self,
        event: PacketIn,
        reply_src: Endpoint,
        code: str,
        now: Union[int, float],
        category: str,
        delay_hops: int = 1,
    ) -> PacketOut:
        """Build an error PacketOut back to the sender, keeping it transparent.

        The reply's source is the endpoint the consumer addressed (main or
        NRF), never a concrete instance.  The reply is a controller-born
        packet: it counts as emitted and as through-the-app.
        """
        request = event.packet
        msg = request.message
        corr = msg.correlation_id if isinstance(msg, SBIMessage) else 0
        reply = Packet(
            src=reply_src,
            dst=request.src,
            message=SBIMessage(kind=MsgKind.ERROR, correlation_id=corr, error_code=code),
            size_bytes=request.size_bytes,
            created_at=now,
        )
        self._count("count_emitted", category)
        self._count("count_through_app", category)
        self._log(now, "deny", code=code, src=str(request.src), dst=str(request.dst))
        return PacketOut(
            switch_id=event.switch_id,
            packet=reply,
            actions=(ForwardOut(LOCAL_PORT),),
            delay_hops=delay_hops,
        )

    def handle_nrf_bound(self, event: PacketIn, now: Union[int, float]) -> list[ControlMessage]:
        """Serve a trapped NRF-bound packet on the NRF's behalf.

        Discovery is answered directly with exactly one endpoint, the main
        endpoint of the requested type.  Registrations update the local
        registry and are relayed onwards to the real NRF.
        """
        packet = event.packet
        msg = packet.message
        assert isinstance(msg, SBIMessage), "NRF-bound packets carry SBI messages"

        if msg.kind is MsgKind.DISCOVERY_REQUEST:
            assert msg.target_type is not None
            # the request is absorbed here: the controller answers on the
            # NRF's behalf, so the request counts as consumed, not dropped
            self._count("count_consumed", "discovery")
            host = self._switch_host.get(event.switch_id)
            consumer_type = host[1] if host else None
            if consumer_type is None or not self.authorize(consumer_type, msg.target_type):
                return [self._error_reply(event, self.nrf.endpoint, "unauthorized", now, "discovery")]
            profiles, queried = self._ensure_profiles(msg.target_type)
            delay = 3 if queried else 1
            if not profiles:
                return [
                    self._error_reply(
                        event, self.nrf.endpoint, "not_found", now, "discovery", delay_hops=delay
                    )
                ]
            response = Packet(
                src=self.nrf.endpoint,
                dst=packet.src,
                message=SBIMessage(
                    kind=MsgKind.DISCOVERY_RESPONSE,
                    correlation_id=msg.correlation_id,
                    target_type=msg.target_type,
                    endpoints=(self.mains.main_for(msg.target_type),),
                ),
                size_bytes=packet.size_bytes,
                created_at=now,
            )
            self._count("count_emitted", "discovery")
            self._count("count_through_app", "discovery")
            self._log(
                now,
                "discovery_response",
                consumer=str(packet.src),
                target=msg.target_type.value,
                endpoints=[str(e) for e in response.message.endpoints],
            )
            return [
                PacketOut(
                    switch_id=event.switch_id,
                    packet=response,
                    actions=(ForwardOut(LOCAL_PORT),),
                    delay_hops=delay,
                )
            ]

        if msg.kind in (MsgKind.REGISTER, MsgKind.DEREGISTER):
            if msg.kind is MsgKind.REGISTER and msg.profile is not None:
                self.observe_registration(msg.profile)
            if msg.kind is MsgKind.DEREGISTER and msg.profile is not None:
                self.observe_deregistration(msg.profile.instance_id)
            nrf_switch = self._switch_of_endpoint.get(self.nrf.endpoint)
            if nrf_switch is None:
                return []
            self._log(now, "relay_registration", message_kind=msg.kind.value)
            return [
                PacketOut(
                    switch_id=nrf_switch, packet=packet, actions=(ForwardOut(LOCAL_PORT),)
                )
            ]

        # anything else aimed at the NRF is dropped as unsupported
        self._count("count_dropped", "data")
        self._log(now, "drop_unsupported", message_kind=str(getattr(msg, "kind", None)))
        return []

    def _relay_nrf_origin(self, event: PacketIn, now: Union[int, float]) -> list[ControlMessage]:
        """Forward an NRF-emitted response to the switch of its destination."""
        packet = event.packet
        dst_switch = self._switch_of_endpoint.get(packet.dst)
        if dst_switch is None:
            self._count("count_dropped", self._category_of(packet))
            return []
        return [PacketOut(switch_id=dst_switch, packet=packet, actions=(ForwardOut(LOCAL_PORT),))]

    def _handle_data_packet(self, event: PacketIn, now: Union[int, float]) -> list[ControlMessage]:
        """First packet of a flow (or a packet whose rules expired): route it.

        Requests to a main endpoint (re)install the translation pair and are
        replayed through the new consumer-side rule.  Packets already
        carrying concrete instance endpoints had their pair partially
        expire mid-flow; the pair is reinstalled and the packet replayed
        through the matching rule so it still reaches its destination.
        """
        packet = event.packet
        producer_type = self.mains.type_for(packet.dst)
        if producer_type is not None:
            return self._install_and_forward(event, packet.src, producer_type, now)

        # mid-flow repair: the packet already carries concrete instance
        # endpoints on both sides.  The authorized consumer->producer
        # direction tells a request from a response (the matrix is
        # asymmetric by construction).
        src_type = self._type_of_endpoint(packet.src)
        dst_type = self._type_of_endpoint(packet.dst)
        if src_type is not None and dst_type is not None:
            if self.authorize(src_type, dst_type):
                # request whose producer-side rule expired
                return self._repair_and_forward(
                    event, packet.src, dst_type, packet.dst, now, outbound=True
                )
            if self.authorize(dst_type, src_type):
                # response heading back to the consumer
                return self._repair_and_forward(
                    event, packet.dst, src_type, packet.src, now, outbound=False
                )

        self._count("count_dropped", self._category_of(packet))
        self._log(now, "drop_unroutable", src=str(packet.src), dst=str(packet.dst))
        return []

    def _type_of_endpoint(self, endpoint: Endpoint) -> Optional[NFType]:
        # topology knowledge, not registry state: the NF behind each switch
        # is known from bring-up even when its profiles were never fetched
        switch_id = self._switch_of_endpoint.get(endpoint)
        if switch_id is None:
            return None
        return self._switch_host[switch_id][1]

    def _instance_at(self, endpoint: Endpoint) -> NFProfile:
        for bucket in self._profiles.values():
            for p in bucket:
                if p.endpoint == endpoint:
                    return p
        raise KeyError(f"no registered instance at {endpoint}")

    def _consumer_context(self, consumer_endpoint: Endpoint) -> tuple[str, NFType]:
        switch_id = self._switch_of_endpoint.get(consumer_endpoint)
        if switch_id is None:
            raise KeyError(f"no switch for consumer {consumer_endpoint}")
        return switch_id, self._switch_host[switch_id][1]

    def _install_and_forward(
        self,
        event: PacketIn,
        consumer_endpoint: Endpoint,
        producer_type: NFType,
        now: Union[int, float],
    ) -> list[ControlMessage]:
        packet = event.packet
        main = self.mains.main_for(producer_type)
        try:
            consumer_switch, consumer_type = self._consumer_context(consumer_endpoint)
        except KeyError:
            self._count("count_dropped", "data")
            return []
        if not self.authorize(consumer_type, producer_type):
            self._count("count_dropped", "data")
            return [self._error_reply(event, main, "unauthorized", now, "data")]
        msg = packet.message
        binding = isinstance(msg, SBIMessage) and msg.binding_required
        try:
            instance = self.select_producer(
                producer_type, now, consumer_endpoint=consumer_endpoint, binding_required=binding
            )
        except SelectionError as exc:
            self._count("count_dropped", "data")
            return [self._error_reply(event, main, exc.code, now, "data")]
        mods = self.install_translation_pair(
            consumer_switch, consumer_endpoint, producer_type, instance, now
        )
        replay = PacketOut(
            switch_id=consumer_switch,
            packet=packet,
            actions=(RewriteDst(instance.endpoint), ForwardOut(UPLINK_PORT)),
        )
        return [*mods, replay]

    def _repair_and_forward(
        self,
        event: PacketIn,
        consumer_endpoint: Endpoint,
        producer_type: NFType,
        instance_endpoint: Endpoint,
        now: Union[int, float],
        outbound: bool,
    ) -> list[ControlMessage]:
        """Reinstall the pair for a packet already carrying instance endpoints.

        The packet keeps flowing to the instance it was already bound to,
        regardless of what a fresh selection would pick, so mid-flow
        expiry never silently re-routes an exchange in progress.
        """
        try:
            consumer_switch, _ = self._consumer_context(consumer_endpoint)
            instance = self._instance_at(instance_endpoint)
        except KeyError:
            self._count("count_dropped", "data")
            return []
        mods = self.install_translation_pair(
            consumer_switch, consumer_endpoint, producer_type, instance, now
        )
        if outbound:
            # a request punted at the producer switch: hand it to the NF
            replay = PacketOut(
                switch_id=event.switch_id, packet=event.packet, actions=(ForwardOut(LOCAL_PORT),)
            )
        else:
            # response path: the repair happened at either the producer or
            # the consumer switch; replay with that switch's own rule actions
            if event.switch_id == consumer_switch:
                main = self.mains.main_for(producer_type)
                replay = PacketOut(
                    switch_id=event.switch_id,
                    packet=event.packet,
                    actions=(RewriteSrc(main), ForwardOut(LOCAL_PORT)),
                )
            else:
                replay = PacketOut(
                    switch_id=event.switch_id, packet=event.packet, actions=(ForwardOut(UPLINK_PORT),)
                )
        return [*mods, replay]

    # -- switch notifications --

    def handle_flow_removed(self, notification: FlowRemoved, now: Union[int, float]) -> None:
        """Bookkeeping for an expired rule; reinstalling is left to the next packet."""
        self._rule_pairs.pop((notification.switch_id, notification.rule_id), None)
        self._log(
            now,
            "flow_removed",
            switch=notification.switch_id,
            rule_id=notification.rule_id,
            reason=notification.reason,
        )

    def handle_stats(self, report: FlowStatsReport, now: Union[int, float]) -> None:
        """Fold counter deltas into per-instance observed byte loads."""
        for entry in report.entries:
            pair = self._rule_pairs.get((report.switch_id, entry.rule_id))
            if pair is None or entry.delta_bytes <= 0:
                continue
            self._observed_bytes[pair.instance_id] = (
                self._observed_bytes.get(pair.instance_id, 0) + entry.delta_bytes
            )
        self._log(now, "stats", switch=report.switch_id, entries=len(report.entries))

    def observed_bytes(self, instance_id: int) -> int:
        return self._observed_bytes.get(instance_id, 0)
