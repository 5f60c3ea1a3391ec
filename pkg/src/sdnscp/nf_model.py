"""Network-function models: NF types, SBI messages, NRF, and call flows.

This layer knows nothing about switches or the controller; it describes
which messages the functions exchange and how the NRF registry behaves.
The simulator binds these pieces to a topology and a clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from sdnscp.flow_engine import Endpoint


class NFType(str, Enum):
    NRF = "NRF"
    AMF = "AMF"
    AUSF = "AUSF"
    SMF = "SMF"


#: NF types that register with the NRF and may be discovered.
PRODUCER_CAPABLE_TYPES = (NFType.AMF, NFType.AUSF, NFType.SMF)


class MsgKind(str, Enum):
    # registration plane
    REGISTER = "Register"
    REGISTER_ACK = "RegisterAck"
    DEREGISTER = "Deregister"
    DEREGISTER_ACK = "DeregisterAck"
    DISCOVERY_REQUEST = "DiscoveryRequest"
    DISCOVERY_RESPONSE = "DiscoveryResponse"
    # attach signaling
    AUTHENTICATION_REQUEST = "AuthenticationRequest"
    AUTHENTICATION_REPLY = "AuthenticationReply"
    LOCATION_UPDATE_REQUEST = "LocationUpdateRequest"
    LOCATION_UPDATE_REPLY = "LocationUpdateReply"
    SESSION_REQUEST = "SessionRequest"
    SESSION_RESPONSE = "SessionResponse"
    MODIFY_BEARER_REQUEST = "ModifyBearerRequest"
    MODIFY_BEARER_RESPONSE = "ModifyBearerResponse"
    # detach signaling
    DETACH_REQUEST = "DetachRequest"
    DETACH_RESPONSE = "DetachResponse"
    ERROR = "Error"


#: request kind -> the kind of its success response
RESPONSE_KIND: dict[MsgKind, MsgKind] = {
    MsgKind.REGISTER: MsgKind.REGISTER_ACK,
    MsgKind.DEREGISTER: MsgKind.DEREGISTER_ACK,
    MsgKind.DISCOVERY_REQUEST: MsgKind.DISCOVERY_RESPONSE,
    MsgKind.AUTHENTICATION_REQUEST: MsgKind.AUTHENTICATION_REPLY,
    MsgKind.LOCATION_UPDATE_REQUEST: MsgKind.LOCATION_UPDATE_REPLY,
    MsgKind.SESSION_REQUEST: MsgKind.SESSION_RESPONSE,
    MsgKind.MODIFY_BEARER_REQUEST: MsgKind.MODIFY_BEARER_RESPONSE,
    MsgKind.DETACH_REQUEST: MsgKind.DETACH_RESPONSE,
}

REGISTRATION_KINDS = frozenset(
    {MsgKind.REGISTER, MsgKind.REGISTER_ACK, MsgKind.DEREGISTER, MsgKind.DEREGISTER_ACK}
)
DISCOVERY_KINDS = frozenset({MsgKind.DISCOVERY_REQUEST, MsgKind.DISCOVERY_RESPONSE})
DATA_KINDS = frozenset(MsgKind) - REGISTRATION_KINDS - DISCOVERY_KINDS - {MsgKind.ERROR}


class SbiError(Exception):
    """SBI-level failure carrying a short machine-readable code."""

    def __init__(self, code: str, detail: str = "") -> None:
        super().__init__(detail or code)
        self.code = code


@dataclass(frozen=True)
class SBIMessage:
    """Payload of one control-plane packet.

    ``correlation_id`` ties a response to its request; ``target_type`` is
    set on discovery requests, ``endpoints`` on discovery responses, and
    ``profile`` on registrations.  ``binding_required`` asks the routing
    layer to keep subsequent messages of this flow on one producer
    instance.
    """

    kind: MsgKind
    correlation_id: int = 0
    target_type: Optional[NFType] = None
    endpoints: tuple[Endpoint, ...] = ()
    profile: Optional["NFProfile"] = None
    binding_required: bool = False
    error_code: Optional[str] = None


@dataclass
class NFProfile:
    """Registration record of one NF instance.

    ``load`` is a 0-100 utilisation indicator used by producer selection;
    ``capacity`` is an abstract size used only for reporting.
    """

    instance_id: int
    nf_type: NFType
    endpoint: Endpoint
    load: int = 0
    capacity: int = 100
    status: str = "registered"

    def __post_init__(self) -> None:
        if not 0 <= self.load <= 100:
            raise ValueError(f"load must be within 0..100, got {self.load}")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")


class Nrf:
    """The NF repository: register, deregister, discover.

    Registration is idempotent per instance id only in the sense that
    re-registering an existing id replaces its profile.  Discovery returns
    registered profiles of the requested type in registration order, which
    keeps selection deterministic.
    """

    def __init__(self, endpoint: Endpoint) -> None:
        self.endpoint = endpoint
        self._profiles: dict[int, NFProfile] = {}
        self._order: list[int] = []

    def register(self, profile: NFProfile) -> None:
        if profile.nf_type is NFType.NRF:
            raise SbiError("invalid_type", "the NRF does not register itself")
        if profile.instance_id not in self._profiles:
            self._order.append(profile.instance_id)
        self._profiles[profile.instance_id] = profile

    def deregister(self, instance_id: int) -> None:
        if instance_id not in self._profiles:
            raise SbiError("not_found", f"unknown instance {instance_id}")
        del self._profiles[instance_id]
        self._order.remove(instance_id)

    def discover(self, nf_type: NFType) -> list[NFProfile]:
        return [
            self._profiles[iid]
            for iid in self._order
            if self._profiles[iid].nf_type is nf_type
        ]

    def profiles(self) -> list[NFProfile]:
        return [self._profiles[iid] for iid in self._order]

    def handle_message(self, msg: SBIMessage) -> SBIMessage:
        """Serve one SBI request, returning the response message."""
        if msg.kind is MsgKind.REGISTER:
            assert msg.profile is not None, "register carries a profile"
            self.register(msg.profile)
            return SBIMessage(kind=MsgKind.REGISTER_ACK, correlation_id=msg.correlation_id)
        if msg.kind is MsgKind.DEREGISTER:
            assert msg.profile is not None, "deregister carries a profile"
            try:
                self.deregister(msg.profile.instance_id)
            except SbiError as exc:
                return SBIMessage(
                    kind=MsgKind.ERROR, correlation_id=msg.correlation_id, error_code=exc.code
                )
            return SBIMessage(kind=MsgKind.DEREGISTER_ACK, correlation_id=msg.correlation_id)
        if msg.kind is MsgKind.DISCOVERY_REQUEST:
            assert msg.target_type is not None, "discovery names a target type"
            found = self.discover(msg.target_type)
            if not found:
                return SBIMessage(
                    kind=MsgKind.ERROR, correlation_id=msg.correlation_id, error_code="not_found"
                )
            return SBIMessage(
                kind=MsgKind.DISCOVERY_RESPONSE,
                correlation_id=msg.correlation_id,
                target_type=msg.target_type,
                endpoints=tuple(p.endpoint for p in found),
            )
        raise SbiError("unsupported", f"NRF cannot serve {msg.kind}")


@dataclass
class ConsumerCacheEntry:
    endpoint: Endpoint
    fetched_at: Union[int, float]


class ConsumerCache:
    """Consumer-side cache of discovery results with a validity period.

    An entry is usable strictly within ``validity`` of its fetch time; at
    exactly the boundary it is stale and a fresh discovery is required.
    ``validity=None`` means results never expire.
    """

    def __init__(self, validity: Optional[Union[int, float]]) -> None:
        if validity is not None and validity <= 0:
            raise ValueError("cache validity must be positive")
        self.validity = validity
        self._entries: dict[NFType, ConsumerCacheEntry] = {}

    def store(self, nf_type: NFType, endpoint: Endpoint, now: Union[int, float]) -> None:
        self._entries[nf_type] = ConsumerCacheEntry(endpoint=endpoint, fetched_at=now)

    def resolve(self, nf_type: NFType, now: Union[int, float]) -> Optional[Endpoint]:
        entry = self._entries.get(nf_type)
        if entry is None:
            return None
        if self.validity is not None and now - entry.fetched_at >= self.validity:
            del self._entries[nf_type]
            return None
        return entry.endpoint


# --- call flows ---------------------------------------------------------------


@dataclass(frozen=True)
class Resolve:
    """Call-flow step: obtain a producer endpoint for ``target`` (cache or discovery)."""

    target: NFType


@dataclass(frozen=True)
class Request:
    """Call-flow step: send ``kind`` to the resolved ``target`` and await the response."""

    kind: MsgKind
    target: NFType


CallFlowStep = Union[Resolve, Request]

#: UE attach: authentication and location update against the AUSF, then
#: session establishment and bearer setup against the SMF.  Eight messages
#: on the wire when both caches are warm (four request/response pairs).
ATTACH_STEPS: tuple[CallFlowStep, ...] = (
    Resolve(NFType.AUSF),
    Request(MsgKind.AUTHENTICATION_REQUEST, NFType.AUSF),
    Request(MsgKind.LOCATION_UPDATE_REQUEST, NFType.AUSF),
    Resolve(NFType.SMF),
    Request(MsgKind.SESSION_REQUEST, NFType.SMF),
    Request(MsgKind.MODIFY_BEARER_REQUEST, NFType.SMF),
)

#: UE detach: one request/response pair against the SMF.
DETACH_STEPS: tuple[CallFlowStep, ...] = (
    Resolve(NFType.SMF),
    Request(MsgKind.DETACH_REQUEST, NFType.SMF),
)


def attach_call_flow() -> tuple[CallFlowStep, ...]:
    return ATTACH_STEPS


def detach_call_flow() -> tuple[CallFlowStep, ...]:
    return DETACH_STEPS


def call_flow_message_count(steps: tuple[CallFlowStep, ...]) -> int:
    """Messages on the wire for ``steps`` when every Resolve hits the cache."""
    return sum(2 for s in steps if isinstance(s, Request))
