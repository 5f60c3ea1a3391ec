"""Flow-table engine for the software switches sitting next to each network function.

A switch holds a priority-ordered table of match/action rules with per-rule
packet and byte counters and optional idle/hard expiry.  All operations take
the current time from the caller, so a table has no clock of its own and can
be replayed deterministically from an event trace.

Timestamps and timeouts are unit-agnostic numbers; the signaling simulator
uses integer microseconds, unit tests mostly use small integers or seconds.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union


class MalformedActionsError(ValueError):
    """Raised when an action list violates the one-terminal-last structure."""


@dataclass(frozen=True, order=True)
class Endpoint:
    """A service endpoint: network address plus transport port."""

    address: str
    port: int

    def __post_init__(self) -> None:
        if not self.address:
            raise ValueError("endpoint address must be non-empty")
        if not 0 < self.port < 65536:
            raise ValueError(f"endpoint port out of range: {self.port}")

    def __str__(self) -> str:
        return f"{self.address}:{self.port}"


@dataclass(frozen=True)
class Packet:
    """A control-plane packet as seen by a switch.

    The payload ``message`` is opaque at this layer; switches only look at
    the source/destination endpoints.  ``size_bytes`` feeds the byte
    counters and ``created_at`` lets the simulator compute delivery latency.
    """

    src: Endpoint
    dst: Endpoint
    message: object = None
    size_bytes: int = 256
    created_at: Union[int, float] = 0

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError("packet source and destination must differ")
        if self.size_bytes <= 0:
            raise ValueError("packet size must be positive")

    def with_dst(self, endpoint: Endpoint) -> "Packet":
        return replace(self, dst=endpoint)

    def with_src(self, endpoint: Endpoint) -> "Packet":
        return replace(self, src=endpoint)


@dataclass(frozen=True)
class MatchCriteria:
    """Packet match over source/destination endpoint fields.

    ``None`` fields are wildcards.  A rule matching nothing (all wildcards)
    is legal and matches every packet.
    """

    src_address: Optional[str] = None
    src_port: Optional[int] = None
    dst_address: Optional[str] = None
    dst_port: Optional[int] = None

    def matches(self, packet: Packet) -> bool:
        if self.src_address is not None and packet.src.address != self.src_address:
            return False
        if self.src_port is not None and packet.src.port != self.src_port:
            return False
        if self.dst_address is not None and packet.dst.address != self.dst_address:
            return False
        if self.dst_port is not None and packet.dst.port != self.dst_port:
            return False
        return True

    @classmethod
    def for_src(cls, endpoint: Endpoint) -> "MatchCriteria":
        return cls(src_address=endpoint.address, src_port=endpoint.port)

    @classmethod
    def for_dst(cls, endpoint: Endpoint) -> "MatchCriteria":
        return cls(dst_address=endpoint.address, dst_port=endpoint.port)

    @classmethod
    def for_pair(cls, src: Endpoint, dst: Endpoint) -> "MatchCriteria":
        return cls(
            src_address=src.address,
            src_port=src.port,
            dst_address=dst.address,
            dst_port=dst.port,
        )


# --- actions -----------------------------------------------------------------


@dataclass(frozen=True)
class RewriteDst:
    """Rewrite the destination endpoint (NAT towards a concrete instance)."""

    endpoint: Endpoint


@dataclass(frozen=True)
class RewriteSrc:
    """Rewrite the source endpoint (mask the concrete instance again)."""

    endpoint: Endpoint


@dataclass(frozen=True)
class ForwardOut:
    """Emit the packet on a switch port."""

    port: int


@dataclass(frozen=True)
class SendToController:
    """Punt the packet to the controller."""


@dataclass(frozen=True)
class Drop:
    """Discard the packet."""


Action = Union[RewriteDst, RewriteSrc, ForwardOut, SendToController, Drop]
TerminalAction = Union[ForwardOut, SendToController, Drop]

_TERMINAL_TYPES = (ForwardOut, SendToController, Drop)


def validate_actions(actions: Iterable[Action]) -> tuple[Action, ...]:
    """Check the one-terminal-action-and-it-is-last structure.

    Returns the actions as a tuple; raises :class:`MalformedActionsError`
    on an empty list, a missing terminal, a terminal that is not last, or
    more than one terminal.
    """
    acts = tuple(actions)
    if not acts:
        raise MalformedActionsError("action list is empty")
    terminals = [i for i, a in enumerate(acts) if isinstance(a, _TERMINAL_TYPES)]
    if not terminals:
        raise MalformedActionsError("action list has no terminal action")
    if len(terminals) > 1:
        raise MalformedActionsError("action list has more than one terminal action")
    if terminals[0] != len(acts) - 1:
        raise MalformedActionsError("terminal action must come last")
    return acts


def apply_actions(packet: Packet, actions: Iterable[Action]) -> tuple[Packet, TerminalAction]:
    """Apply rewrites in order and return the rewritten packet plus the terminal."""
    acts = validate_actions(actions)
    pkt = packet
    for action in acts[:-1]:
        if isinstance(action, RewriteDst):
            pkt = pkt.with_dst(action.endpoint)
        elif isinstance(action, RewriteSrc):
            pkt = pkt.with_src(action.endpoint)
        else:  # unreachable after validate_actions
            raise MalformedActionsError(f"non-rewrite action before terminal: {action!r}")
    terminal = acts[-1]
    assert isinstance(terminal, _TERMINAL_TYPES)
    return pkt, terminal


def _action_text(action: Action) -> str:
    if isinstance(action, ForwardOut):
        return f"fwd:{action.port}"
    if isinstance(action, SendToController):
        return "ctrl"
    if isinstance(action, Drop):
        return "drop"
    if isinstance(action, RewriteDst):
        return f"set_dst:{action.endpoint.address}:{action.endpoint.port}"
    if isinstance(action, RewriteSrc):
        return f"set_src:{action.endpoint.address}:{action.endpoint.port}"
    raise MalformedActionsError(f"unknown action: {action!r}")


# --- rules and table ----------------------------------------------------------


@dataclass
class FlowRule:
    """One table entry.

    ``idle_timeout``/``hard_timeout`` use the same unit as the timestamps
    handed to the table; ``None`` disables that timeout.  Counters and the
    ``installed_at``/``last_matched_at`` stamps are managed by the table.
    """

    priority: int
    match: MatchCriteria
    actions: tuple[Action, ...]
    idle_timeout: Optional[Union[int, float]] = None
    hard_timeout: Optional[Union[int, float]] = None
    rule_id: Optional[int] = None
    installed_at: Union[int, float] = 0
    last_matched_at: Union[int, float] = 0
    packet_count: int = 0
    byte_count: int = 0

    def __post_init__(self) -> None:
        self.actions = validate_actions(self.actions)
        if self.idle_timeout is not None and self.idle_timeout <= 0:
            raise ValueError("idle timeout must be positive")
        if self.hard_timeout is not None and self.hard_timeout <= 0:
            raise ValueError("hard timeout must be positive")

    def expired(self, now: Union[int, float]) -> bool:
        """True once either timeout has fully elapsed (boundary inclusive)."""
        if self.hard_timeout is not None and now - self.installed_at >= self.hard_timeout:
            return True
        if self.idle_timeout is not None and now - self.last_matched_at >= self.idle_timeout:
            return True
        return False

    def expiry_reason(self, now: Union[int, float]) -> str:
        if self.hard_timeout is not None and now - self.installed_at >= self.hard_timeout:
            return "hard"
        return "idle"

    def next_deadline(self) -> Optional[Union[int, float]]:
        """Earliest future time at which this rule could expire, or None."""
        deadlines = []
        if self.hard_timeout is not None:
            deadlines.append(self.installed_at + self.hard_timeout)
        if self.idle_timeout is not None:
            deadlines.append(self.last_matched_at + self.idle_timeout)
        return min(deadlines) if deadlines else None


@dataclass(frozen=True)
class FlowRemoved:
    """Expiry notification sent to the controller, final counters included."""

    switch_id: str
    rule_id: int
    priority: int
    match: MatchCriteria
    reason: str  # "idle" or "hard"
    packet_count: int
    byte_count: int
    removed_at: Union[int, float]


@dataclass(frozen=True)
class FlowStatsEntry:
    rule_id: int
    priority: int
    match: MatchCriteria
    packet_count: int
    byte_count: int
    delta_bytes: int


@dataclass(frozen=True)
class FlowStatsReport:
    switch_id: str
    generated_at: Union[int, float]
    entries: tuple[FlowStatsEntry, ...]


class FlowTable:
    """Priority-ordered flow table of one switch.

    Lookup scans live rules by descending priority and ascending rule id,
    so ties on priority are broken deterministically by installation id.
    Expired rules are skipped by lookup immediately (lazy expiry) and are
    physically removed, with notifications, by :meth:`expire`.
    """

    def __init__(self, switch_id: str, ports: Optional[dict[int, str]] = None) -> None:
        self.switch_id = switch_id
        self.ports: dict[int, str] = dict(ports or {})
        self._rules: dict[int, FlowRule] = {}
        self._order: list[tuple[int, int]] = []  # (-priority, rule_id), kept sorted
        self._next_id = 1

    # -- introspection --

    def __len__(self) -> int:
        return len(self._rules)

    def rules(self) -> list[FlowRule]:
        """Live view of the rules in lookup order."""
        return [self._rules[rid] for _, rid in self._order]

    def get(self, rule_id: int) -> Optional[FlowRule]:
        return self._rules.get(rule_id)

    # -- mutation --

    def install(self, rule: FlowRule, now: Union[int, float]) -> int:
        """Install ``rule`` at ``now`` and return its id.

        A rule with identical match and priority is replaced in place; the
        replaced rule is retired silently (replacement is not an expiry, so
        no FlowRemoved is produced).  Counters start at zero and the idle
        clock starts at ``now``.
        """
        if rule.rule_id is None:
            rule.rule_id = self._next_id
            self._next_id += 1
        else:
            if rule.rule_id in self._rules:
                raise ValueError(f"duplicate rule id {rule.rule_id} on {self.switch_id}")
            self._next_id = max(self._next_id, rule.rule_id + 1)
        for other in list(self._rules.values()):
            if other.match == rule.match and other.priority == rule.priority:
                self._remove(other.rule_id)
        rule.installed_at = now
        rule.last_matched_at = now
        rule.packet_count = 0
        rule.byte_count = 0
        self._rules[rule.rule_id] = rule
        bisect.insort(self._order, (-rule.priority, rule.rule_id))
        return rule.rule_id

    def _remove(self, rule_id: int) -> FlowRule:
        rule = self._rules.pop(rule_id)
        self._order.remove((-rule.priority, rule_id))
        return rule

    # -- datapath --

    def lookup(self, packet: Packet, now: Union[int, float]) -> Optional[int]:
        """Match ``packet`` against the live rules; None means table miss.

        The winning rule's counters are incremented and its idle clock is
        refreshed.  Expired rules never match, even before :meth:`expire`
        has swept them out.
        """
        for _, rule_id in self._order:
            rule = self._rules[rule_id]
            if rule.expired(now):
                continue
            if rule.match.matches(packet):
                rule.packet_count += 1
                rule.byte_count += packet.size_bytes
                rule.last_matched_at = now
                return rule_id
        return None

    def apply(self, rule_id: int, packet: Packet) -> tuple[Packet, TerminalAction]:
        """Run a matched rule's action list over ``packet``."""
        return apply_actions(packet, self._rules[rule_id].actions)

    def expire_rules(self, now: Union[int, float]) -> list[FlowRemoved]:
        """Remove every expired rule, returning one notification per removal.

        Notifications are ordered by rule id so replays are deterministic.
        """
        removed: list[FlowRemoved] = []
        for rule_id in sorted(self._rules):
            rule = self._rules[rule_id]
            if rule.expired(now):
                self._remove(rule_id)
                removed.append(
                    FlowRemoved(
                        switch_id=self.switch_id,
                        rule_id=rule_id,
                        priority=rule.priority,
                        match=rule.match,
                        reason=rule.expiry_reason(now),
                        packet_count=rule.packet_count,
                        byte_count=rule.byte_count,
                        removed_at=now,
                    )
                )
        return removed

    def next_deadline(self) -> Optional[Union[int, float]]:
        """Earliest expiry deadline over all rules, for event scheduling."""
        deadlines = [d for r in self._rules.values() if (d := r.next_deadline()) is not None]
        return min(deadlines) if deadlines else None

    # -- stats --

    def snapshot(self, now: Union[int, float], baselines: Optional[dict[int, int]] = None) -> FlowStatsReport:
        """Counter snapshot of all live rules, with deltas against ``baselines``."""
        base = baselines or {}
        entries = tuple(
            FlowStatsEntry(
                rule_id=rule.rule_id,
                priority=rule.priority,
                match=rule.match,
                packet_count=rule.packet_count,
                byte_count=rule.byte_count,
                delta_bytes=rule.byte_count - base.get(rule.rule_id, 0),
            )
            for rule in (self._rules[rid] for _, rid in self._order)
        )
        return FlowStatsReport(switch_id=self.switch_id, generated_at=now, entries=entries)

    def dump(self) -> str:
        """Render the table as tab-separated lines, one rule per line.

        Field order: id, priority, src address, src port, dst address,
        dst port, actions (comma separated), idle timeout, hard timeout,
        packet count, byte count.  Wildcards print as ``*`` and absent
        timeouts as ``-``.  Rules are ordered by descending priority then
        ascending id, the same order lookup uses.
        """
        lines = []
        for _, rule_id in self._order:
            rule = self._rules[rule_id]
            m = rule.match
            fields = [
                str(rule.rule_id),
                str(rule.priority),
                m.src_address if m.src_address is not None else "*",
                str(m.src_port) if m.src_port is not None else "*",
                m.dst_address if m.dst_address is not None else "*",
                str(m.dst_port) if m.dst_port is not None else "*",
                ",".join(_action_text(a) for a in rule.actions),
                str(rule.idle_timeout) if rule.idle_timeout is not None else "-",
                str(rule.hard_timeout) if rule.hard_timeout is not None else "-",
                str(rule.packet_count),
                str(rule.byte_count),
            ]
            lines.append("\t".join(fields))
        return "\n".join(lines)


# --- stats triggers -----------------------------------------------------------


@dataclass(frozen=True)
class Periodic:
    """Report every ``interval`` time units."""

    interval: Union[int, float]

    def __post_init__(self) -> None:
        if self.interval <= 0:
            raise ValueError("stats interval must be positive")


@dataclass(frozen=True)
class Threshold:
    """Report when any rule accumulates ``byte_limit`` new bytes since the last report."""

    byte_limit: int

    def __post_init__(self) -> None:
        if self.byte_limit <= 0:
            raise ValueError("stats byte threshold must be positive")


StatsTrigger = Union[Periodic, Threshold]


class StatsCollector:
    """Gathers counter reports from one table according to a trigger policy.

    Periodic collection is driven by the caller's clock via :meth:`on_tick`
    (the simulator schedules ticks at every interval boundary); threshold
    collection is checked after traffic via :meth:`after_traffic`.  Every
    report resets the per-rule byte baselines, so threshold deltas are
    measured since the previous report.
    """

    def __init__(self, trigger: StatsTrigger) -> None:
        self.trigger = trigger
        self._baselines: dict[int, int] = {}
        self.reports: list[FlowStatsReport] = []

    def _emit(self, table: FlowTable, now: Union[int, float]) -> FlowStatsReport:
        report = table.snapshot(now, self._baselines)
        self._baselines = {e.rule_id: e.byte_count for e in report.entries}
        self.reports.append(report)
        return report

    def on_tick(self, table: FlowTable, now: Union[int, float]) -> Optional[FlowStatsReport]:
        if isinstance(self.trigger, Periodic):
            return self._emit(table, now)
        return None

    def after_traffic(self, table: FlowTable, now: Union[int, float]) -> Optional[FlowStatsReport]:
        if isinstance(self.trigger, Threshold):
            for rule in table.rules():
                if rule.byte_count - self._baselines.get(rule.rule_id, 0) >= self.trigger.byte_limit:
                    return self._emit(table, now)
        return None
