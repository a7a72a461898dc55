"""Per-EAP software switch for native 802.11 frames.

Two-stage ingress pipeline:

1. fixed drop filters (control frames, tx-status reports, beacons sniffed
   by a WTP monitor port);
2. one of two exact-match tables, chosen by destination: the unicast
   table keyed on ``(ingress, addr1)`` and the broadcast table keyed on
   ``(ingress, addr2)`` (``addr2`` may be wildcarded) which yields a
   multicast group.

Buffering is immediate replication and the egress pipeline is empty, so
``process`` hands back the very frame object it was given.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .errors import BadRule
from .frame import BROADCAST, FrameKind, TaggedFrame, format_mac


class PortRole(enum.Enum):
    RAP_RADIO = "rap_radio"
    VAP_ATTACH = "vap_attach"
    WTP_RADIO = "wtp_radio"
    TUNNEL = "tunnel"
    LAN = "lan"


_NEIGHBOR_ROLES = (PortRole.WTP_RADIO, PortRole.TUNNEL)


@dataclass(frozen=True)
class Port:
    id: int
    role: PortRole
    neighbor: Optional[int] = None

    def __post_init__(self):
        if (self.role in _NEIGHBOR_ROLES) != (self.neighbor is not None):
            raise ValueError(f"{self.role.value} ports {'need' if self.role in _NEIGHBOR_ROLES else 'take no'} neighbor id")

    def __str__(self) -> str:
        if self.neighbor is None:
            return f"{self.role.value}#{self.id}"
        return f"{self.role.value}({self.neighbor})#{self.id}"


@dataclass(frozen=True)
class MulticastGroup:
    group_id: int
    ports: frozenset

    def __post_init__(self):
        object.__setattr__(self, "ports", frozenset(self.ports))


@dataclass(frozen=True)
class UnicastRule:
    ingress: Port
    dst_mac: bytes
    egress: Port


@dataclass(frozen=True)
class BroadcastRule:
    ingress: Port
    src_mac: Optional[bytes]  # None matches any source
    group: MulticastGroup


WILDCARD = None


class DropReason(str, enum.Enum):
    CONTROL_FRAME = "control_frame"
    TX_STATUS = "tx_status_report"
    SNIFFED_BEACON = "sniffed_beacon"
    NO_RULE = "no_rule"


@dataclass(frozen=True)
class Drop:
    reason: DropReason


Emits = list  # list[tuple[Port, TaggedFrame]]
Verdict = Union[Emits, Drop]


class Switch:
    def __init__(self, name: str = ""):
        self.name = name
        self._ports: dict[int, Port] = {}
        self._unicast: dict[tuple[int, bytes], Port] = {}
        self._broadcast: dict[tuple[int, Optional[bytes]], MulticastGroup] = {}
        self.drops: Counter = Counter()

    # -- ports ---------------------------------------------------------

    def add_port(self, role: PortRole, neighbor: Optional[int] = None) -> Port:
        port = Port(len(self._ports) + 1, role, neighbor)
        self._ports[port.id] = port
        return port

    @property
    def ports(self) -> tuple:
        return tuple(self._ports.values())

    def ports_with_role(self, role: PortRole, neighbor: Optional[int] = None) -> list:
        return [p for p in self._ports.values() if p.role is role and (neighbor is None or p.neighbor == neighbor)]

    def _check_port(self, port: Port) -> None:
        if self._ports.get(port.id) != port:
            raise BadRule(f"{port} is not a port of switch {self.name!r}")

    # -- rules ---------------------------------------------------------

    def _check_unicast(self, rule: UnicastRule) -> None:
        self._check_port(rule.ingress)
        self._check_port(rule.egress)
        if rule.egress == rule.ingress:
            raise BadRule(f"egress equals ingress ({rule.ingress})")
        if len(rule.dst_mac) != 6:
            raise BadRule("dst_mac must be 6 bytes")

    def _check_broadcast(self, rule: BroadcastRule) -> None:
        self._check_port(rule.ingress)
        if not rule.group.ports:
            raise BadRule(f"multicast group {rule.group.group_id} is empty")
        for port in rule.group.ports:
            self._check_port(port)
        if rule.ingress in rule.group.ports:
            raise BadRule(f"multicast group {rule.group.group_id} contains ingress {rule.ingress}")
        if rule.src_mac is not None and len(rule.src_mac) != 6:
            raise BadRule("src_mac must be 6 bytes or the wildcard")

    def install_unicast(self, rule: UnicastRule) -> None:
        self._check_unicast(rule)
        self._unicast[(rule.ingress.id, bytes(rule.dst_mac))] = rule.egress

    def install_broadcast(self, rule: BroadcastRule) -> None:
        self._check_broadcast(rule)
        src = None if rule.src_mac is None else bytes(rule.src_mac)
        self._broadcast[(rule.ingress.id, src)] = rule.group

    def remove_unicast(self, ingress: Port, dst_mac: bytes) -> None:
        self._unicast.pop((ingress.id, bytes(dst_mac)), None)

    def remove_broadcast(self, ingress: Port, src_mac: Optional[bytes]) -> None:
        key = (ingress.id, None if src_mac is None else bytes(src_mac))
        self._broadcast.pop(key, None)

    def apply(self, unicast: Iterable[UnicastRule] = (), remove_unicast: Iterable[tuple] = ()) -> None:
        """Install and remove unicast rules as one step.

        The new table is built aside and swapped in with a single
        assignment, so a concurrent ``process`` sees either the old or the
        new table, never a mix.
        """
        unicast = list(unicast)
        for rule in unicast:
            self._check_unicast(rule)
        table = dict(self._unicast)
        for ingress, mac in remove_unicast:
            table.pop((ingress.id, bytes(mac)), None)
        for rule in unicast:
            table[(rule.ingress.id, bytes(rule.dst_mac))] = rule.egress
        self._unicast = table

    def lookup_unicast(self, ingress: Port, dst_mac: bytes) -> Optional[Port]:
        return self._unicast.get((ingress.id, bytes(dst_mac)))

    def lookup_broadcast(self, ingress: Port, src_mac: Optional[bytes]) -> Optional[MulticastGroup]:
        table = self._broadcast
        if src_mac is not None:
            group = table.get((ingress.id, bytes(src_mac)))
            if group is not None:
                return group
        return table.get((ingress.id, None))

    # -- pipeline ------------------------------------------------------

    def process(self, ingress: Port, tf: TaggedFrame) -> Verdict:
        frame, meta = tf.frame, tf.meta
        # stage 1: fixed filters, in this order
        if frame.kind is FrameKind.ACK:
            return self._drop(DropReason.CONTROL_FRAME)
        if meta.tx_status:
            return self._drop(DropReason.TX_STATUS)
        if frame.kind is FrameKind.BEACON and ingress.role is PortRole.WTP_RADIO:
            return self._drop(DropReason.SNIFFED_BEACON)

        # stage 2: match-action
        if frame.addr1 == BROADCAST or frame.kind is FrameKind.PROBE_REQUEST:
            group = self.lookup_broadcast(ingress, frame.addr2)
            if group is None:
                return self._drop(DropReason.NO_RULE)
            return [(port, tf) for port in sorted(group.ports, key=lambda p: p.id) if port != ingress]
        egress = self._unicast.get((ingress.id, frame.addr1))
        if egress is None:
            return self._drop(DropReason.NO_RULE)
        return [(egress, tf)]

    def _drop(self, reason: DropReason) -> Drop:
        self.drops[reason] += 1
        return Drop(reason)

    # -- debugging -----------------------------------------------------

    def dump_rules(self) -> list:
        """One CSV line per rule: ``table,ingress,mac,egress_or_group``.

        Ports are written by id; groups as ``g<id>:<port>;<port>``.
        """
        lines = []
        for (ingress, mac), egress in sorted(self._unicast.items()):
            lines.append(f"unicast,{ingress},{format_mac(mac)},{egress.id}")
        for (ingress, mac), group in sorted(self._broadcast.items(), key=lambda kv: (kv[0][0], kv[0][1] or b"")):
            ports = ";".join(str(p.id) for p in sorted(group.ports, key=lambda p: p.id))
            lines.append(f"broadcast,{ingress},{'*' if mac is None else format_mac(mac)},g{group.group_id}:{ports}")
        return lines
