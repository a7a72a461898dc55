"""Shared helpers: a lossless control bus and controller factories."""

import dataclasses
import heapq
import typing

from nxwlan.control import BindTunnel, BssConfig, Controller, Send, SetTimer, accept_all, decode_msg, encode_msg
from nxwlan.errors import UnexpectedMsg
from nxwlan.frame import parse_mac
from nxwlan.switch import Switch

ONE_WAY = 5000
RTT = 2 * ONE_WAY
PASSPHRASE = b"correct horse battery staple"
STA = parse_mac("02:00:00:00:10:01")


def bss(i):
    return BssConfig("home", bytes([2, 0, 0, 0, 0xA0, i]), 36 + 4 * i)


def make(i, policy=accept_all):
    return Controller(i, Switch(f"eap{i}"), bss(i), RTT, policy)


class Pump:
    """Lossless control bus with fixed one-way latency."""

    def __init__(self, nodes, latency=ONE_WAY):
        self.nodes = {c.node_id: c for c in nodes}
        self.latency = latency
        self.q = []
        self.seq = 0
        self.now = 0
        self.binds = []
        self.sent = []

    def push(self, t, item):
        heapq.heappush(self.q, (t, self.seq, item))
        self.seq += 1

    def act(self, node, actions):
        for a in actions:
            if isinstance(a, Send):
                self.sent.append((node, a.dst, a.msg))
                # every message crosses the wire as bytes
                self.push(self.now + self.latency, ("msg", node, a.dst, encode_msg(a.msg)))
            elif isinstance(a, SetTimer):
                self.push(self.now + a.delay_us, ("timer", node, a.token))
            elif isinstance(a, BindTunnel):
                self.binds.append((self.now, node, a))

    def discover(self, a, b):
        self.act(a, self.nodes[a].on_discovery(b, self.now))

    def run(self, until=None):
        while self.q and (until is None or self.q[0][0] <= until):
            self.now, _, item = heapq.heappop(self.q)
            if item[0] == "msg":
                _, src, dst, raw = item
                try:
                    self.act(dst, self.nodes[dst].on_message(src, decode_msg(raw), self.now))
                except UnexpectedMsg:
                    pass
            else:
                _, node, token = item
                self.act(node, self.nodes[node].on_timer(token, self.now))
        if until is not None:
            self.now = until


SECRET_WORDS = ("key", "psk", "pmk", "ptk", "gtk", "pass", "secret", "credential", "password")


def field_names(tp, seen=None):
    seen = set() if seen is None else seen
    if not dataclasses.is_dataclass(tp) or tp in seen:
        return []
    seen.add(tp)
    hints = typing.get_type_hints(tp)
    names = []
    for f in dataclasses.fields(tp):
        names.append(f.name)
        names.extend(field_names(hints[f.name], seen))
    return names
