"""Radio environment: path loss, probe/response scanning, local ACKs and
the flow-level throughput of a BSS.

Path loss is log-distance, ``pl0 + 10 n log10(d / d0)``, optionally plus
a fixed penetration loss for every wall the direct path crosses. The
channel is deterministic unless a shadowing sigma is configured.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .errors import DomainError
from .frame import FrameKind, RadioMeta, TaggedFrame, is_group_address, make_ack
from .steering import mac_rate

SIFS_US = 10

Point = tuple  # (x_m, y_m)


@dataclass(frozen=True)
class Wall:
    a: Point
    b: Point
    loss_db: float

    def crosses(self, p: Point, q: Point) -> bool:
        """True if segment p-q properly crosses this wall."""

        def orient(u, v, w):
            return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])

        return orient(p, q, self.a) * orient(p, q, self.b) < 0 and orient(self.a, self.b, p) * orient(self.a, self.b, q) < 0


@dataclass(frozen=True)
class PathLossModel:
    pl0_db: float = 40.0
    d0_m: float = 1.0
    n: float = 3.5
    sensitivity_dbm: float = -82.0
    walls: tuple = ()
    shadowing_sigma_db: float = 0.0

    def __post_init__(self):
        if not self.n > 0:
            raise DomainError("path-loss exponent must be positive")
        if not self.d0_m > 0:
            raise DomainError("reference distance must be positive")
        if self.shadowing_sigma_db < 0:
            raise DomainError("shadowing sigma must be non-negative")
        object.__setattr__(self, "walls", tuple(self.walls))


def path_loss(model: PathLossModel, d_m: float) -> float:
    if not d_m > 0:
        raise DomainError(f"distance must be positive, got {d_m}")
    return model.pl0_db + 10 * model.n * math.log10(d_m / model.d0_m)


def rssi(tx_dbm: float, model: PathLossModel, d_m: float) -> float:
    return tx_dbm - path_loss(model, d_m)


def link_loss(model: PathLossModel, p: Point, q: Point, shadow_db: float = 0.0) -> float:
    """Path loss between two positions, walls included."""
    loss = path_loss(model, math.dist(p, q))
    for wall in model.walls:
        if wall.crosses(p, q):
            loss += wall.loss_db
    return loss + shadow_db


class Shadowing:
    """Per-link log-normal shadowing, fixed for the life of the object.

    Links are unordered pairs of node names; each gets one Gaussian draw
    the first time it is asked for, in call order, from a private RNG.
    """

    def __init__(self, sigma_db: float, seed):
        self.sigma_db = sigma_db
        self._rng = random.Random(seed)
        self._cache: dict[tuple, float] = {}

    def __call__(self, a: str, b: str) -> float:
        if self.sigma_db == 0:
            return 0.0
        key = (a, b) if a <= b else (b, a)
        if key not in self._cache:
            self._cache[key] = self._rng.gauss(0.0, self.sigma_db)
        return self._cache[key]


class RadioRole(enum.Enum):
    AP_RADIO = "ap_radio"
    WTP_RADIO = "wtp_radio"
    STA = "sta"


@dataclass(frozen=True)
class RadioNode:
    name: str
    position: Point
    channel: int
    tx_power_dbm: float
    role: RadioRole = RadioRole.AP_RADIO
    channels: tuple = (36, 40, 44, 48)

    def __post_init__(self):
        if self.role is not RadioRole.STA and self.channel not in self.channels:
            raise DomainError(f"{self.name}: channel {self.channel} not in {self.channels}")


@dataclass(frozen=True)
class Association:
    sta: bytes
    serving: str  # label of the serving radio, e.g. "bob.rap" or "alice.wtp(bob)"
    bssid: bytes
    phy_rate_mbps: float


# -- scanning --------------------------------------------------------------


@dataclass(frozen=True)
class Heard:
    """A probe response as received by the scanning station."""

    bssid: bytes
    label: str
    rssi_dbm: float
    channel: int


def choose_response(heard: Iterable[Heard], sensitivity_dbm: float) -> Optional[Heard]:
    """Strongest decodable response; equal RSSI goes to the lowest BSSID."""
    best = None
    for h in heard:
        if h.rssi_dbm < sensitivity_dbm:
            continue
        if best is None or h.rssi_dbm > best.rssi_dbm or (h.rssi_dbm == best.rssi_dbm and h.bssid < best.bssid):
            best = h
    return best


@dataclass(frozen=True)
class Responder:
    """Something that answers probe requests from one radio.

    ``respond(prx_dbm)`` gets the probe request's receive power at this
    radio and returns the response TX power, or None for no response.
    """

    radio: RadioNode
    bssid: bytes
    label: str
    respond: Callable[[float], Optional[float]]


def scan(
    sta: RadioNode,
    channels: Sequence[int],
    responders: Sequence[Responder],
    model: PathLossModel,
    shadow: Callable[[str, str], float] = lambda a, b: 0.0,
) -> Optional[Heard]:
    """One active scan pass without the event loop (used as a cross-check)."""
    heard = []
    for ch in channels:
        for r in responders:
            if r.radio.channel != ch:
                continue
            loss = link_loss(model, sta.position, r.radio.position, shadow(sta.name, r.radio.name))
            prx = sta.tx_power_dbm - loss
            if prx < model.sensitivity_dbm:
                continue
            tx = r.respond(prx)
            if tx is None:
                continue
            heard.append(Heard(r.bssid, r.label, tx - loss, ch))
    return choose_response(heard, model.sensitivity_dbm)


# -- control frames ----------------------------------------------------------


def needs_ack(tf: TaggedFrame) -> bool:
    f = tf.frame
    if f.kind.is_control or is_group_address(f.addr1):
        return False
    return f.kind is FrameKind.DATA or f.kind.is_management


def ack_locally(tf: TaggedFrame, now_us: int) -> Optional[tuple]:
    """Ack the receiving radio owes for ``tf``: ``(send_at_us, TaggedFrame)`` or None."""
    if not needs_ack(tf):
        return None
    return now_us + SIFS_US, TaggedFrame(make_ack(tf.frame.addr2), RadioMeta(phy_rate_mbps=tf.meta.phy_rate_mbps))


def tx_status_for(tf: TaggedFrame) -> TaggedFrame:
    """The immediate completion report a virtual radio gives for an injected frame."""
    return TaggedFrame(tf.frame, RadioMeta(phy_rate_mbps=tf.meta.phy_rate_mbps, injected=True, tx_status=True))


# -- throughput --------------------------------------------------------------


@dataclass(frozen=True)
class Member:
    sta: str
    phy_rate_mbps: float
    dl_backhaul_mbps: float = math.inf
    tunnel_ul_mbps: Optional[float] = None  # set when served through a WTP


@dataclass(frozen=True)
class FlowRate:
    wireless_mbps: float
    dl_backhaul_mbps: float
    tunnel_ul_mbps: Optional[float]
    mbps: float = field(init=False)

    def __post_init__(self):
        r = min(self.wireless_mbps, self.dl_backhaul_mbps)
        if self.tunnel_ul_mbps is not None:
            r = min(r, self.tunnel_ul_mbps)
        object.__setattr__(self, "mbps", r)


def bss_throughput(members: Sequence[Member], txop_mode: bool = False) -> dict:
    """Saturated per-station rate for every member of one channel.

    Every member is backlogged. The wireless rate comes from the airtime
    model over the actual member set; the end-to-end rate is then capped
    by the backhaul (and the tunnel for WTP-served stations).
    """
    names = [m.sta for m in members]
    if len(set(names)) != len(names):
        raise DomainError("duplicate station in BSS member list")
    out = {}
    for i, m in enumerate(members):
        others = [o.phy_rate_mbps for j, o in enumerate(members) if j != i]
        out[m.sta] = FlowRate(mac_rate(others, m.phy_rate_mbps, txop_mode), m.dl_backhaul_mbps, m.tunnel_ul_mbps)
    return out
