"""Per-EAP controller: neighbour handshakes, backhaul reports and roaming.

The controller is a sans-IO actor. Every handler takes the triggering
event and returns a list of actions (messages to send, timers to arm,
tunnels to bind) for the surrounding event loop to carry out. Switch
rules are the one side effect it performs directly, since each EAP owns
its switch.

Two roles per neighbour pair, handled independently:

* requester: owns a VAP and asks the neighbour to host a WTP for it;
* host: runs a WTP on its radio and tunnels the VAP's frames.
"""

from __future__ import annotations

import enum
import logging
import struct
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .errors import DomainError, Malformed, UnexpectedMsg, UnknownSta
from .frame import format_mac
from .steering import BackhaulCaps, SteeringDecision, SteeringParams, calc_probe_response_tx_powers
from .switch import WILDCARD, BroadcastRule, MulticastGroup, Port, PortRole, Switch, UnicastRule

log = logging.getLogger(__name__)

# -- control messages ------------------------------------------------------


@dataclass(frozen=True)
class BssConfig:
    """Public parameters of the home BSS. Credentials stay on the owner."""

    ssid: str
    bssid: bytes
    channel: int


@dataclass(frozen=True)
class WtpSetupRequest:
    requester: int
    tunnel_endpoint: int
    bss: BssConfig


@dataclass(frozen=True)
class WtpSetupComplete:
    tunnel_endpoint: int
    wtp_port: int


@dataclass(frozen=True)
class BackhaulReport:
    dl_mbps: float
    ul_mbps: float


ControlMsg = Union[WtpSetupRequest, WtpSetupComplete, BackhaulReport]

MSG_SETUP_REQUEST = 1
MSG_SETUP_COMPLETE = 2
MSG_BACKHAUL_REPORT = 3

_REQ = struct.Struct(">BHH6sBB")  # kind, requester, endpoint, bssid, channel, ssid_len
_CPL = struct.Struct(">BHH")  # kind, endpoint, wtp_port
_BHR = struct.Struct(">Bdd")  # kind, dl, ul


def encode_msg(msg: ControlMsg) -> bytes:
    if isinstance(msg, WtpSetupRequest):
        ssid = msg.bss.ssid.encode("utf-8")
        if len(ssid) > 32:
            raise DomainError("ssid longer than 32 bytes")
        head = _REQ.pack(
            MSG_SETUP_REQUEST, msg.requester, msg.tunnel_endpoint, msg.bss.bssid, msg.bss.channel, len(ssid)
        )
        return head + ssid
    if isinstance(msg, WtpSetupComplete):
        return _CPL.pack(MSG_SETUP_COMPLETE, msg.tunnel_endpoint, msg.wtp_port)
    if isinstance(msg, BackhaulReport):
        return _BHR.pack(MSG_BACKHAUL_REPORT, msg.dl_mbps, msg.ul_mbps)
    raise TypeError(f"not a control message: {msg!r}")


def decode_msg(data: bytes) -> ControlMsg:
    if not data:
        raise Malformed(0, "truncated")
    kind = data[0]
    if kind == MSG_SETUP_REQUEST:
        if len(data) < _REQ.size:
            raise Malformed(len(data), "truncated")
        _, requester, endpoint, bssid, channel, n = _REQ.unpack_from(data)
        if len(data) != _REQ.size + n:
            raise Malformed(_REQ.size, "length_mismatch")
        try:
            ssid = data[_REQ.size :].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise Malformed(_REQ.size + exc.start, "bad_ssid") from None
        return WtpSetupRequest(requester, endpoint, BssConfig(ssid, bssid, channel))
    if kind == MSG_SETUP_COMPLETE:
        if len(data) != _CPL.size:
            raise Malformed(min(len(data), _CPL.size), "truncated" if len(data) < _CPL.size else "length_mismatch")
        _, endpoint, port = _CPL.unpack(data)
        return WtpSetupComplete(endpoint, port)
    if kind == MSG_BACKHAUL_REPORT:
        if len(data) != _BHR.size:
            raise Malformed(min(len(data), _BHR.size), "truncated" if len(data) < _BHR.size else "length_mismatch")
        _, dl, ul = _BHR.unpack(data)
        return BackhaulReport(dl, ul)
    raise Malformed(0, "unknown_kind")


# -- actions ---------------------------------------------------------------


@dataclass(frozen=True)
class Send:
    dst: int
    msg: ControlMsg


@dataclass(frozen=True)
class SetTimer:
    delay_us: int
    token: tuple


@dataclass(frozen=True)
class BindTunnel:
    """Attach ``port`` to the tunnel carrying ``owner``'s VAP via ``host``'s WTP."""

    owner: int
    host: int
    port: Port


Action = Union[Send, SetTimer, BindTunnel]

# -- state -----------------------------------------------------------------


class Phase(enum.Enum):
    DISCOVERED = "discovered"
    SETUP_REQUESTED = "setup_requested"
    ESTABLISHED = "established"
    SILENT = "silent"


@dataclass
class NeighborState:
    phase: Phase = Phase.DISCOVERED
    sent_at_us: Optional[int] = None
    endpoint: Optional[int] = None
    tunnel_port: Optional[Port] = None
    remote_wtp_port: Optional[int] = None


@dataclass
class HostedWtp:
    requester: int
    bss: BssConfig
    wtp_port: Port
    tunnel_port: Port
    endpoint: int


Policy = Callable[[WtpSetupRequest], bool]


def accept_all(req: WtpSetupRequest) -> bool:
    return True


def reject_all(req: WtpSetupRequest) -> bool:
    return False


VAP_BEACON_GROUP = 1


class Controller:
    def __init__(
        self,
        node_id: int,
        switch: Switch,
        vap_bss: BssConfig,
        rtt_us: int,
        policy: Policy = accept_all,
        backhaul: BackhaulCaps = BackhaulCaps(50.0, 50.0),
    ):
        if rtt_us < 0:
            raise DomainError("rtt_us must be non-negative")
        self.node_id = node_id
        self.switch = switch
        self.vap_bss = vap_bss
        self.rtt_us = rtt_us
        self.policy = policy
        self.backhaul = backhaul
        self.neighbors: dict[int, NeighborState] = {}
        self.hosted: dict[int, HostedWtp] = {}
        self.reports: dict[int, BackhaulCaps] = {}
        # (sta, bssid) -> dBm for the next probe response sent to sta
        self.probe_tx_power: dict[tuple[bytes, bytes], Optional[float]] = {}
        self.unexpected = 0
        self._next_endpoint = 1

        self.rap_port = switch.add_port(PortRole.RAP_RADIO)
        self.vap_port = switch.add_port(PortRole.VAP_ATTACH)
        # uplink for VAP clients served from the local radio
        switch.install_unicast(UnicastRule(self.rap_port, vap_bss.bssid, self.vap_port))
        self._sta_port: dict[bytes, Port] = {}

    @property
    def setup_timeout_us(self) -> int:
        return 3 * self.rtt_us

    def phase(self, neighbor: int) -> Optional[Phase]:
        st = self.neighbors.get(neighbor)
        return st.phase if st else None

    def established(self) -> list:
        return sorted(n for n, st in self.neighbors.items() if st.phase is Phase.ESTABLISHED)

    # -- requester side ------------------------------------------------

    def on_discovery(self, neighbor: int, now_us: int) -> list:
        if neighbor == self.node_id:
            return []
        st = self.neighbors.get(neighbor)
        if st is None:
            st = self.neighbors[neighbor] = NeighborState()
        elif st.phase is not Phase.SILENT:
            return []
        endpoint = self._next_endpoint
        self._next_endpoint = self._next_endpoint % 0xFFFF + 1
        st.phase, st.sent_at_us, st.endpoint = Phase.SETUP_REQUESTED, now_us, endpoint
        req = WtpSetupRequest(self.node_id, endpoint, self.vap_bss)
        return [Send(neighbor, req), SetTimer(self.setup_timeout_us, ("setup", neighbor, endpoint))]

    def on_timer(self, token: tuple, now_us: int) -> list:
        if token[0] != "setup":
            raise DomainError(f"unknown timer {token!r}")
        _, neighbor, endpoint = token
        st = self.neighbors.get(neighbor)
        if st and st.phase is Phase.SETUP_REQUESTED and st.endpoint == endpoint:
            st.phase, st.sent_at_us = Phase.SILENT, None
        return []

    def on_setup_complete(self, neighbor: int, msg: WtpSetupComplete, now_us: int) -> list:
        st = self.neighbors.get(neighbor)
        if st is None or st.phase is not Phase.SETUP_REQUESTED or st.endpoint != msg.tunnel_endpoint:
            self.unexpected += 1
            phase = st.phase.value if st else "unknown"
            raise UnexpectedMsg(f"WtpSetupComplete from {neighbor} in phase {phase}")
        sw = self.switch
        tun = sw.add_port(PortRole.TUNNEL, neighbor)
        sw.install_unicast(UnicastRule(tun, self.vap_bss.bssid, self.vap_port))
        sw.install_broadcast(BroadcastRule(tun, WILDCARD, MulticastGroup(10000 + neighbor, {self.vap_port})))
        st.phase, st.tunnel_port, st.remote_wtp_port = Phase.ESTABLISHED, tun, msg.wtp_port
        self._refresh_beacon_group()
        return [BindTunnel(self.node_id, neighbor, tun), Send(neighbor, self.report())]

    def _refresh_beacon_group(self) -> None:
        ports = {self.neighbors[n].tunnel_port for n in self.established()}
        if ports:
            rule = BroadcastRule(self.vap_port, self.vap_bss.bssid, MulticastGroup(VAP_BEACON_GROUP, ports))
            self.switch.install_broadcast(rule)

    def tunnel_to(self, neighbor: int) -> Port:
        st = self.neighbors.get(neighbor)
        if st is None or st.phase is not Phase.ESTABLISHED:
            raise DomainError(f"no established tunnel to {neighbor}")
        return st.tunnel_port

    def report(self) -> BackhaulReport:
        return BackhaulReport(self.backhaul.dl_mbps, self.backhaul.ul_mbps)

    def broadcast_report(self) -> list:
        """Tell every neighbour hosting our VAP what backhaul we have spare."""
        msg = self.report()
        return [Send(n, msg) for n in self.established()]

    # -- VAP clients -----------------------------------------------------

    def attach_sta(self, sta: bytes, via: Optional[int]) -> None:
        """Point downlink for ``sta`` at the local radio (``via=None``) or a tunnel."""
        target = self.rap_port if via is None else self.tunnel_to(via)
        if self._sta_port.get(sta) == target:
            return
        self.switch.apply([UnicastRule(self.vap_port, sta, target)])
        self._sta_port[sta] = target

    def roam(self, sta: bytes, via: Optional[int]) -> None:
        if sta not in self._sta_port:
            raise UnknownSta(format_mac(sta))
        self.attach_sta(sta, via)

    def detach_sta(self, sta: bytes) -> None:
        if self._sta_port.pop(sta, None) is not None:
            self.switch.apply(remove_unicast=[(self.vap_port, sta)])

    def sta_port(self, sta: bytes) -> Optional[Port]:
        return self._sta_port.get(sta)

    # -- host side ---------------------------------------------------------

    def on_setup_request(self, msg: WtpSetupRequest, now_us: int) -> list:
        r = msg.requester
        if r == self.node_id:
            return []
        hosted = self.hosted.get(r)
        if hosted is not None:
            # retry or duplicate: answer again for the same WTP
            hosted.endpoint = msg.tunnel_endpoint
            return [Send(r, WtpSetupComplete(msg.tunnel_endpoint, hosted.wtp_port.id))]
        if not self.policy(msg):
            log.debug("node %d rejects WTP for %d", self.node_id, r)
            return []
        sw = self.switch
        wtp = sw.add_port(PortRole.WTP_RADIO, r)
        tun = sw.add_port(PortRole.TUNNEL, r)
        bssid = msg.bss.bssid
        # everything broadcast by a client (probe requests first of all) goes upstream
        sw.install_broadcast(BroadcastRule(wtp, WILDCARD, MulticastGroup(20000 + r, {tun})))
        sw.install_unicast(UnicastRule(wtp, bssid, tun))
        # the VAP's beacons come back down
        sw.install_broadcast(BroadcastRule(tun, bssid, MulticastGroup(30000 + r, {wtp})))
        self.hosted[r] = HostedWtp(r, msg.bss, wtp, tun, msg.tunnel_endpoint)
        return [BindTunnel(r, self.node_id, tun), Send(r, WtpSetupComplete(msg.tunnel_endpoint, wtp.id))]

    def observe_upstream(self, ingress: Port, sta: bytes) -> None:
        """Learn the downlink rule for a client heard on a WTP port."""
        if ingress.role is not PortRole.WTP_RADIO:
            return
        hosted = self.hosted.get(ingress.neighbor)
        if hosted is None or self.switch.lookup_unicast(hosted.tunnel_port, sta) == hosted.wtp_port:
            return
        self.switch.install_unicast(UnicastRule(hosted.tunnel_port, sta, hosted.wtp_port))

    def on_backhaul_report(self, neighbor: int, msg: BackhaulReport) -> None:
        st = self.neighbors.get(neighbor)
        if neighbor not in self.hosted and not (st and st.phase is Phase.ESTABLISHED):
            self.unexpected += 1
            raise UnexpectedMsg(f"BackhaulReport from {neighbor} which is neither hosted nor established")
        self.reports[neighbor] = BackhaulCaps(msg.dl_mbps, msg.ul_mbps)

    # -- steering --------------------------------------------------------

    def on_probe_request(
        self,
        params: SteeringParams,
        sta: bytes,
        rssi_dbm: float,
        rap_bssid: bytes,
        home_load: list,
        txop_mode: bool = False,
    ) -> SteeringDecision:
        """Run the steering decision and remember the response powers for ``sta``."""
        vaps = {r: self.reports[r] for r in sorted(self.hosted) if r in self.reports}
        d = calc_probe_response_tx_powers(params, rssi_dbm, home_load, self.backhaul, vaps, txop_mode)
        self.probe_tx_power[(sta, rap_bssid)] = d.rap_tx_dbm
        for r, tx in d.vap_tx_dbm.items():
            self.probe_tx_power[(sta, self.hosted[r].bss.bssid)] = tx
        return d

    # -- dispatch --------------------------------------------------------

    def on_message(self, src: int, msg: ControlMsg, now_us: int) -> list:
        if isinstance(msg, WtpSetupRequest):
            return self.on_setup_request(msg, now_us)
        if isinstance(msg, WtpSetupComplete):
            return self.on_setup_complete(src, msg, now_us)
        if isinstance(msg, BackhaulReport):
            self.on_backhaul_report(src, msg)
            return []
        raise TypeError(f"not a control message: {msg!r}")


__all__ = [
    "Action",
    "BackhaulReport",
    "BindTunnel",
    "BssConfig",
    "ControlMsg",
    "Controller",
    "HostedWtp",
    "NeighborState",
    "Phase",
    "Policy",
    "Send",
    "SetTimer",
    "WtpSetupComplete",
    "WtpSetupRequest",
    "accept_all",
    "decode_msg",
    "encode_msg",
    "reject_all",
]
