"""The simulated neighbourhood: radios on a shared medium, EAPs with their
switch and controller, tunnels and the control bus between them, and
stations that walk, scan and associate.

Frames travel for real (encoded onto tunnels, switched, acked locally);
throughput is not simulated per packet. At each measurement tick the
station's rate is read from the flow model of the radio serving it.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Optional

from ..control import BindTunnel, BssConfig, Controller, Send, SetTimer, accept_all, decode_msg, encode_msg, reject_all
from ..errors import UnexpectedMsg
from ..frame import (
    BROADCAST,
    HEADER_SIZE,
    Dot11Frame,
    FrameKind,
    RadioMeta,
    TaggedFrame,
    decode,
    encode,
    parse_mac,
)
from ..radio import Heard, Member, Shadowing, ack_locally, bss_throughput, choose_response, link_loss, tx_status_for
from ..steering import BackhaulCaps, predict_phy_rate
from ..switch import PortRole, Switch
from .kernel import Kernel
from .metrics import Metrics, Row
from .scenario import EapSpec, Scenario, StaSpec, Waypoint, validate

log = logging.getLogger(__name__)

PROC_US = 200  # AP stack turnaround for management responses
ASSOC_TIMEOUT_US = 300_000
DATA_PAYLOAD = 1400


def airtime_us(tf: TaggedFrame) -> int:
    return math.ceil((HEADER_SIZE + len(tf.frame.payload)) * 8 / tf.meta.phy_rate_mbps)


def _quantize(dbm: float) -> int:
    return max(-128, min(127, round(dbm)))


def _phy(rssi_dbm: int, params) -> int:
    return int(predict_phy_rate(params, rssi_dbm))


# -- links -------------------------------------------------------------------


class ControlBus:
    """Reliable message bus; one-way latency is the sum of both last miles."""

    def __init__(self, world: "World"):
        self.world = world

    def latency_us(self, a: int, b: int) -> int:
        ea, eb = self.world.eaps[a], self.world.eaps[b]
        return round((ea.spec.backhaul.latency_ms + eb.spec.backhaul.latency_ms) * 1000)

    def send(self, src: int, dst: int, msg) -> None:
        k = self.world.kernel
        delay = self.latency_us(src, dst)
        raw = encode_msg(msg)
        k.after(delay, self._deliver, src, dst, raw, k.now, delay)

    def _deliver(self, src, dst, raw, sent_us, delay):
        w = self.world
        if w.trace:
            w.metrics.trace.append(("ctl", sent_us, w.kernel.now, delay))
        w.eaps[dst].on_control(src, decode_msg(raw))


class Tunnel:
    """Byte pipe between a VAP owner and the host of its WTP.

    Each direction serialises frames at the capacity of the sender's
    uplink and then adds the one-way latency.
    """

    def __init__(self, world: "World", owner: int, host: int):
        self.world, self.owner, self.host = world, owner, host
        self.ends: dict[int, object] = {}
        self._busy_until = {owner: 0, host: 0}

    def bind(self, node: int, port) -> None:
        self.ends[node] = port

    @property
    def up(self) -> bool:
        return len(self.ends) == 2

    def send(self, src: int, tf: TaggedFrame) -> None:
        w = self.world
        raw = encode(tf)
        w.metrics.tunnel_frames[tf.frame.kind.name] += 1
        if not self.up:
            w.metrics.tunnel_frames["dropped_unbound"] += 1
            return
        dst = self.host if src == self.owner else self.owner
        k = w.kernel
        spec = w.eaps[src].spec
        start = max(k.now, self._busy_until[src])
        serial = math.ceil(len(raw) * 8 / spec.backhaul.ul_mbps)
        self._busy_until[src] = start + serial
        latency = w.bus.latency_us(src, dst)
        k.at(start + serial + latency, self._deliver, dst, raw, k.now, latency)

    def _deliver(self, dst, raw, sent_us, latency):
        w = self.world
        if w.trace:
            w.metrics.trace.append(("tunnel", sent_us, w.kernel.now, latency))
        w.eaps[dst].switch_in(self.ends[dst], decode(raw))


class Medium:
    def __init__(self, world: "World"):
        self.world = world
        self.radios: list = []

    def transmit(self, sender, tx_dbm: float, tf: TaggedFrame) -> None:
        w = self.world
        model = w.scenario.path_loss
        tf = TaggedFrame(tf.frame, replace(tf.meta, tx_power_dbm=_quantize(tx_dbm), injected=False, tx_status=False))
        dur = airtime_us(tf)
        w.air_frames[tf.frame.kind.name] += 1
        for r in self.radios:
            if r is sender or r.channel != sender.channel:
                continue
            loss = link_loss(model, sender.position, r.position, w.shadow(sender.name, r.name))
            rx = tx_dbm - loss
            if rx < model.sensitivity_dbm:
                continue
            heard = TaggedFrame(tf.frame, replace(tf.meta, rssi_dbm=_quantize(rx)))
            w.kernel.after(dur, r.on_air, heard, rx, sender)


# -- nodes -------------------------------------------------------------------


class Eap:
    """One residential access point: radio, RAP stack, VAP, switch, controller."""

    def __init__(self, world: "World", spec: EapSpec, rtt_us: int):
        self.world = world
        self.spec = spec
        self.name = spec.name
        self.id = spec.id
        self.position = spec.position
        self.channel = spec.channel
        self.ssid = spec.ssid.encode()
        self.rap_bssid = spec.rap_bssid
        self.vap_bssid = spec.vap_bssid
        self.switch = Switch(spec.name)
        policy = accept_all if spec.policy == "accept" else reject_all
        bss = BssConfig(spec.ssid, spec.vap_bssid, spec.channel)
        self.ctl = Controller(spec.id, self.switch, bss, rtt_us, policy, BackhaulCaps(spec.backhaul.dl_mbps, spec.backhaul.ul_mbps))
        self.background: dict[str, float] = {}  # name -> PHY rate, uplink backlogged
        self.rap_clients: dict[bytes, int] = {}  # sta -> PHY rate
        self.wtp_clients: dict[tuple, int] = {}  # (owner id, sta) -> PHY rate
        self.vap_clients: dict[bytes, Optional[int]] = {}  # sta -> host id, None for own radio
        self.discovered_at: dict[int, int] = {}
        self.tunnel_of: dict[int, tuple] = {}  # tunnel port id -> (owner, host)
        self.seq = 0

    # -- helpers ----------------------------------------------------------

    def _frame(self, kind, dst, src, payload=b"", protected=False) -> Dot11Frame:
        self.seq = (self.seq + 1) % 4096
        return Dot11Frame(kind, dst, src, src, seq=self.seq, protected=protected, payload=payload)

    def radio_members(self) -> list:
        """(name, PHY rate) of everybody contending on this radio, in a fixed order."""
        out = [(n, r) for n, r in self.background.items()]
        out += [(self.world.sta_name(m), r) for m, r in self.rap_clients.items()]
        out += [(self.world.sta_name(m), r) for (_, m), r in self.wtp_clients.items()]
        return out

    def home_load(self) -> list:
        return [r for _, r in self.radio_members()]

    def available_backhaul(self) -> BackhaulCaps:
        """Backhaul left over after this EAP's own background uplink traffic."""
        b = self.spec.backhaul
        used_ul = 0.0
        if self.background:
            members = [Member(n, r) for n, r in self.radio_members()]
            rates = bss_throughput(members, self.world.scenario.txop_mode)
            used_ul = math.fsum(rates[n].wireless_mbps for n in self.background)
        return BackhaulCaps(b.dl_mbps, max(0.0, b.ul_mbps - min(used_ul, b.ul_mbps)))

    def transmit(self, tf: TaggedFrame, tx_dbm: Optional[float] = None) -> None:
        self.world.medium.transmit(self, self.spec.tx_power_dbm if tx_dbm is None else tx_dbm, tf)

    # -- control plane ----------------------------------------------------

    def act(self, actions) -> None:
        w = self.world
        for a in actions:
            if isinstance(a, Send):
                w.bus.send(self.id, a.dst, a.msg)
            elif isinstance(a, SetTimer):
                w.kernel.after(a.delay_us, self._timer, a.token)
            elif isinstance(a, BindTunnel):
                self.tunnel_of[a.port.id] = (a.owner, a.host)
                w.tunnel(a.owner, a.host).bind(self.id, a.port)

    def _timer(self, token) -> None:
        self.act(self.ctl.on_timer(token, self.world.kernel.now))

    def discover(self, neighbor: int) -> None:
        self.discovered_at.setdefault(neighbor, self.world.kernel.now)
        self.act(self.ctl.on_discovery(neighbor, self.world.kernel.now))

    def on_control(self, src: int, msg) -> None:
        w = self.world
        before = self.ctl.phase(src)
        try:
            self.act(self.ctl.on_message(src, msg, w.kernel.now))
        except UnexpectedMsg as exc:
            w.metrics.unexpected_msgs += 1
            log.info("%s: %s", self.name, exc)
            return
        if before is not self.ctl.phase(src) and src in self.ctl.established():
            started = self.discovered_at.get(src, 0)
            w.metrics.handshake_us.setdefault((self.name, w.eaps[src].name), []).append(w.kernel.now - started)

    def send_reports(self) -> None:
        self.ctl.backhaul = self.available_backhaul()
        self.act(self.ctl.broadcast_report())

    def beacon(self) -> None:
        w = self.world
        # the RAP's own beacon goes on air; the VAP's goes through the switch
        self.transmit(TaggedFrame(self._frame(FrameKind.BEACON, BROADCAST, self.rap_bssid, self.ssid)))
        if self.ctl.established():
            self.vap_send(TaggedFrame(self._frame(FrameKind.BEACON, BROADCAST, self.vap_bssid, self.ssid)))
        w.kernel.after(w.scenario.schedule.beacon_interval_us, self.beacon)

    # -- switch -----------------------------------------------------------

    def switch_in(self, ingress, tf: TaggedFrame) -> None:
        out = self.switch.process(ingress, tf)
        if not isinstance(out, list):
            self.world.metrics.switch_drops[out.reason.value] += 1
            return
        for egress, f in out:
            self.emit(egress, f, ingress)

    def emit(self, egress, tf: TaggedFrame, ingress=None) -> None:
        role = egress.role
        if role is PortRole.TUNNEL:
            self.world.tunnel(*self.tunnel_of[egress.id]).send(self.id, tf)
        elif role is PortRole.VAP_ATTACH:
            self.world.kernel.after(PROC_US, self.vap_rx, tf, ingress)
        elif role is PortRole.WTP_RADIO:
            self.wtp_tx(egress, tf)
        elif role is PortRole.RAP_RADIO:
            self.transmit(tf)

    # -- air --------------------------------------------------------------

    def on_air(self, tf: TaggedFrame, rx_dbm: float, sender) -> None:
        f = tf.frame
        ctl = self.ctl
        hosted_bssids = {h.bss.bssid: h for h in ctl.hosted.values()}
        local_vap = f.addr1 == self.vap_bssid and ctl.sta_port(f.addr2) == ctl.rap_port
        if f.addr1 == self.rap_bssid or f.addr1 in hosted_bssids or local_vap:
            ack = ack_locally(tf, self.world.kernel.now)
            if ack is not None:
                self.world.kernel.at(ack[0], self.transmit, ack[1])

        if f.addr1 == self.rap_bssid or f.kind is FrameKind.PROBE_REQUEST:
            self.rap_rx(tf)
        if local_vap:
            self.switch_in(ctl.rap_port, tf)
        for h in list(ctl.hosted.values()):
            if f.addr1 == h.bss.bssid and f.kind is FrameKind.ASSOC_REQUEST:
                self.wtp_clients[(h.requester, f.addr2)] = _phy(tf.meta.rssi_dbm, self.world.scenario.steering)
            upstream = f.kind in (FrameKind.PROBE_REQUEST, FrameKind.AUTH_REQUEST, FrameKind.ASSOC_REQUEST, FrameKind.DATA)
            if upstream and (f.addr1 == h.bss.bssid or f.kind is FrameKind.PROBE_REQUEST):
                ctl.observe_upstream(h.wtp_port, f.addr2)
            self.switch_in(h.wtp_port, tf)

    def wtp_tx(self, port, tf: TaggedFrame) -> None:
        f = tf.frame
        tx = None
        if f.kind is FrameKind.PROBE_RESPONSE:
            key = (f.addr1, f.addr2)
            if key in self.ctl.probe_tx_power:
                tx = self.ctl.probe_tx_power[key]
                if tx is None:
                    return
        phy = self.wtp_clients.get((port.neighbor, f.addr1))
        if phy:
            tf = TaggedFrame(f, replace(tf.meta, phy_rate_mbps=phy))
        self.transmit(tf, tx)
        # the radio reports the injected transmission back; stage 1 drops it
        self.switch_in(port, tx_status_for(tf))

    # -- RAP stack ------------------------------------------------------

    def rap_rx(self, tf: TaggedFrame) -> None:
        f = tf.frame
        w = self.world
        params = w.scenario.steering
        if f.kind is FrameKind.PROBE_REQUEST:
            tx = self.spec.tx_power_dbm
            if w.scenario.mode == "nxwlan":
                self.ctl.backhaul = self.available_backhaul()
                d = self.ctl.on_probe_request(params, f.addr2, tf.meta.rssi_dbm, self.rap_bssid, self.home_load(), w.scenario.txop_mode)
                tx = d.rap_tx_dbm
            if tx is not None and f.payload in (b"", self.ssid):
                resp = self._frame(FrameKind.PROBE_RESPONSE, f.addr2, self.rap_bssid, self.ssid)
                w.kernel.after(PROC_US, self.transmit, TaggedFrame(resp), tx)
        elif f.kind is FrameKind.AUTH_REQUEST:
            resp = self._frame(FrameKind.AUTH_RESPONSE, f.addr2, self.rap_bssid)
            w.kernel.after(PROC_US, self.transmit, TaggedFrame(resp))
        elif f.kind is FrameKind.ASSOC_REQUEST:
            phy = _phy(tf.meta.rssi_dbm, params)
            self.rap_clients[f.addr2] = phy
            resp = self._frame(FrameKind.ASSOC_RESPONSE, f.addr2, self.rap_bssid)
            w.kernel.after(PROC_US, self.transmit, TaggedFrame(resp, RadioMeta(phy_rate_mbps=phy)))
        elif f.kind is FrameKind.DATA:
            w.uplink_frames += 1

    def send_downlink(self, sta: bytes) -> None:
        """One data frame to a freshly associated client, to prove the path."""
        payload = bytes(DATA_PAYLOAD)
        if sta in self.rap_clients:
            f = self._frame(FrameKind.DATA, sta, self.rap_bssid, payload, protected=True)
            self.transmit(TaggedFrame(f, RadioMeta(phy_rate_mbps=self.rap_clients[sta])))
        elif sta in self.vap_clients:
            self.vap_send(TaggedFrame(self._frame(FrameKind.DATA, sta, self.vap_bssid, payload, protected=True)))

    # -- VAP stack --------------------------------------------------------

    def vap_send(self, tf: TaggedFrame, port=None) -> None:
        """Inject a VAP frame: through the tables, or straight out of ``port``."""
        if port is None:
            self.switch_in(self.ctl.vap_port, tf)
        else:
            self.emit(port, tf, self.ctl.vap_port)
        # the virtual radio acknowledges every injection at once
        self.switch_in(self.ctl.vap_port, tx_status_for(tf))

    def vap_rx(self, tf: TaggedFrame, ingress) -> None:
        f = tf.frame
        via = ingress.neighbor if ingress.role is PortRole.TUNNEL else None
        if f.kind is FrameKind.PROBE_REQUEST:
            if f.payload in (b"", self.ssid):
                resp = self._frame(FrameKind.PROBE_RESPONSE, f.addr2, self.vap_bssid, self.ssid)
                self.vap_send(TaggedFrame(resp), port=ingress)
        elif f.kind is FrameKind.AUTH_REQUEST and f.addr1 == self.vap_bssid:
            self.ctl.attach_sta(f.addr2, via)
            self.vap_send(TaggedFrame(self._frame(FrameKind.AUTH_RESPONSE, f.addr2, self.vap_bssid)))
        elif f.kind is FrameKind.ASSOC_REQUEST and f.addr1 == self.vap_bssid:
            self.vap_clients[f.addr2] = via
            self.vap_send(TaggedFrame(self._frame(FrameKind.ASSOC_RESPONSE, f.addr2, self.vap_bssid)))
        elif f.kind is FrameKind.DATA:
            self.world.uplink_frames += 1

    def forget(self, sta: bytes) -> None:
        self.rap_clients.pop(sta, None)
        for key in [k for k in self.wtp_clients if k[1] == sta]:
            del self.wtp_clients[key]
        if self.vap_clients.pop(sta, None) is not None or self.ctl.sta_port(sta) is not None:
            self.ctl.detach_sta(sta)


@dataclass
class Serving:
    eap: Eap  # radio the station is associated through
    bssid: bytes
    label: str
    phy: int
    owner: Eap  # whose network (backhaul) carries the traffic


class Station:
    def __init__(self, world: "World", spec: StaSpec):
        self.world = world
        self.spec = spec
        self.name = spec.name
        self.mac = parse_mac(spec.mac)
        self.home = world.eap_by_name[spec.home]
        self.ssid = self.home.ssid
        self.tx_power = spec.tx_power_dbm if spec.tx_power_dbm is not None else world.scenario.steering.ptx_client_dbm
        self.position = spec.waypoints[0].position if spec.waypoints else (0.0, 0.0)
        self.channel = spec.channels[0]
        self.state = "idle"
        self.heard: list = []
        self.target: Optional[Heard] = None
        self.serving: Optional[Serving] = None
        self.downlink_frames = 0
        self.attempt = 0
        self.seq = 0

    def _frame(self, kind, dst, bssid, payload=b"", protected=False):
        self.seq = (self.seq + 1) % 4096
        return Dot11Frame(kind, dst, self.mac, bssid, seq=self.seq, protected=protected, payload=payload)

    def transmit(self, tf: TaggedFrame) -> None:
        self.world.medium.transmit(self, self.tx_power, tf)

    def move(self, wp: Waypoint) -> None:
        w = self.world
        self.world.disassociate(self)
        self.position = wp.position
        self.attempt += 1
        self.state, self.heard, self.target = "scanning", [], None
        dwell = w.scenario.schedule.probe_dwell_ms * 1000
        for i, ch in enumerate(self.spec.channels):
            w.kernel.after(i * dwell, self._probe, ch, self.attempt)
        w.kernel.after(len(self.spec.channels) * dwell, self._choose, self.attempt)

    def _probe(self, ch, attempt) -> None:
        if attempt != self.attempt:
            return
        self.channel = ch
        self.transmit(TaggedFrame(self._frame(FrameKind.PROBE_REQUEST, BROADCAST, BROADCAST, self.ssid)))

    def _choose(self, attempt) -> None:
        if attempt != self.attempt:
            return
        best = choose_response(self.heard, self.world.scenario.path_loss.sensitivity_dbm)
        if best is None:
            self.state = "idle"
            return
        self.target = best
        self.channel = best.channel
        self.state = "authenticating"
        self.transmit(TaggedFrame(self._frame(FrameKind.AUTH_REQUEST, best.bssid, best.bssid)))
        self.world.kernel.after(ASSOC_TIMEOUT_US, self._give_up, attempt)

    def _give_up(self, attempt) -> None:
        if attempt == self.attempt and self.state != "associated":
            self.state = "idle"

    def on_air(self, tf: TaggedFrame, rx_dbm: float, sender) -> None:
        f = tf.frame
        if f.addr1 != self.mac:
            return
        ack = ack_locally(tf, self.world.kernel.now)
        if ack is not None:
            self.world.kernel.at(ack[0], self.transmit, ack[1])
        if f.kind is FrameKind.PROBE_RESPONSE and self.state == "scanning" and f.payload == self.ssid:
            self.heard.append(Heard(f.addr2, self.world.label(sender, f.addr2), rx_dbm, self.channel))
        elif self.target is None or f.addr2 != self.target.bssid:
            return
        elif f.kind is FrameKind.AUTH_RESPONSE and self.state == "authenticating":
            self.state = "associating"
            req = self._frame(FrameKind.ASSOC_REQUEST, self.target.bssid, self.target.bssid, self.ssid)
            self.world.kernel.after(PROC_US, self.transmit, TaggedFrame(req))
        elif f.kind is FrameKind.ASSOC_RESPONSE and self.state == "associating":
            self.state = "associated"
            self.world.associated(self, sender, self.target)
        elif f.kind is FrameKind.DATA and self.state == "associated":
            self.downlink_frames += 1


# -- world -------------------------------------------------------------------


class World:
    def __init__(self, scenario: Scenario, seed: int, rep: int, trace: bool = False):
        self.scenario = scenario
        self.rep = rep
        self.trace = trace
        self.kernel = Kernel()
        self.metrics = Metrics()
        self.shadow = Shadowing(scenario.path_loss.shadowing_sigma_db, f"{seed}:{rep}")
        self.medium = Medium(self)
        self.bus = ControlBus(self)
        self.tunnels: dict[tuple, Tunnel] = {}
        self.uplink_frames = 0
        self.air_frames: Counter = Counter()

        max_latency = max((e.backhaul.latency_ms for e in scenario.eaps), default=0.0)
        self.eaps: dict[int, Eap] = {}
        for spec in scenario.eaps:
            rtt = round(2 * (spec.backhaul.latency_ms + max_latency) * 1000)
            self.eaps[spec.id] = Eap(self, spec, rtt)
        self.eap_by_name = {e.name: e for e in self.eaps.values()}
        for bg in scenario.background:
            self.eap_by_name[bg.eap].background[bg.name] = bg.phy_rate_mbps
        self.stations = [Station(self, s) for s in scenario.stas]
        self._sta_names = {s.mac: s.name for s in self.stations}
        self.medium.radios = list(self.eaps.values()) + self.stations

    def sta_name(self, mac: bytes) -> str:
        return self._sta_names.get(mac, mac.hex())

    def tunnel(self, owner: int, host: int) -> Tunnel:
        key = (owner, host)
        if key not in self.tunnels:
            self.tunnels[key] = Tunnel(self, owner, host)
        return self.tunnels[key]

    def label(self, radio: Eap, bssid: bytes) -> str:
        return f"{radio.name}.rap" if bssid == radio.rap_bssid else f"{radio.name}.wtp"

    # -- association bookkeeping ----------------------------------------

    def associated(self, sta: Station, radio: Eap, target: Heard) -> None:
        if target.bssid == radio.rap_bssid:
            owner = radio
            phy = radio.rap_clients[sta.mac]
        else:
            owner = next(e for e in self.eaps.values() if e.vap_bssid == target.bssid)
            phy = radio.wtp_clients[(owner.id, sta.mac)]
        sta.serving = Serving(radio, target.bssid, target.label, phy, owner)
        self.kernel.after(PROC_US, owner.send_downlink, sta.mac)
        up = sta._frame(FrameKind.DATA, target.bssid, target.bssid, bytes(DATA_PAYLOAD), protected=True)
        self.kernel.after(2 * PROC_US, sta.transmit, TaggedFrame(up, RadioMeta(phy_rate_mbps=phy)))

    def disassociate(self, sta: Station) -> None:
        # stations leave without a deauthentication frame; every AP drops
        # its state for them, as an inactivity timeout would
        sta.serving = None
        for e in self.eaps.values():
            e.forget(sta.mac)

    def measure(self, sta: Station, wp: Waypoint) -> None:
        mode = self.scenario.mode
        s = sta.serving
        if s is None or sta.state != "associated":
            self.metrics.rows.append(Row(mode, wp.location_m, self.rep, "none", 0.0, sta=sta.name))
            return
        members = [Member(n, r) for n, r in s.eap.radio_members() if n != sta.name]
        caps = s.owner.available_backhaul()
        via_wtp = s.owner is not s.eap
        members.append(Member(sta.name, s.phy, caps.dl_mbps, caps.ul_mbps if via_wtp else None))
        flow = bss_throughput(members, self.scenario.txop_mode)[sta.name]
        self.metrics.rows.append(
            Row(
                mode,
                wp.location_m,
                self.rep,
                s.label,
                flow.mbps,
                flow.wireless_mbps,
                flow.dl_backhaul_mbps,
                flow.tunnel_ul_mbps,
                s.phy,
                sta.name,
            )
        )

    # -- schedule ---------------------------------------------------------

    def start(self) -> int:
        """Schedule everything; returns the time by which the run is over."""
        sc = self.scenario
        k = self.kernel
        if sc.mode == "nxwlan":
            for a, b in sc.adjacency:
                k.at(0, self.eap_by_name[a].discover, self.eap_by_name[b].id)
            for e in self.eaps.values():
                self._report_tick(e)
        for i, e in enumerate(self.eaps.values()):
            # stagger beacons so that APs do not transmit in lockstep
            k.at(1000 * (i + 1), e.beacon)
        end = 0
        for sta in self.stations:
            for wp in sta.spec.waypoints:
                k.at(wp.at_ms * 1000, sta.move, wp)
                t = (wp.at_ms + sc.schedule.measure_offset_ms) * 1000
                k.at(t, self.measure, sta, wp)
                end = max(end, t)
        return end

    def _report_tick(self, e: Eap) -> None:
        e.send_reports()
        self.kernel.after(self.scenario.schedule.report_interval_ms * 1000, self._report_tick, e)

def run_once(scenario: Scenario, seed: int, rep: int, trace: bool = False) -> tuple:
    w = World(scenario, seed, rep, trace)
    end = w.start()
    w.kernel.run(until_us=end)
    return w.metrics, w


def run(scenario: Scenario, seed: int = 0, trace: bool = False) -> Metrics:
    """All repetitions of ``scenario`` in its configured mode."""
    validate(scenario)
    total = Metrics()
    for rep in range(scenario.schedule.repetitions):
        m, _ = run_once(scenario, seed, rep, trace)
        total.merge(m)
    return total
