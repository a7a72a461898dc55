import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nxwlan.errors import BadRule
from nxwlan.frame import BROADCAST, Dot11Frame, FrameKind, RadioMeta, TaggedFrame, parse_mac
from nxwlan.switch import (
    WILDCARD,
    BroadcastRule,
    Drop,
    DropReason,
    MulticastGroup,
    PortRole,
    Switch,
    UnicastRule,
)
from strategies import macs, tagged_frames

STA1 = parse_mac("02:00:00:00:01:01")
BSSID = parse_mac("02:00:00:00:00:01")


@pytest.fixture
def sw():
    s = Switch("test")
    s.rap = s.add_port(PortRole.RAP_RADIO)
    s.vap = s.add_port(PortRole.VAP_ATTACH)
    s.wtp1 = s.add_port(PortRole.WTP_RADIO, 1)
    s.tun1 = s.add_port(PortRole.TUNNEL, 1)
    s.wtp2 = s.add_port(PortRole.WTP_RADIO, 2)
    s.tun2 = s.add_port(PortRole.TUNNEL, 2)
    return s


def data(dst, src=BSSID, **meta):
    return TaggedFrame(Dot11Frame(FrameKind.DATA, dst, src, src, protected=True, payload=b"\x00" * 32), RadioMeta(**meta))


def test_ack_dropped_on_any_port(sw):
    ack = TaggedFrame(Dot11Frame(FrameKind.ACK, STA1))
    for port in sw.ports:
        assert sw.process(port, ack) == Drop(DropReason.CONTROL_FRAME)


def test_beacon_sniffed_on_wtp_port_dropped(sw):
    beacon = TaggedFrame(Dot11Frame(FrameKind.BEACON, BROADCAST, BSSID, BSSID))
    sw.install_broadcast(BroadcastRule(sw.wtp1, WILDCARD, MulticastGroup(1, {sw.tun1})))
    assert sw.process(sw.wtp1, beacon) == Drop(DropReason.SNIFFED_BEACON)


def test_beacon_from_tunnel_is_forwarded(sw):
    beacon = TaggedFrame(Dot11Frame(FrameKind.BEACON, BROADCAST, BSSID, BSSID))
    sw.install_broadcast(BroadcastRule(sw.tun1, BSSID, MulticastGroup(1, {sw.wtp1})))
    assert sw.process(sw.tun1, beacon) == [(sw.wtp1, beacon)]


def test_tx_status_report_dropped(sw):
    sw.install_unicast(UnicastRule(sw.wtp1, STA1, sw.tun1))
    tf = data(STA1, injected=True, tx_status=True)
    assert sw.process(sw.wtp1, tf) == Drop(DropReason.TX_STATUS)


def test_unicast_hit(sw):
    sw.install_unicast(UnicastRule(sw.tun1, STA1, sw.wtp1))
    tf = data(STA1)
    assert sw.process(sw.tun1, tf) == [(sw.wtp1, tf)]


def test_probe_request_fans_out_through_broadcast_table(sw):
    sw.install_broadcast(BroadcastRule(sw.wtp1, WILDCARD, MulticastGroup(1, {sw.tun1})))
    # directed probe (unicast addr1) still takes the broadcast path
    probe = TaggedFrame(Dot11Frame(FrameKind.PROBE_REQUEST, BSSID, STA1, BSSID))
    assert sw.process(sw.wtp1, probe) == [(sw.tun1, probe)]


def test_exact_source_beats_wildcard(sw):
    sw.install_broadcast(BroadcastRule(sw.wtp1, WILDCARD, MulticastGroup(1, {sw.tun1})))
    sw.install_broadcast(BroadcastRule(sw.wtp1, STA1, MulticastGroup(2, {sw.tun2})))
    probe = TaggedFrame(Dot11Frame(FrameKind.PROBE_REQUEST, BROADCAST, STA1, BROADCAST))
    assert [p for p, _ in sw.process(sw.wtp1, probe)] == [sw.tun2]


def test_replacement_semantics(sw):
    sw.install_unicast(UnicastRule(sw.vap, STA1, sw.tun1))
    sw.install_unicast(UnicastRule(sw.vap, STA1, sw.tun2))
    assert [p for p, _ in sw.process(sw.vap, data(STA1))] == [sw.tun2]


def test_bad_rules(sw):
    with pytest.raises(BadRule):
        sw.install_unicast(UnicastRule(sw.tun1, STA1, sw.tun1))
    with pytest.raises(BadRule):
        sw.install_broadcast(BroadcastRule(sw.wtp1, WILDCARD, MulticastGroup(1, {sw.wtp1, sw.tun1})))
    with pytest.raises(BadRule):
        sw.install_broadcast(BroadcastRule(sw.wtp1, WILDCARD, MulticastGroup(1, set())))
    foreign = Switch("other").add_port(PortRole.LAN)
    with pytest.raises(BadRule):
        sw.install_unicast(UnicastRule(sw.vap, STA1, foreign))


def test_broadcast_group_copies(sw):
    sw.install_broadcast(BroadcastRule(sw.vap, BSSID, MulticastGroup(7, {sw.tun1, sw.tun2})))
    beacon = TaggedFrame(Dot11Frame(FrameKind.BEACON, BROADCAST, BSSID, BSSID))
    out = sw.process(sw.vap, beacon)
    assert {p for p, _ in out} == {sw.tun1, sw.tun2}
    assert all(f is beacon for _, f in out)


def test_remove_then_no_rule(sw):
    sw.install_broadcast(BroadcastRule(sw.vap, BSSID, MulticastGroup(7, {sw.tun1})))
    sw.remove_broadcast(sw.vap, BSSID)
    sw.remove_broadcast(sw.vap, BSSID)  # absent key: no-op
    beacon = TaggedFrame(Dot11Frame(FrameKind.BEACON, BROADCAST, BSSID, BSSID))
    assert sw.process(sw.vap, beacon) == Drop(DropReason.NO_RULE)
    sw.install_unicast(UnicastRule(sw.vap, STA1, sw.tun1))
    sw.remove_unicast(sw.vap, STA1)
    assert sw.process(sw.vap, data(STA1)) == Drop(DropReason.NO_RULE)


def test_dump_rules(sw):
    sw.install_unicast(UnicastRule(sw.tun1, STA1, sw.wtp1))
    sw.install_broadcast(BroadcastRule(sw.wtp1, WILDCARD, MulticastGroup(3, {sw.tun1})))
    assert sw.dump_rules() == [
        f"unicast,{sw.tun1.id},02:00:00:00:01:01,{sw.wtp1.id}",
        f"broadcast,{sw.wtp1.id},*,g3:{sw.tun1.id}",
    ]


@given(tagged_frames(), st.data())
def test_drop_stage_wins_over_rules(tf, draw):
    sw = Switch()
    ports = [sw.add_port(PortRole.WTP_RADIO, 1), sw.add_port(PortRole.TUNNEL, 1), sw.add_port(PortRole.VAP_ATTACH)]
    ingress = draw.draw(st.sampled_from(ports))
    others = [p for p in ports if p != ingress]
    sw.install_unicast(UnicastRule(ingress, tf.frame.addr1, others[0]))
    sw.install_broadcast(BroadcastRule(ingress, WILDCARD, MulticastGroup(1, set(others))))
    out = sw.process(ingress, tf)
    must_drop = (
        tf.frame.kind is FrameKind.ACK
        or tf.meta.tx_status
        or (tf.frame.kind is FrameKind.BEACON and ingress.role is PortRole.WTP_RADIO)
    )
    assert isinstance(out, Drop) == must_drop


@given(tagged_frames(kinds=st.sampled_from([FrameKind.DATA, FrameKind.AUTH_REQUEST])), macs)
def test_unicast_emits_zero_or_one(tf, other_mac):
    if tf.meta.tx_status or tf.frame.addr1 == BROADCAST:
        return
    sw = Switch()
    a, b = sw.add_port(PortRole.TUNNEL, 1), sw.add_port(PortRole.WTP_RADIO, 1)
    sw.install_unicast(UnicastRule(a, other_mac, b))
    out = sw.process(a, tf)
    if tf.frame.addr1 == other_mac:
        assert out == [(b, tf)]
    else:
        assert out == Drop(DropReason.NO_RULE)


def test_replacement_is_atomic_under_concurrent_process(sw):
    tf = data(STA1)
    sw.install_unicast(UnicastRule(sw.vap, STA1, sw.tun1))
    stop = threading.Event()
    bad = []

    def flipper():
        targets = [sw.tun2, sw.tun1]
        i = 0
        while not stop.is_set():
            sw.apply([UnicastRule(sw.vap, STA1, targets[i % 2])])
            i += 1

    t = threading.Thread(target=flipper)
    t.start()
    try:
        for _ in range(20000):
            out = sw.process(sw.vap, tf)
            if not (isinstance(out, list) and len(out) == 1 and out[0][0] in (sw.tun1, sw.tun2)):
                bad.append(out)
    finally:
        stop.set()
        t.join()
    assert bad == []
