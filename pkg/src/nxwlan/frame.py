"""802.11 frame model and the fixed-layout wire codec.

The codec is what tunnels carry and what the switch parser stage reads.
It is not the IEEE bit layout; it keeps exactly the fields the pipeline
matches on (kind, three addresses, flags) plus the radio metadata a
RadioTap header would contribute.

Layout, big-endian, 27-byte header followed by the payload::

    [0]      kind code (Beacon=1 ... Data=9)
    [1]      flags: bit0 retry, bit1 protected, bit2 injected, bit3 tx_status
    [2:8]    addr1
    [8:14]   addr2
    [14:20]  addr3
    [20:22]  sequence number (low 12 bits)
    [22]     rssi_dbm, int8
    [23]     PHY rate index into PHY_RATES_11A
    [24]     tx_power_dbm, int8
    [25:27]  payload length, uint16
    [27:]    payload
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

from .errors import InvariantViolation, Malformed

PHY_RATES_11A = (6, 9, 12, 18, 24, 36, 48, 54)

BROADCAST = b"\xff" * 6
ZERO_MAC = bytes(6)

SEQ_MODULO = 4096

_HEADER = struct.Struct(">BB6s6s6sHbBbH")
HEADER_SIZE = _HEADER.size  # 27

FLAG_RETRY = 0x01
FLAG_PROTECTED = 0x02
FLAG_INJECTED = 0x04
FLAG_TX_STATUS = 0x08
_FLAG_MASK = 0x0F

_OFF_FLAGS = 1
_OFF_ADDR2 = 8
_OFF_SEQ = 20
_OFF_RATE = 23
_OFF_LEN = 25


class FrameKind(enum.IntEnum):
    BEACON = 1
    PROBE_REQUEST = 2
    PROBE_RESPONSE = 3
    AUTH_REQUEST = 4
    AUTH_RESPONSE = 5
    ASSOC_REQUEST = 6
    ASSOC_RESPONSE = 7
    ACK = 8
    DATA = 9

    @property
    def is_control(self) -> bool:
        return self is FrameKind.ACK

    @property
    def is_management(self) -> bool:
        return FrameKind.BEACON <= self <= FrameKind.ASSOC_RESPONSE


def parse_mac(text: str) -> bytes:
    """``"02:00:00:00:00:01"`` -> 6 raw bytes."""
    parts = text.replace("-", ":").split(":")
    if len(parts) != 6:
        raise ValueError(f"not a MAC address: {text!r}")
    try:
        raw = bytes(int(p, 16) for p in parts)
    except ValueError:
        raise ValueError(f"not a MAC address: {text!r}") from None
    return raw


def format_mac(mac: bytes) -> str:
    return ":".join(f"{b:02x}" for b in mac)


def is_group_address(mac: bytes) -> bool:
    return bool(mac[0] & 0x01)


@dataclass(frozen=True)
class Dot11Frame:
    kind: FrameKind
    addr1: bytes
    addr2: bytes = ZERO_MAC
    addr3: bytes = ZERO_MAC
    seq: int = 0
    retry: bool = False
    protected: bool = False
    payload: bytes = b""

    def validate(self) -> None:
        if not isinstance(self.kind, FrameKind):
            raise InvariantViolation(f"unknown frame kind {self.kind!r}")
        for name in ("addr1", "addr2", "addr3"):
            mac = getattr(self, name)
            if not isinstance(mac, (bytes, bytearray)) or len(mac) != 6:
                raise InvariantViolation(f"{name} must be 6 bytes")
        if not 0 <= self.seq < SEQ_MODULO:
            raise InvariantViolation(f"seq {self.seq} outside 12 bits")
        if len(self.payload) > 0xFFFF:
            raise InvariantViolation("payload longer than 65535 bytes")
        if self.kind is FrameKind.ACK:
            if self.addr2 != ZERO_MAC or self.addr3 != ZERO_MAC:
                raise InvariantViolation("Ack frames carry addr1 only")
            if self.payload:
                raise InvariantViolation("Ack frames carry no payload")
        if self.protected and self.kind is not FrameKind.DATA:
            raise InvariantViolation("only Data frames can be protected")

    @property
    def is_broadcast(self) -> bool:
        return self.addr1 == BROADCAST


@dataclass(frozen=True)
class RadioMeta:
    """Per-frame radio metadata (the RadioTap part of a captured frame)."""

    rssi_dbm: int = 0
    phy_rate_mbps: int = PHY_RATES_11A[0]
    tx_power_dbm: int = 0
    injected: bool = False
    tx_status: bool = False

    def validate(self) -> None:
        for name in ("rssi_dbm", "tx_power_dbm"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvariantViolation(f"{name} must be an integer dBm value")
            if not -128 <= value <= 127:
                raise InvariantViolation(f"{name}={value} does not fit in int8")
        if self.phy_rate_mbps not in PHY_RATES_11A:
            raise InvariantViolation(f"PHY rate {self.phy_rate_mbps} is not an 802.11a rate")
        if self.tx_status and not self.injected:
            raise InvariantViolation("tx_status records are only produced for injected frames")


@dataclass(frozen=True)
class TaggedFrame:
    frame: Dot11Frame
    meta: RadioMeta = field(default_factory=RadioMeta)

    def validate(self) -> None:
        self.frame.validate()
        self.meta.validate()

    @property
    def wire_size(self) -> int:
        return HEADER_SIZE + len(self.frame.payload)


def encode(tf: TaggedFrame) -> bytes:
    tf.validate()
    f, m = tf.frame, tf.meta
    flags = (
        (FLAG_RETRY if f.retry else 0)
        | (FLAG_PROTECTED if f.protected else 0)
        | (FLAG_INJECTED if m.injected else 0)
        | (FLAG_TX_STATUS if m.tx_status else 0)
    )
    header = _HEADER.pack(
        int(f.kind),
        flags,
        bytes(f.addr1),
        bytes(f.addr2),
        bytes(f.addr3),
        f.seq,
        m.rssi_dbm,
        PHY_RATES_11A.index(m.phy_rate_mbps),
        m.tx_power_dbm,
        len(f.payload),
    )
    return header + bytes(f.payload)


def decode(data: bytes) -> TaggedFrame:
    """Inverse of :func:`encode`.

    Only canonical encodings are accepted, so ``encode(decode(b)) == b``
    whenever this returns. Anything else raises :class:`Malformed`.
    """
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise Malformed(len(data), "truncated")
    (kind_code, flags, a1, a2, a3, seq, rssi, rate_idx, txp, length) = _HEADER.unpack_from(data)
    try:
        kind = FrameKind(kind_code)
    except ValueError:
        raise Malformed(0, "unknown_kind") from None
    if flags & ~_FLAG_MASK:
        raise Malformed(_OFF_FLAGS, "reserved_flags")
    if seq >= SEQ_MODULO:
        raise Malformed(_OFF_SEQ, "seq_overflow")
    if rate_idx >= len(PHY_RATES_11A):
        raise Malformed(_OFF_RATE, "unknown_rate")
    if HEADER_SIZE + length != len(data):
        raise Malformed(HEADER_SIZE, "length_mismatch")

    injected = bool(flags & FLAG_INJECTED)
    tx_status = bool(flags & FLAG_TX_STATUS)
    protected = bool(flags & FLAG_PROTECTED)
    if tx_status and not injected:
        raise Malformed(_OFF_FLAGS, "tx_status_without_injected")
    if protected and kind is not FrameKind.DATA:
        raise Malformed(_OFF_FLAGS, "protected_non_data")
    payload = data[HEADER_SIZE:]
    if kind is FrameKind.ACK and (a2 != ZERO_MAC or a3 != ZERO_MAC):
        raise Malformed(_OFF_ADDR2, "ack_with_addresses")
    if kind is FrameKind.ACK and payload:
        raise Malformed(_OFF_LEN, "ack_with_payload")

    frame = Dot11Frame(
        kind=kind,
        addr1=a1,
        addr2=a2,
        addr3=a3,
        seq=seq,
        retry=bool(flags & FLAG_RETRY),
        protected=protected,
        payload=payload,
    )
    meta = RadioMeta(
        rssi_dbm=rssi,
        phy_rate_mbps=PHY_RATES_11A[rate_idx],
        tx_power_dbm=txp,
        injected=injected,
        tx_status=tx_status,
    )
    return TaggedFrame(frame, meta)


def make_ack(receiver: bytes) -> Dot11Frame:
    return Dot11Frame(FrameKind.ACK, addr1=receiver)


def next_seq(seq: int) -> int:
    return (seq + 1) % SEQ_MODULO
