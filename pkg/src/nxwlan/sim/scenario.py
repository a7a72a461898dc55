"""Scenario description, its JSON form, and the two built-in experiments.

A scenario file is a JSON object whose keys mirror :class:`Scenario`
field for field; ``docs/scenario.md`` lists them and
``scenarios/*.json`` are complete examples. Anything wrong is reported
as :class:`ScenarioError` with a path such as ``eaps[1].channel``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Optional

from ..errors import DomainError, ScenarioError
from ..frame import parse_mac
from ..radio import PathLossModel, Wall
from ..steering import SteeringParams

MODES = ("baseline", "nxwlan")
POLICIES = ("accept", "reject")


@dataclass(frozen=True)
class LinkDescriptor:
    latency_ms: float = 5.0
    capacity_mbps: float = 50.0

    def __post_init__(self):
        if self.latency_ms < 0:
            raise DomainError("latency must be non-negative")
        if not self.capacity_mbps > 0:
            raise DomainError("capacity must be positive")


@dataclass(frozen=True)
class Backhaul:
    dl_mbps: float = 50.0
    ul_mbps: float = 50.0
    latency_ms: float = 5.0  # last mile, one way

    @property
    def downlink(self) -> LinkDescriptor:
        return LinkDescriptor(self.latency_ms, self.dl_mbps)

    @property
    def uplink(self) -> LinkDescriptor:
        return LinkDescriptor(self.latency_ms, self.ul_mbps)


@dataclass(frozen=True)
class EapSpec:
    id: int
    name: str
    position: tuple
    channel: int
    ssid: str
    tx_power_dbm: float = 20.0
    backhaul: Backhaul = field(default_factory=Backhaul)
    policy: str = "accept"

    @property
    def rap_bssid(self) -> bytes:
        return bytes([2, 0, 0, 0, self.id, 1])

    @property
    def vap_bssid(self) -> bytes:
        return bytes([2, 0, 0, 0, self.id, 2])


@dataclass(frozen=True)
class Waypoint:
    at_ms: int
    position: tuple
    location_m: float


@dataclass(frozen=True)
class StaSpec:
    name: str
    mac: str
    home: str  # name of the EAP whose network the station joins
    waypoints: tuple
    channels: tuple = (40, 44)
    tx_power_dbm: Optional[float] = None  # None: the steering client TX power


@dataclass(frozen=True)
class BackgroundSpec:
    """A backlogged client already associated with an EAP's RAP."""

    name: str
    eap: str
    phy_rate_mbps: float = 6.0
    direction: str = "uplink"


@dataclass(frozen=True)
class Schedule:
    repetitions: int = 10
    epoch_s: float = 10.0
    beacon_interval_us: int = 102_400
    probe_dwell_ms: int = 50
    report_interval_ms: int = 1000
    measure_offset_ms: int = 600


@dataclass(frozen=True)
class Scenario:
    name: str
    mode: str
    eaps: tuple
    stas: tuple = ()
    background: tuple = ()
    adjacency: tuple = ()  # (requester, host) pairs, by EAP name
    steering: SteeringParams = field(default_factory=SteeringParams)
    path_loss: PathLossModel = field(default_factory=PathLossModel)
    schedule: Schedule = field(default_factory=Schedule)
    txop_mode: bool = False

    def with_mode(self, mode: str) -> "Scenario":
        if mode not in MODES:
            raise ScenarioError("mode", f"must be one of {MODES}")
        return replace(self, mode=mode)

    def eap(self, name: str) -> EapSpec:
        for e in self.eaps:
            if e.name == name:
                return e
        raise KeyError(name)


# -- validation -----------------------------------------------------------


def validate(s: Scenario) -> Scenario:
    if s.mode not in MODES:
        raise ScenarioError("mode", f"must be one of {', '.join(MODES)}")
    names, ids = set(), set()
    for i, e in enumerate(s.eaps):
        p = f"eaps[{i}]"
        if e.name in names:
            raise ScenarioError(f"{p}.name", f"duplicate EAP name {e.name!r}")
        if not 0 <= e.id <= 255 or e.id in ids:
            raise ScenarioError(f"{p}.id", "ids must be unique and in 0..255")
        names.add(e.name)
        ids.add(e.id)
        if e.channel not in (36, 40, 44, 48):
            raise ScenarioError(f"{p}.channel", f"{e.channel} is not a configured channel (36, 40, 44, 48)")
        if e.policy not in POLICIES:
            raise ScenarioError(f"{p}.policy", f"must be one of {POLICIES}")
        b = e.backhaul
        if b.dl_mbps <= 0 or b.ul_mbps <= 0:
            raise ScenarioError(f"{p}.backhaul", "capacities must be positive")
        if b.latency_ms < 0:
            raise ScenarioError(f"{p}.backhaul.latency_ms", "must be non-negative")
        if len(e.ssid.encode()) > 32:
            raise ScenarioError(f"{p}.ssid", "longer than 32 bytes")
    macs = set()
    for i, st in enumerate(s.stas):
        p = f"stas[{i}]"
        if st.home not in names:
            raise ScenarioError(f"{p}.home", f"unknown EAP {st.home!r}")
        try:
            mac = parse_mac(st.mac)
        except ValueError as exc:
            raise ScenarioError(f"{p}.mac", str(exc)) from None
        if mac in macs or mac[0] & 1:
            raise ScenarioError(f"{p}.mac", "must be a unique unicast address")
        macs.add(mac)
        if not st.channels or any(c not in (36, 40, 44, 48) for c in st.channels):
            raise ScenarioError(f"{p}.channels", "must list configured channels")
        prev = -1
        for j, w in enumerate(st.waypoints):
            if w.at_ms <= prev:
                raise ScenarioError(f"{p}.waypoints[{j}].at_ms", "waypoint times must increase")
            prev = w.at_ms
    for i, bg in enumerate(s.background):
        if bg.eap not in names:
            raise ScenarioError(f"background[{i}].eap", f"unknown EAP {bg.eap!r}")
        if bg.direction != "uplink":
            raise ScenarioError(f"background[{i}].direction", "only uplink background clients are modelled")
        if bg.phy_rate_mbps <= 0:
            raise ScenarioError(f"background[{i}].phy_rate_mbps", "must be positive")
    for i, pair in enumerate(s.adjacency):
        for j, n in enumerate(pair):
            if n not in names:
                raise ScenarioError(f"adjacency[{i}][{j}]", f"unknown EAP {n!r}")
    sc = s.schedule
    if sc.repetitions < 1:
        raise ScenarioError("schedule.repetitions", "must be at least 1")
    if sc.epoch_s <= 0:
        raise ScenarioError("schedule.epoch_s", "must be positive")
    for name in ("beacon_interval_us", "probe_dwell_ms", "report_interval_ms", "measure_offset_ms"):
        if getattr(sc, name) <= 0:
            raise ScenarioError(f"schedule.{name}", "must be positive")
    return s


# -- JSON -----------------------------------------------------------------


class _Reader:
    def __init__(self, obj: Any, path: str):
        self.obj, self.path = obj, path
        if not isinstance(obj, dict):
            raise ScenarioError(path or "$", "expected an object")
        self.seen = set()

    def _sub(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, kind, default=...):
        self.seen.add(key)
        if key not in self.obj:
            if default is ...:
                raise ScenarioError(self._sub(key), "missing")
            return default
        v = self.obj[key]
        p = self._sub(key)
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ScenarioError(p, "expected a number")
            return float(v)
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ScenarioError(p, "expected an integer")
            return v
        if kind is bool:
            if not isinstance(v, bool):
                raise ScenarioError(p, "expected true or false")
            return v
        if kind is str:
            if not isinstance(v, str):
                raise ScenarioError(p, "expected a string")
            return v
        if kind is list:
            if not isinstance(v, list):
                raise ScenarioError(p, "expected an array")
            return v
        if kind is dict:
            return _Reader(v, p)
        if kind == "point":
            if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
                raise ScenarioError(p, "expected [x, y]")
            return (float(v[0]), float(v[1]))
        raise AssertionError(kind)

    def done(self):
        extra = sorted(set(self.obj) - self.seen)
        if extra:
            raise ScenarioError(self._sub(extra[0]), "unknown field")


def _items(r: _Reader, key: str, default=...):
    xs = r.get(key, list, default)
    return [(f"{r._sub(key)}[{i}]", x) for i, x in enumerate(xs)]


def from_dict(d: Any) -> Scenario:
    r = _Reader(d, "")
    eaps = []
    for p, x in _items(r, "eaps"):
        e = _Reader(x, p)
        bh = e.get("backhaul", dict, None)
        backhaul = Backhaul()
        if bh is not None:
            backhaul = Backhaul(bh.get("dl_mbps", float, 50.0), bh.get("ul_mbps", float, 50.0), bh.get("latency_ms", float, 5.0))
            bh.done()
        eaps.append(
            EapSpec(
                id=e.get("id", int),
                name=e.get("name", str),
                position=e.get("position", "point"),
                channel=e.get("channel", int),
                ssid=e.get("ssid", str),
                tx_power_dbm=e.get("tx_power_dbm", float, 20.0),
                backhaul=backhaul,
                policy=e.get("policy", str, "accept"),
            )
        )
        e.done()
    stas = []
    for p, x in _items(r, "stas", []):
        s = _Reader(x, p)
        wps = []
        for wp, w in _items(s, "waypoints"):
            wr = _Reader(w, wp)
            wps.append(Waypoint(wr.get("at_ms", int), wr.get("position", "point"), wr.get("location_m", float)))
            wr.done()
        chans = s.get("channels", list, [40, 44])
        if not all(isinstance(c, int) and not isinstance(c, bool) for c in chans):
            raise ScenarioError(s._sub("channels"), "expected integers")
        stas.append(
            StaSpec(
                name=s.get("name", str),
                mac=s.get("mac", str),
                home=s.get("home", str),
                waypoints=tuple(wps),
                channels=tuple(chans),
                tx_power_dbm=s.get("tx_power_dbm", float, None),
            )
        )
        s.done()
    background = []
    for p, x in _items(r, "background", []):
        b = _Reader(x, p)
        background.append(
            BackgroundSpec(b.get("name", str), b.get("eap", str), b.get("phy_rate_mbps", float, 6.0), b.get("direction", str, "uplink"))
        )
        b.done()
    adjacency = []
    for p, x in _items(r, "adjacency", []):
        if not (isinstance(x, list) and len(x) == 2 and all(isinstance(n, str) for n in x)):
            raise ScenarioError(p, "expected [requester, host]")
        adjacency.append(tuple(x))

    steering = SteeringParams()
    sr = r.get("steering", dict, None)
    if sr is not None:
        table = sr.get("rate_table", list, None)
        try:
            steering = SteeringParams(
                r_all_max_mbps=sr.get("r_all_max_mbps", float, 25.0),
                prx_low_dbm=sr.get("prx_low_dbm", float, -90.0),
                prx_high_dbm=sr.get("prx_high_dbm", float, -50.0),
                ptx_client_dbm=sr.get("ptx_client_dbm", float, 15.0),
                **({"rate_table": tuple(tuple(row) for row in table)} if table is not None else {}),
            )
        except (DomainError, TypeError, ValueError) as exc:
            raise ScenarioError("steering", str(exc)) from None
        sr.done()

    model = PathLossModel()
    pr = r.get("path_loss", dict, None)
    if pr is not None:
        walls = []
        for p, x in _items(pr, "walls", []):
            w = _Reader(x, p)
            walls.append(Wall(w.get("a", "point"), w.get("b", "point"), w.get("loss_db", float)))
            w.done()
        try:
            model = PathLossModel(
                pl0_db=pr.get("pl0_db", float, 40.0),
                d0_m=pr.get("d0_m", float, 1.0),
                n=pr.get("n", float, 3.5),
                sensitivity_dbm=pr.get("sensitivity_dbm", float, -82.0),
                walls=tuple(walls),
                shadowing_sigma_db=pr.get("shadowing_sigma_db", float, 0.0),
            )
        except DomainError as exc:
            raise ScenarioError("path_loss", str(exc)) from None
        pr.done()

    sched = Schedule()
    sc = r.get("schedule", dict, None)
    if sc is not None:
        sched = Schedule(
            repetitions=sc.get("repetitions", int, 10),
            epoch_s=sc.get("epoch_s", float, 10.0),
            beacon_interval_us=sc.get("beacon_interval_us", int, 102_400),
            probe_dwell_ms=sc.get("probe_dwell_ms", int, 50),
            report_interval_ms=sc.get("report_interval_ms", int, 1000),
            measure_offset_ms=sc.get("measure_offset_ms", int, 600),
        )
        sc.done()

    scn = Scenario(
        name=r.get("name", str, "scenario"),
        mode=r.get("mode", str, "nxwlan"),
        eaps=tuple(eaps),
        stas=tuple(stas),
        background=tuple(background),
        adjacency=tuple(adjacency),
        steering=steering,
        path_loss=model,
        schedule=sched,
        txop_mode=r.get("txop_mode", bool, False),
    )
    r.done()
    return validate(scn)


def to_dict(s: Scenario) -> dict:
    d = asdict(s)
    d["eaps"] = [dict(e, position=list(e["position"])) for e in d["eaps"]]
    d["stas"] = list(d["stas"])
    for st in d["stas"]:
        st["channels"] = list(st["channels"])
        st["waypoints"] = [dict(w, position=list(w["position"])) for w in st["waypoints"]]
        if st["tx_power_dbm"] is None:
            del st["tx_power_dbm"]
    d["adjacency"] = [list(p) for p in d["adjacency"]]
    d["steering"]["rate_table"] = [list(row) for row in d["steering"]["rate_table"]]
    d["path_loss"]["walls"] = [{"a": list(w["a"]), "b": list(w["b"]), "loss_db": w["loss_db"]} for w in d["path_loss"]["walls"]]
    d["background"] = [dict(b) for b in d["background"]]
    return d


def load(path) -> Scenario:
    """Read and validate a scenario file. I/O errors propagate as OSError."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"$ (line {exc.lineno})", exc.msg) from None
    return from_dict(data)


def dumps(s: Scenario) -> str:
    return json.dumps(to_dict(s), indent=2) + "\n"


# -- the two experiments -------------------------------------------------------
#
# Two apartments side by side. Bob's AP sits in the lower one, Alice's in
# the upper one, and the walk runs along y = 0 from Bob's flat into
# Alice's. An internal wall at x = 13 cuts Bob's coverage off past the
# 12 m point; the party wall between the flats costs a little on every
# link that crosses it.

STA_MAC = "02:00:00:00:10:01"
WALK_X = tuple(range(0, 20, 2))
WAYPOINT_START_MS = 200
WAYPOINT_STEP_MS = 1000

EXPERIMENT_PATH_LOSS = PathLossModel(
    pl0_db=50.0,
    d0_m=1.0,
    n=3.5,
    sensitivity_dbm=-82.0,
    walls=(Wall((13.0, -12.0), (13.0, 4.0), 15.0), Wall((-5.0, 4.0), (25.0, 4.0), 3.0)),
)


def _apartments(mode: str, repetitions: int, epoch_s: float) -> Scenario:
    bob = EapSpec(0, "bob", (4.0, -11.0), 40, "bob-home")
    alice = EapSpec(1, "alice", (12.0, 15.0), 44, "alice-home")
    walk = tuple(
        Waypoint(WAYPOINT_START_MS + i * WAYPOINT_STEP_MS, (float(x), 0.0), float(x)) for i, x in enumerate(WALK_X)
    )
    sta = StaSpec("sta", STA_MAC, "bob", walk, channels=(40, 44))
    return Scenario(
        name="experiment1",
        mode=mode,
        eaps=(bob, alice),
        stas=(sta,),
        adjacency=(("bob", "alice"), ("alice", "bob")),
        steering=SteeringParams(ptx_client_dbm=20.0),
        path_loss=EXPERIMENT_PATH_LOSS,
        schedule=Schedule(repetitions=repetitions, epoch_s=epoch_s),
    )


def experiment1(mode: str = "nxwlan", repetitions: int = 10, epoch_s: float = 10.0) -> Scenario:
    """Extended coverage: one station walks from Bob's flat into Alice's."""
    return validate(_apartments(mode, repetitions, epoch_s))


def experiment2(mode: str = "nxwlan", repetitions: int = 10, epoch_s: float = 10.0, txop_mode: bool = False) -> Scenario:
    """Load balancing: same walk, Bob's AP carries two slow backlogged uplink clients."""
    s = _apartments(mode, repetitions, epoch_s)
    bg = (BackgroundSpec("bob-bg1", "bob", 6.0), BackgroundSpec("bob-bg2", "bob", 6.0))
    return validate(replace(s, name="experiment2", background=bg, txop_mode=txop_mode))


__all__ = [
    "Backhaul",
    "BackgroundSpec",
    "EapSpec",
    "LinkDescriptor",
    "MODES",
    "Scenario",
    "Schedule",
    "StaSpec",
    "Waypoint",
    "dumps",
    "experiment1",
    "experiment2",
    "from_dict",
    "load",
    "to_dict",
    "validate",
]
