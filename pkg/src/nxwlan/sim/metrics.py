"""Per-run measurements and their CSV form."""

from __future__ import annotations

import csv
import io
import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

THROUGHPUT_COLUMNS = ("mode", "location_m", "rep", "serving", "mbps")
SUMMARY_COLUMNS = ("mode", "location_m", "mean", "stderr")


@dataclass(frozen=True)
class Row:
    mode: str
    location_m: float
    rep: int
    serving: str  # "<eap>.rap", "<eap>.wtp" or "none"
    mbps: float
    # min-cascade components behind mbps (0 / None when unserved)
    wireless_mbps: float = 0.0
    dl_backhaul_mbps: float = 0.0
    tunnel_ul_mbps: Optional[float] = None
    phy_mbps: float = 0.0
    sta: str = ""


@dataclass
class Metrics:
    rows: list = field(default_factory=list)
    tunnel_frames: Counter = field(default_factory=Counter)  # frame kind name -> count
    switch_drops: Counter = field(default_factory=Counter)  # drop reason -> count
    unexpected_msgs: int = 0
    # (requester, host) -> microseconds from discovery to Established, per rep
    handshake_us: dict = field(default_factory=dict)
    # (what, sent_us, delivered_us, min_latency_us)
    trace: list = field(default_factory=list)

    def merge(self, other: "Metrics") -> None:
        self.rows.extend(other.rows)
        self.tunnel_frames.update(other.tunnel_frames)
        self.switch_drops.update(other.switch_drops)
        self.unexpected_msgs += other.unexpected_msgs
        for k, v in other.handshake_us.items():
            self.handshake_us.setdefault(k, []).extend(v)
        self.trace.extend(other.trace)

    def sorted_rows(self) -> list:
        return sorted(self.rows, key=lambda r: (r.mode, r.location_m, r.rep, r.sta))

    def summary(self) -> list:
        """(mode, location_m, mean, stderr) per location; stderr over repetitions."""
        groups: dict = {}
        for r in self.sorted_rows():
            groups.setdefault((r.mode, r.location_m), []).append(r.mbps)
        out = []
        for (mode, loc), xs in sorted(groups.items()):
            mean = math.fsum(xs) / len(xs)
            se = statistics.stdev(xs) / math.sqrt(len(xs)) if len(xs) > 1 else 0.0
            out.append((mode, loc, mean, se))
        return out

    def serving(self, mode: str) -> dict:
        """location_m -> set of serving labels seen across repetitions."""
        out: dict = {}
        for r in self.rows:
            if r.mode == mode:
                out.setdefault(r.location_m, set()).add(r.serving)
        return out

    def mean_mbps(self, mode: str) -> dict:
        return {loc: mean for m, loc, mean, _ in self.summary() if m == mode}


def _f(x: float) -> str:
    return f"{x:.6f}"


def throughput_csv(metrics: Metrics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(THROUGHPUT_COLUMNS)
    for r in metrics.sorted_rows():
        w.writerow([r.mode, _f(r.location_m), r.rep, r.serving, _f(r.mbps)])
    return buf.getvalue()


def summary_csv(metrics: Metrics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for mode, loc, mean, se in metrics.summary():
        w.writerow([mode, _f(loc), _f(mean), _f(se)])
    return buf.getvalue()
