"""Client steering through probe-response transmit power.

Each AP scores how well it could serve a newly scanning client (its
"willingness", 0..1) from the predicted MAC-layer rate and the spare
backhaul, then maps that score onto the TX power of its probe response so
that the client, which associates with the loudest response, ends up at
the most willing AP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .errors import DomainError

# (minimum RSSI dBm, PHY rate Mbit/s), 802.11a receiver sensitivities
DEFAULT_RATE_TABLE = (
    (-82.0, 6.0),
    (-81.0, 9.0),
    (-79.0, 12.0),
    (-77.0, 18.0),
    (-74.0, 24.0),
    (-70.0, 36.0),
    (-66.0, 48.0),
    (-65.0, 54.0),
)


@dataclass(frozen=True)
class SteeringParams:
    r_all_max_mbps: float = 25.0
    prx_low_dbm: float = -90.0
    prx_high_dbm: float = -50.0
    ptx_client_dbm: float = 15.0
    rate_table: tuple = DEFAULT_RATE_TABLE

    def __post_init__(self):
        object.__setattr__(self, "rate_table", tuple((float(t), float(r)) for t, r in self.rate_table))
        if not self.prx_low_dbm < self.prx_high_dbm:
            raise DomainError("prx_low_dbm must be below prx_high_dbm")
        if not self.rate_table:
            raise DomainError("rate_table is empty")
        for (t0, r0), (t1, r1) in zip(self.rate_table, self.rate_table[1:]):
            if not (t0 < t1 and r0 < r1):
                raise DomainError("rate_table thresholds and rates must be strictly increasing")
        if self.rate_table[0][1] <= 0:
            raise DomainError("rate_table rates must be positive")


@dataclass(frozen=True)
class BackhaulCaps:
    dl_mbps: float
    ul_mbps: float

    def __post_init__(self):
        if self.dl_mbps < 0 or self.ul_mbps < 0:
            raise DomainError("backhaul capacities must be non-negative")


@dataclass(frozen=True)
class SteeringDecision:
    """Probe-response TX powers for the RAP and every hosted VAP.

    A power of ``None`` means no probe response is sent (the client is
    outside the rate table of this radio).
    """

    rap_tx_dbm: Optional[float]
    vap_tx_dbm: dict = field(default_factory=dict)
    rap_willingness: float = 0.0
    vap_willingness: dict = field(default_factory=dict)
    predicted_phy_mbps: float = 0.0
    mac_rate_mbps: float = 0.0
    rap_dl_backhaul_mbps: float = 0.0
    # read but deliberately not applied to the RAP decision
    rap_ul_backhaul_mbps: float = 0.0


def _check_rates(load: Sequence[float], k_rate: float) -> None:
    if k_rate <= 0 or any(r <= 0 for r in load):
        raise DomainError("PHY rates must be positive")


def airtime_share(load: Sequence[float], k_rate: float) -> float:
    """Relative airtime of a client at ``k_rate`` joining clients ``load``.

    Under DCF every backlogged client gets the same number of
    transmission opportunities, so client k's share of airtime is
    proportional to the time one of its frames occupies the medium.
    """
    _check_rates(load, k_rate)
    inverse = [1.0 / r for r in load]
    inverse.append(1.0 / k_rate)
    return (1.0 / k_rate) / math.fsum(inverse)


def mac_rate(load: Sequence[float], k_rate: float, txop_mode: bool = False) -> float:
    if txop_mode:
        # equal airtime per client
        _check_rates(load, k_rate)
        return k_rate / (len(load) + 1)
    return airtime_share(load, k_rate) * k_rate


def predict_phy_rate(params: SteeringParams, rssi_dbm: float) -> float:
    """Highest table rate whose threshold is at or below ``rssi_dbm``; 0 if none."""
    rate = 0.0
    for threshold, r in params.rate_table:
        if rssi_dbm >= threshold:
            rate = r
        else:
            break
    return rate


def willingness(
    params: SteeringParams,
    mac_rate_mbps: float,
    dl_backhaul_mbps: float,
    ul_tunnel_mbps: Optional[float] = None,
) -> float:
    if params.r_all_max_mbps <= 0:
        raise DomainError("r_all_max_mbps must be positive")
    if mac_rate_mbps < 0 or dl_backhaul_mbps < 0 or (ul_tunnel_mbps is not None and ul_tunnel_mbps < 0):
        raise DomainError("rates must be non-negative")
    r_all = min(mac_rate_mbps, dl_backhaul_mbps)
    if ul_tunnel_mbps is not None:
        r_all = min(r_all, ul_tunnel_mbps)
    return min(1, r_all / params.r_all_max_mbps)


def encode_willingness(params: SteeringParams, prx_preq_dbm: float, w: float) -> float:
    """TX power (dBm) for a probe response carrying willingness ``w``.

    The path loss is inferred from the probe request, assuming the client
    sent it at ``ptx_client_dbm``. Between the two clipping points the
    client then hears the response at ``prx_low + w * (prx_high - prx_low)``
    regardless of its distance. The lower clip is 1 dBm; upper is the
    client's own TX power.
    """
    if not 0 <= w <= 1:
        raise DomainError(f"willingness {w} outside [0, 1]")
    path_loss = params.ptx_client_dbm - prx_preq_dbm
    ptx_min = max(1, params.prx_low_dbm + path_loss)
    return min(params.ptx_client_dbm, ptx_min + w * (params.prx_high_dbm - params.prx_low_dbm))


def calc_probe_response_tx_powers(
    params: SteeringParams,
    prx_preq_dbm: float,
    home_load: Sequence[float],
    home_backhaul: BackhaulCaps,
    neighbor_reports: Mapping[int, BackhaulCaps],
    txop_mode: bool = False,
) -> SteeringDecision:
    """Probe-response TX powers for this AP's RAP and each VAP it hosts a WTP for.

    ``home_load`` holds the PHY rates of the active clients on this radio.
    ``neighbor_reports`` maps each neighbour whose VAP is represented here
    to the backhaul capacities that neighbour last reported. The wireless
    prediction is the same for every entry because they all share this
    radio; neighbours differ only through their backhaul, and the VAP path
    is further capped by the owner's uplink because downlink frames are
    tunneled out of it.
    """
    phy = predict_phy_rate(params, prx_preq_dbm)
    if phy <= 0:
        return SteeringDecision(
            rap_tx_dbm=None,
            vap_tx_dbm={n: None for n in neighbor_reports},
            rap_willingness=0.0,
            vap_willingness={n: 0.0 for n in neighbor_reports},
            predicted_phy_mbps=0.0,
            mac_rate_mbps=0.0,
            rap_dl_backhaul_mbps=home_backhaul.dl_mbps,
            rap_ul_backhaul_mbps=home_backhaul.ul_mbps,
        )

    r_mac = mac_rate(home_load, phy, txop_mode)
    p_rap = willingness(params, r_mac, home_backhaul.dl_mbps)
    vap_tx, vap_w = {}, {}
    for neighbor, report in neighbor_reports.items():
        vap_w[neighbor] = willingness(params, r_mac, report.dl_mbps, report.ul_mbps)
        vap_tx[neighbor] = encode_willingness(params, prx_preq_dbm, vap_w[neighbor])
    return SteeringDecision(
        rap_tx_dbm=encode_willingness(params, prx_preq_dbm, p_rap),
        vap_tx_dbm=vap_tx,
        rap_willingness=p_rap,
        vap_willingness=vap_w,
        predicted_phy_mbps=phy,
        mac_rate_mbps=r_mac,
        rap_dl_backhaul_mbps=home_backhaul.dl_mbps,
        rap_ul_backhaul_mbps=home_backhaul.ul_mbps,
    )
