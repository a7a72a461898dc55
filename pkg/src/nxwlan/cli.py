"""Command line front end.

    nxwlan run  --scenario F [--seed N] --out D [--mode baseline|nxwlan] [--reps N]
    nxwlan exp1 --out D [--seed N] [--reps N]
    nxwlan exp2 --out D [--seed N] [--reps N] [--txop]
    nxwlan steer --snapshot F

Exit status: 0 on success, 2 for an invalid scenario or snapshot, 1 for
I/O errors. The seed defaults to $NXWLAN_SEED, then 0.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import DomainError, ScenarioError
from .sim import experiment1, experiment2, load, run, summary_csv, throughput_csv
from .sim.metrics import Metrics
from .sim.scenario import MODES
from .steering import BackhaulCaps, SteeringParams, calc_probe_response_tx_powers

log = logging.getLogger("nxwlan")


def _default_seed(parser: argparse.ArgumentParser) -> int:
    raw = os.environ.get("NXWLAN_SEED", "")
    if raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        parser.error(f"NXWLAN_SEED must be an integer, got {raw!r}")  # exits 2


def _with_reps(scenario, reps):
    if reps is None:
        return scenario
    if reps < 1:
        raise ScenarioError("schedule.repetitions", "must be at least 1")
    return replace(scenario, schedule=replace(scenario.schedule, repetitions=reps))


def write_outputs(metrics: Metrics, out: Path) -> None:
    log.info("writing %s", out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "throughput.csv").write_text(throughput_csv(metrics), encoding="utf-8", newline="\n")
    (out / "summary.csv").write_text(summary_csv(metrics), encoding="utf-8", newline="\n")


def _run_modes(scenario, modes, seed) -> Metrics:
    total = Metrics()
    for mode in modes:
        log.info("running %s (%s), %d repetitions, seed %d", scenario.name, mode, scenario.schedule.repetitions, seed)
        total.merge(run(scenario.with_mode(mode), seed))
    return total


def cmd_run(args) -> None:
    scenario = _with_reps(load(args.scenario), args.reps)
    modes = [args.mode] if args.mode else [scenario.mode]
    write_outputs(_run_modes(scenario, modes, args.seed), Path(args.out))


def cmd_exp(args) -> None:
    if args.command == "exp1":
        scenario = experiment1()
    else:
        scenario = experiment2(txop_mode=args.txop)
    scenario = _with_reps(scenario, args.reps)
    write_outputs(_run_modes(scenario, MODES, args.seed), Path(args.out))


def _num(obj, key, path, default=None):
    v = obj.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{path}{key}", "expected a number")
    return v


def _caps(obj, path) -> BackhaulCaps:
    if not isinstance(obj, dict):
        raise ScenarioError(path, "expected an object")
    try:
        return BackhaulCaps(_num(obj, "dl_mbps", path + "."), _num(obj, "ul_mbps", path + "."))
    except DomainError as exc:
        raise ScenarioError(path, str(exc)) from None


SNAPSHOT_KEYS = {"prx_preq_dbm", "home_load_mbps", "home_backhaul", "neighbors", "txop_mode", "steering"}


def load_snapshot(path):
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"$ (line {exc.lineno})", exc.msg) from None
    if not isinstance(d, dict):
        raise ScenarioError("$", "expected an object")
    extra = sorted(set(d) - SNAPSHOT_KEYS)
    if extra:
        raise ScenarioError(extra[0], "unknown field")
    sp = d.get("steering", {})
    if not isinstance(sp, dict):
        raise ScenarioError("steering", "expected an object")
    try:
        params = SteeringParams(**{k: (tuple(map(tuple, v)) if k == "rate_table" else v) for k, v in sp.items()})
    except (TypeError, DomainError) as exc:
        raise ScenarioError("steering", str(exc)) from None
    load_ = d.get("home_load_mbps", [])
    if not isinstance(load_, list) or not all(isinstance(r, (int, float)) and not isinstance(r, bool) and r > 0 for r in load_):
        raise ScenarioError("home_load_mbps", "expected an array of positive PHY rates")
    neighbors = d.get("neighbors", {})
    if not isinstance(neighbors, dict):
        raise ScenarioError("neighbors", "expected an object keyed by neighbour id")
    reports = {}
    for k, v in neighbors.items():
        try:
            reports[int(k)] = _caps(v, f"neighbors.{k}")
        except ValueError:
            raise ScenarioError(f"neighbors.{k}", "keys must be integer neighbour ids") from None
    txop = d.get("txop_mode", False)
    if not isinstance(txop, bool):
        raise ScenarioError("txop_mode", "expected true or false")
    return dict(
        params=params,
        prx_preq_dbm=_num(d, "prx_preq_dbm", ""),
        home_load=list(load_),
        home_backhaul=_caps(d.get("home_backhaul", {"dl_mbps": 50, "ul_mbps": 50}), "home_backhaul"),
        neighbor_reports=reports,
        txop_mode=txop,
    )


def cmd_steer(args) -> None:
    snap = load_snapshot(args.snapshot)
    d = calc_probe_response_tx_powers(**snap)
    out = {
        "predicted_phy_mbps": d.predicted_phy_mbps,
        "mac_rate_mbps": d.mac_rate_mbps,
        "rap_willingness": d.rap_willingness,
        "rap_tx_dbm": d.rap_tx_dbm,
        "vap_willingness": {str(k): v for k, v in sorted(d.vap_willingness.items())},
        "vap_tx_dbm": {str(k): v for k, v in sorted(d.vap_tx_dbm.items())},
    }
    print(json.dumps(out, indent=2))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nxwlan", description="Neighbourhood WLAN simulator and steering tools.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("--scenario", required=True, help="scenario JSON file")
    r.add_argument("--out", required=True, help="output directory for the CSV files")
    r.add_argument("--mode", choices=MODES, help="override the scenario's mode")

    for name, text in (("exp1", "extended-coverage experiment"), ("exp2", "load-balancing experiment")):
        e = sub.add_parser(name, help=f"run the built-in {text}, both modes")
        e.add_argument("--out", required=True, help="output directory for the CSV files")
        if name == "exp2":
            e.add_argument("--txop", action="store_true", help="equal-airtime MAC instead of DCF")

    for sp in (r, sub.choices["exp1"], sub.choices["exp2"]):
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (default: $NXWLAN_SEED or 0)")
        sp.add_argument("--reps", type=int, default=None, help="override the number of repetitions")

    s = sub.add_parser("steer", help="print the steering decision for one snapshot")
    s.add_argument("--snapshot", required=True, help="snapshot JSON file")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(name)s: %(message)s")
    if getattr(args, "seed", 0) is None:
        args.seed = _default_seed(parser)
    handler = {"run": cmd_run, "exp1": cmd_exp, "exp2": cmd_exp, "steer": cmd_steer}[args.command]
    try:
        handler(args)
    except ScenarioError as exc:
        print(f"nxwlan: invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        print(f"nxwlan: {name}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
