"""Discrete-event simulation of a neighbourhood of enhanced APs."""

from .kernel import Kernel
from .metrics import Metrics, Row, summary_csv, throughput_csv
from .scenario import Scenario, experiment1, experiment2, load
from .world import World, run, run_once

__all__ = [
    "Kernel",
    "Metrics",
    "Row",
    "Scenario",
    "World",
    "experiment1",
    "experiment2",
    "load",
    "run",
    "run_once",
    "summary_csv",
    "throughput_csv",
]
