"""2D-mesh NoC multicast route planning and cycle-accurate wormhole simulation."""

from .topology import Mesh, Subnet, TopologyError
from .partition import CostModel, dpm_partition, exact_optimal_partition
from .routing import ApproachMode, PlannerKind, RouteMode, RoutePlan, make_plan, planned_cost
from .engine import DeadlockError, SimConfig, run
from .workload import TraceEvent, TrafficConfig, generate_synthetic, load_trace
from .metrics import StatsReport

__all__ = [
    "Mesh",
    "Subnet",
    "TopologyError",
    "CostModel",
    "dpm_partition",
    "exact_optimal_partition",
    "ApproachMode",
    "PlannerKind",
    "RouteMode",
    "RoutePlan",
    "make_plan",
    "planned_cost",
    "DeadlockError",
    "SimConfig",
    "run",
    "TraceEvent",
    "TrafficConfig",
    "generate_synthetic",
    "load_trace",
    "StatsReport",
]

__version__ = "0.1.0"
