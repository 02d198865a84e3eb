"""Edge-server video cache placement and trace-driven comparison."""

from .baselines import LFUCache, LRUCache, WGDSFCache
from .demand import (
    DemandModel,
    DemandTable,
    InvalidInputError,
    UserPopulation,
    UserProfile,
    Video,
    VideoCatalog,
    build_demand,
)
from .placement import BruteForcePlacement, HitRatioPlacement, Placement, brute_force_placement, solve_placement
from .scenario import Scenario, load_scenario, run_scenario, summarize

__all__ = [
    "BruteForcePlacement",
    "DemandModel",
    "DemandTable",
    "HitRatioPlacement",
    "InvalidInputError",
    "LFUCache",
    "LRUCache",
    "Placement",
    "Scenario",
    "UserPopulation",
    "UserProfile",
    "Video",
    "VideoCatalog",
    "WGDSFCache",
    "brute_force_placement",
    "build_demand",
    "load_scenario",
    "run_scenario",
    "solve_placement",
    "summarize",
]

__version__ = "0.1.0"
