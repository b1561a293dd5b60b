"""Simulator and learners for content caching on a LEO satellite grid."""
from .channel import LinkBudget, RainModel
from .constellation import ConstellationConfig, SatelliteState, propagate
from .env import CacheEnv, CacheMatrix, RewardConfig, SlotMetrics
from .netgraph import GraphSnapshot, RegionGrid, build_graph
from .workload import ContentCatalog, RequestSet

__version__ = "0.1.0"

__all__ = [
    "CacheEnv",
    "CacheMatrix",
    "ConstellationConfig",
    "ContentCatalog",
    "GraphSnapshot",
    "LinkBudget",
    "RainModel",
    "RegionGrid",
    "RequestSet",
    "RewardConfig",
    "SatelliteState",
    "SlotMetrics",
    "build_graph",
    "propagate",
    "__version__",
]
