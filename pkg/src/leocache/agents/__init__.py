from .actions import ActionSpace
from .baselines import cloud_policy, pcf_policy
from .replay import GraphSample, ReplayBuffer, Transition
from .sac import SacAgent, SacConfig

__all__ = [
    "ActionSpace",
    "GraphSample",
    "ReplayBuffer",
    "SacAgent",
    "SacConfig",
    "Transition",
    "cloud_policy",
    "pcf_policy",
]
