"""Transition storage for off-policy updates."""
from dataclasses import dataclass

import numpy as np

from ..netgraph import GraphSnapshot


@dataclass(frozen=True)
class GraphSample:
    """The slice of a GraphSnapshot the encoders need."""

    node_features: np.ndarray
    msg_src: np.ndarray
    msg_dst: np.ndarray
    msg_edge_features: np.ndarray

    @classmethod
    def from_snapshot(cls, g: GraphSnapshot) -> "GraphSample":
        return cls(
            node_features=g.node_features,
            msg_src=g.msg_src,
            msg_dst=g.msg_dst,
            msg_edge_features=g.msg_edge_features,
        )

    @property
    def num_nodes(self) -> int:
        return self.node_features.shape[0]


@dataclass(frozen=True)
class Transition:
    state: GraphSample
    action: np.ndarray  # (N,) joint subset indices
    reward: float
    next_state: GraphSample


class ReplayBuffer:
    """FIFO ring; minibatches are drawn uniformly without replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, item: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._next] = item
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size < 1 or batch_size > len(self._items):
            raise ValueError(f"cannot sample {batch_size} of {len(self._items)} items")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]
