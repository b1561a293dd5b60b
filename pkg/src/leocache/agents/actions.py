"""Per-satellite cache action space: all capacity-sized content subsets."""
from itertools import combinations

import numpy as np


class ActionSpace:
    """Lexicographically enumerated C-subsets of F contents, one pick per satellite."""

    def __init__(self, num_contents: int, capacity: int):
        if not 0 <= capacity <= num_contents:
            raise ValueError(f"capacity must be in [0, {num_contents}], got {capacity}")
        self.num_contents = num_contents
        self.capacity = capacity
        self.subsets = tuple(combinations(range(num_contents), capacity))
        self._index = {s: i for i, s in enumerate(self.subsets)}

    @property
    def num_actions(self) -> int:
        return len(self.subsets)

    def decode(self, joint: np.ndarray) -> np.ndarray:
        """Subset index per satellite -> (N, F) binary cache matrix."""
        joint = np.asarray(joint, dtype=np.int64)
        psi = np.zeros((len(joint), self.num_contents), dtype=np.uint8)
        for n, a in enumerate(joint):
            psi[n, list(self.subsets[a])] = 1
        return psi

    def encode(self, psi: np.ndarray) -> np.ndarray:
        """(N, F) binary cache matrix -> subset index per satellite."""
        psi = np.asarray(psi)
        out = np.empty(psi.shape[0], dtype=np.int64)
        for n in range(psi.shape[0]):
            key = tuple(int(f) for f in np.flatnonzero(psi[n]))
            if key not in self._index:
                raise ValueError(f"row {n} is not a {self.capacity}-subset")
            out[n] = self._index[key]
        return out
