"""Content catalog and Zipf-distributed per-satellite request generation."""
import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ContentCatalog:
    """F contents with per-content size (bits) and delivery deadline (s)."""

    num_contents: int
    size_bits: np.ndarray  # shape (F,)
    deadline_s: np.ndarray  # shape (F,)
    zipf_alpha: float = 1.0

    def __post_init__(self):
        if self.num_contents < 1:
            raise ValueError(f"num_contents must be >= 1, got {self.num_contents}")
        sizes = np.asarray(self.size_bits, dtype=np.float64)
        deadlines = np.asarray(self.deadline_s, dtype=np.float64)
        if sizes.shape == ():
            sizes = np.full(self.num_contents, float(sizes))
        if deadlines.shape == ():
            deadlines = np.full(self.num_contents, float(deadlines))
        if sizes.shape != (self.num_contents,):
            raise ValueError(f"size_bits must have shape ({self.num_contents},)")
        if deadlines.shape != (self.num_contents,):
            raise ValueError(f"deadline_s must have shape ({self.num_contents},)")
        if np.any(sizes <= 0):
            raise ValueError("all content sizes must be positive")
        if np.any(deadlines <= 0):
            raise ValueError("all deadlines must be positive")
        if self.zipf_alpha < 0:
            raise ValueError(f"zipf_alpha must be >= 0, got {self.zipf_alpha}")
        object.__setattr__(self, "size_bits", sizes)
        object.__setattr__(self, "deadline_s", deadlines)

    @property
    def popularity(self) -> np.ndarray:
        return zipf_popularity(self.num_contents, self.zipf_alpha)


@dataclass(frozen=True)
class RequestSet:
    """Per-slot request counts, one row per satellite, one column per content."""

    counts: np.ndarray  # shape (N, F), nonnegative ints

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise ValueError("counts must be a 2-D (satellite x content) array")
        if np.any(counts < 0):
            raise ValueError("request counts must be nonnegative")
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def zipf_popularity(num_contents: int, alpha: float) -> np.ndarray:
    """Popularity of rank-f content, f^(-alpha) normalized to sum to 1."""
    if num_contents < 1:
        raise ValueError(f"num_contents must be >= 1, got {num_contents}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    ranks = np.arange(1, num_contents + 1, dtype=np.float64)
    weights = ranks**-alpha
    return weights / weights.sum()


def generate_requests(
    popularity: np.ndarray,
    per_satellite: int,
    num_sats: int,
    rng: np.random.Generator,
) -> RequestSet:
    """Draw ``per_satellite`` i.i.d. content requests for each satellite."""
    if per_satellite < 0:
        raise ValueError(f"per_satellite must be >= 0, got {per_satellite}")
    counts = rng.multinomial(per_satellite, popularity, size=num_sats)
    return RequestSet(counts=counts)


@dataclass
class RequestTrace:
    """Dump/replay of request streams keyed by absolute draw index.

    The environment draws one request set per served slot plus one for the
    bootstrap state after an episode's last step, so episode e, slot s maps
    to key e * (slots_per_episode + 1) + s.
    """

    num_sats: int
    num_contents: int
    slots: dict[int, np.ndarray] = field(default_factory=dict)

    def record(self, slot: int, requests: RequestSet) -> None:
        self.slots[slot] = requests.counts.copy()

    def replay(self, slot: int) -> RequestSet:
        if slot not in self.slots:
            raise KeyError(f"trace has no slot {slot}")
        return RequestSet(counts=self.slots[slot])

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["slot", "sat_id", "content_id", "count"])
            for slot in sorted(self.slots):
                counts = self.slots[slot]
                for sat in range(counts.shape[0]):
                    for content in range(counts.shape[1]):
                        c = int(counts[sat, content])
                        if c > 0:
                            writer.writerow([slot, sat, content, c])

    @classmethod
    def load(cls, path, num_sats: int, num_contents: int) -> "RequestTrace":
        trace = cls(num_sats=num_sats, num_contents=num_contents)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                slot = int(row["slot"])
                if slot not in trace.slots:
                    trace.slots[slot] = np.zeros((num_sats, num_contents), dtype=np.int64)
                trace.slots[slot][int(row["sat_id"]), int(row["content_id"])] = int(row["count"])
        return trace
