"""Non-learning cache policies."""
import numpy as np


def pcf_policy(prev_counts: np.ndarray, capacity: int) -> np.ndarray:
    """Cache the top-capacity contents by previous-slot request counts.

    Ties break toward the lower content index; a cold start (all zeros)
    therefore caches the first `capacity` contents.
    """
    prev_counts = np.asarray(prev_counts)
    if prev_counts.ndim != 2:
        raise ValueError("prev_counts must be (satellites x contents)")
    if not 0 <= capacity <= prev_counts.shape[1]:
        raise ValueError(f"capacity must be in [0, {prev_counts.shape[1]}]")
    psi = np.zeros(prev_counts.shape, dtype=np.uint8)
    for n in range(prev_counts.shape[0]):
        order = np.argsort(-prev_counts[n], kind="stable")  # stable: index breaks ties
        psi[n, order[:capacity]] = 1
    return psi


def cloud_policy(num_sats: int, num_contents: int) -> np.ndarray:
    """No onboard caching; every request falls back to the ground cloud."""
    return np.zeros((num_sats, num_contents), dtype=np.uint8)
