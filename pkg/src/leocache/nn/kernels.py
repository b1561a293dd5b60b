"""Gather/scatter kernels for message passing.

A compiled extension is used when available; the numpy fallback accumulates
in the same (edge) order so both backends produce bitwise-identical floats.
Set LEOCACHE_KERNELS=numpy or LEOCACHE_KERNELS=compiled to force a backend.
"""
import os

import numpy as np

_FORCE = os.environ.get("LEOCACHE_KERNELS", "").strip().lower()
if _FORCE not in ("", "numpy", "compiled"):
    raise ValueError(f"LEOCACHE_KERNELS must be 'numpy' or 'compiled', got {_FORCE!r}")

_compiled = None
if _FORCE != "numpy":
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
        if _FORCE == "compiled":
            raise ImportError(
                "LEOCACHE_KERNELS=compiled but the compiled extension is not built"
            )


def backend() -> str:
    return "numpy" if _compiled is None else "compiled"


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _idx(a, size: int) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.int64)
    if out.size and (out.min() < 0 or out.max() >= size):
        raise IndexError(f"index out of range [0, {size})")
    return out


def gather_concat(h, e, src, dst) -> np.ndarray:
    """Per-edge rows [h[dst[k]] | h[src[k]] | e[k]], shape (E, 2*dh + de)."""
    h, e = _f64(h), _f64(e)
    if e.shape[0] != len(src) or len(src) != len(dst):
        raise ValueError("src, dst and edge features must have equal length")
    src, dst = _idx(src, h.shape[0]), _idx(dst, h.shape[0])
    if _compiled is not None:
        return _compiled.gather_concat(h, e, src, dst)
    return np.concatenate([h[dst], h[src], e], axis=1)


def gather_concat_backward(grad_rows, num_nodes: int, node_dim: int, src, dst):
    """Adjoint of gather_concat; returns (grad_h, grad_e)."""
    grad_rows = _f64(grad_rows)
    src, dst = _idx(src, num_nodes), _idx(dst, num_nodes)
    edge_dim = grad_rows.shape[1] - 2 * node_dim
    if edge_dim < 0:
        raise ValueError("grad_rows narrower than two node blocks")
    if _compiled is not None:
        return _compiled.gather_concat_backward(grad_rows, num_nodes, node_dim, src, dst)
    grad_h = np.zeros((num_nodes, node_dim))
    np.add.at(grad_h, dst, grad_rows[:, :node_dim])
    np.add.at(grad_h, src, grad_rows[:, node_dim : 2 * node_dim])
    return grad_h, grad_rows[:, 2 * node_dim :].copy()


def segment_sum(values, segment_ids, num_segments: int) -> np.ndarray:
    """Row-wise sum of values into num_segments bins, accumulated in row order."""
    values = _f64(values)
    segment_ids = _idx(segment_ids, num_segments)
    if values.shape[0] != len(segment_ids):
        raise ValueError("values and segment_ids must have equal length")
    if _compiled is not None:
        return _compiled.segment_sum(values, segment_ids, num_segments)
    out = np.zeros((num_segments, values.shape[1]))
    np.add.at(out, segment_ids, values)
    return out


def segment_counts(segment_ids, num_segments: int) -> np.ndarray:
    return np.bincount(np.asarray(segment_ids, dtype=np.int64), minlength=num_segments)
