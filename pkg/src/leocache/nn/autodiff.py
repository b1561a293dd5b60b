"""Reverse-mode autodiff over float64 numpy arrays.

Tape-based: every op returns a Tensor holding its parents and a closure that
pushes the output gradient back into them. backward() walks the trace once in
reverse topological order; a trace cannot be consumed twice.
"""
import numpy as np

from . import kernels


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_grad_fn", "_spent")

    def __init__(self, data, requires_grad: bool = False, parents=(), grad_fn=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = tuple(parents)
        self._grad_fn = grad_fn
        self._spent = False

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def backward(self) -> None:
        if self.data.ndim != 0:
            raise ValueError("backward() expects a scalar loss tensor")
        order = _toposort(self)
        for node in order:
            if node._grad_fn is not None and node._spent:
                raise RuntimeError("backward() already called on this trace")
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._grad_fn is None:
                continue
            node._spent = True
            if node.requires_grad and node.grad is not None:
                node._grad_fn(node.grad)


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            stack.append((parent, False))
    return order


def _accum(t: Tensor, g) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def constant(data) -> Tensor:
    return Tensor(data)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    out = a.data @ b.data

    def grad_fn(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return Tensor(out, parents=(a, b), grad_fn=grad_fn)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; b may also be a 1-D bias broadcast over rows of a."""
    bias_row = (
        b.data.ndim == 1 and a.data.ndim == 2 and b.data.shape[0] == a.data.shape[1]
    )
    if not bias_row and a.data.shape != b.data.shape:
        raise ValueError(f"add shape mismatch: {a.data.shape} + {b.data.shape}")
    out = a.data + b.data

    def grad_fn(g):
        _accum(a, g)
        _accum(b, g.sum(axis=0) if bias_row else g)

    return Tensor(out, parents=(a, b), grad_fn=grad_fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError(f"sub shape mismatch: {a.data.shape} - {b.data.shape}")

    def grad_fn(g):
        _accum(a, g)
        _accum(b, -g)

    return Tensor(a.data - b.data, parents=(a, b), grad_fn=grad_fn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError(f"mul shape mismatch: {a.data.shape} * {b.data.shape}")

    def grad_fn(g):
        _accum(a, g * b.data)
        _accum(b, g * a.data)

    return Tensor(a.data * b.data, parents=(a, b), grad_fn=grad_fn)


def scale(a: Tensor, s: float) -> Tensor:
    def grad_fn(g):
        _accum(a, g * s)

    return Tensor(a.data * s, parents=(a,), grad_fn=grad_fn)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def grad_fn(g):
        _accum(a, g * mask)

    return Tensor(np.where(mask, a.data, 0.0), parents=(a,), grad_fn=grad_fn)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def grad_fn(g):
        _accum(a, g * out)

    return Tensor(out, parents=(a,), grad_fn=grad_fn)


def log_softmax(a: Tensor) -> Tensor:
    """Row-wise (last axis) log softmax, max-shifted for stability."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def grad_fn(g):
        _accum(a, g - np.exp(out) * g.sum(axis=-1, keepdims=True))

    return Tensor(out, parents=(a,), grad_fn=grad_fn)


def row_sum(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ValueError("row_sum expects a 2-D tensor")

    def grad_fn(g):
        _accum(a, np.broadcast_to(g, a.data.shape))

    return Tensor(a.data.sum(axis=1, keepdims=True), parents=(a,), grad_fn=grad_fn)


def sum_all(a: Tensor) -> Tensor:
    def grad_fn(g):
        _accum(a, np.broadcast_to(g, a.data.shape))

    return Tensor(np.asarray(a.data.sum()), parents=(a,), grad_fn=grad_fn)


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size

    def grad_fn(g):
        _accum(a, np.broadcast_to(g / n, a.data.shape))

    return Tensor(np.asarray(a.data.mean()), parents=(a,), grad_fn=grad_fn)


def reshape(a: Tensor, shape) -> Tensor:
    out = a.data.reshape(shape)

    def grad_fn(g):
        _accum(a, g.reshape(a.data.shape))

    return Tensor(out, parents=(a,), grad_fn=grad_fn)


def take_per_row(a: Tensor, idx) -> Tensor:
    """out[i, 0] = a[i, idx[i]]; idx one column index per row."""
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(a.data.shape[0])
    out = a.data[rows, idx][:, None]

    def grad_fn(g):
        ga = np.zeros_like(a.data)
        ga[rows, idx] = g[:, 0]
        _accum(a, ga)

    return Tensor(out, parents=(a,), grad_fn=grad_fn)


def gather_concat(h: Tensor, e: Tensor, src, dst) -> Tensor:
    """Per-edge concat [h[dst] | h[src] | e] for message inputs."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    out = kernels.gather_concat(h.data, e.data, src, dst)
    node_dim = h.data.shape[1]
    num_nodes = h.data.shape[0]

    def grad_fn(g):
        gh, ge = kernels.gather_concat_backward(g, num_nodes, node_dim, src, dst)
        _accum(h, gh)
        _accum(e, ge)

    return Tensor(out, parents=(h, e), grad_fn=grad_fn)


def segment_sum(a: Tensor, segment_ids, num_segments: int) -> Tensor:
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    out = kernels.segment_sum(a.data, segment_ids, num_segments)

    def grad_fn(g):
        _accum(a, g[segment_ids])

    return Tensor(out, parents=(a,), grad_fn=grad_fn)


def segment_mean(a: Tensor, segment_ids, num_segments: int) -> Tensor:
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    counts = np.maximum(kernels.segment_counts(segment_ids, num_segments), 1)
    sums = kernels.segment_sum(a.data, segment_ids, num_segments)
    out = sums / counts[:, None]

    def grad_fn(g):
        _accum(a, g[segment_ids] / counts[segment_ids][:, None])

    return Tensor(out, parents=(a,), grad_fn=grad_fn)
