"""Dense and message-passing layers on top of the autodiff tape."""
from dataclasses import dataclass

from . import autodiff as ad
from .autodiff import Tensor


@dataclass(frozen=True)
class MpnnConfig:
    layers: int = 2
    hidden_dim: int = 32

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if self.hidden_dim < 1:
            raise ValueError(f"hidden_dim must be >= 1, got {self.hidden_dim}")


def dense(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map x @ W + b."""
    if x.data.ndim != 2 or x.data.shape[1] != weight.data.shape[0]:
        raise ValueError(f"dense input {x.data.shape} incompatible with weight {weight.data.shape}")
    if bias.data.shape != (weight.data.shape[1],):
        raise ValueError(f"dense bias {bias.data.shape} incompatible with weight {weight.data.shape}")
    return ad.add(ad.matmul(x, weight), bias)


def mpnn_layer(h: Tensor, e: Tensor, src, dst, num_nodes: int,
               weight: Tensor, bias: Tensor) -> Tensor:
    """One message-passing step: h_i' = relu(sum_j affine([h_i | h_j | e_ij])).

    src/dst are directed edge endpoints (message flows src -> dst); a node with
    no incoming edges gets relu(0) = 0.
    """
    rows = ad.gather_concat(h, e, src, dst)
    messages = dense(rows, weight, bias)
    return ad.relu(ad.segment_sum(messages, dst, num_nodes))


def softmax_head(logits: Tensor) -> Tensor:
    """Numerically stable softmax over the last axis."""
    return ad.exp(ad.log_softmax(logits))
