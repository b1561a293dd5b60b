from .autodiff import Tensor
from .layers import MpnnConfig, dense, mpnn_layer, softmax_head
from .optim import Adam, soft_update
from .params import ParamStore

__all__ = [
    "Adam",
    "MpnnConfig",
    "ParamStore",
    "Tensor",
    "dense",
    "mpnn_layer",
    "soft_update",
    "softmax_head",
]
