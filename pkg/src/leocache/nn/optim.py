"""Adam optimizer and target-network soft update."""
import numpy as np

from .autodiff import Tensor


class Adam:
    def __init__(self, params: list[Tensor], lr: float = 3e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr < 0:
            raise ValueError(f"lr must be >= 0, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def soft_update(source: dict[str, Tensor], target: dict[str, Tensor], tau: float) -> None:
    """target <- tau * source + (1 - tau) * target, elementwise in place."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if source.keys() != target.keys():
        raise ValueError("source and target parameter names differ")
    for name, src in source.items():
        dst = target[name]
        if src.data.shape != dst.data.shape:
            raise ValueError(f"shape mismatch for {name}: {src.data.shape} vs {dst.data.shape}")
        if tau == 0.0:
            continue
        if tau == 1.0:
            dst.data = src.data.copy()
        else:
            dst.data = tau * src.data + (1.0 - tau) * dst.data
