"""Named parameter groups with a byte-stable JSON checkpoint format."""
import json

import numpy as np

from .autodiff import Tensor

CHECKPOINT_VERSION = 1


class ParamStore:
    """Parameter tensors keyed by (group, name), e.g. ('policy', 'head_w')."""

    def __init__(self):
        self.groups: dict[str, dict[str, Tensor]] = {}

    def add(self, group: str, name: str, data) -> Tensor:
        params = self.groups.setdefault(group, {})
        if name in params:
            raise ValueError(f"parameter {group}/{name} already exists")
        t = Tensor(np.array(data, dtype=np.float64), requires_grad=True)
        params[name] = t
        return t

    def group(self, name: str) -> dict[str, Tensor]:
        if name not in self.groups:
            raise KeyError(f"no parameter group {name!r}")
        return self.groups[name]

    def tensors(self, group: str) -> list[Tensor]:
        return [self.group(group)[name] for name in sorted(self.group(group))]

    def zero_grads(self, group: str | None = None) -> None:
        names = [group] if group is not None else list(self.groups)
        for g in names:
            for t in self.group(g).values():
                t.grad = np.zeros_like(t.data)

    def copy_group(self, source: str, target: str) -> None:
        """Clone source into target (creating or overwriting target tensors)."""
        src = self.group(source)
        dst = self.groups.setdefault(target, {})
        dst.clear()
        for name, t in src.items():
            dst[name] = Tensor(t.data.copy(), requires_grad=True)

    def save(self, path) -> None:
        doc = {
            "version": CHECKPOINT_VERSION,
            "groups": {
                g: {
                    name: {"shape": list(t.data.shape), "data": t.data.reshape(-1).tolist()}
                    for name, t in params.items()
                }
                for g, params in self.groups.items()
            },
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "ParamStore":
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
        store = cls()
        for g, params in doc["groups"].items():
            for name, entry in params.items():
                arr = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
                store.add(g, name, arr)
        return store


def he_init(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    """ReLU-scaled normal init for a (fan_in, fan_out) weight."""
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
