"""Discrete soft actor-critic with factorized per-satellite subset actions.

Expectations over the per-node categorical policies are computed exactly, so
value targets and the actor objective carry no sampling noise.
"""
from dataclasses import dataclass

import numpy as np

from ..nn import autodiff as ad
from ..nn import kernels
from ..nn.autodiff import Tensor
from ..nn.layers import MpnnConfig
from ..nn.optim import Adam, soft_update
from ..nn.params import ParamStore
from .actions import ActionSpace
from .networks import BatchedGraph, SacNetworks, batch_graphs
from .replay import GraphSample, ReplayBuffer, Transition


class DivergenceError(RuntimeError):
    """A training loss became non-finite."""


@dataclass(frozen=True)
class SacConfig:
    discount: float = 0.95
    tau: float = 0.005
    alpha_ent: float = 0.05
    lr: float = 3e-4
    batch_size: int = 32
    buffer_capacity: int = 10000
    warmup_steps: int = 500
    episodes: int = 500

    def __post_init__(self):
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.alpha_ent < 0.0:
            raise ValueError(f"alpha_ent must be >= 0, got {self.alpha_ent}")
        if self.lr < 0.0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("need buffer_capacity >= batch_size >= 1")
        if self.warmup_steps < 0 or self.episodes < 1:
            raise ValueError("warmup_steps must be >= 0 and episodes >= 1")


def q_target(rewards: np.ndarray, v_next: np.ndarray, discount: float) -> np.ndarray:
    """y = r + discount * V_target(s')."""
    return np.asarray(rewards, dtype=np.float64) + discount * np.asarray(v_next)


def squared_error_loss(pred: Tensor, target: np.ndarray) -> Tensor:
    target = np.asarray(target, dtype=np.float64).reshape(pred.data.shape)
    diff = ad.sub(pred, ad.constant(target))
    return ad.mean_all(ad.mul(diff, diff))


def v_target_values(
    log_probs: np.ndarray,
    min_q: np.ndarray,
    node2graph: np.ndarray,
    num_graphs: int,
    alpha_ent: float,
) -> np.ndarray:
    """Exact per-node E_pi[min Q - alpha log pi], summed over each graph's nodes."""
    probs = np.exp(log_probs)
    per_node = (probs * (min_q - alpha_ent * log_probs)).sum(axis=1, keepdims=True)
    return kernels.segment_sum(per_node, node2graph, num_graphs)[:, 0]


def actor_loss(
    log_probs: Tensor,
    min_q: np.ndarray,
    node2graph: np.ndarray,
    num_graphs: int,
    alpha_ent: float,
) -> Tensor:
    """Exact E_pi[alpha log pi - min Q], summed over nodes, averaged over batch."""
    probs = ad.exp(log_probs)
    inner = ad.sub(ad.scale(log_probs, alpha_ent), ad.constant(min_q))
    per_node = ad.row_sum(ad.mul(probs, inner))
    return ad.mean_all(ad.segment_sum(per_node, node2graph, num_graphs))


def _check_finite(name: str, loss: Tensor) -> None:
    if not np.isfinite(loss.data):
        raise DivergenceError(f"{name} became non-finite: {loss.data!r}")


class SacAgent:
    def __init__(
        self,
        encoder: str,
        node_dim: int,
        edge_dim: int,
        num_nodes: int,
        action_space: ActionSpace,
        cfg: SacConfig,
        mpnn: MpnnConfig,
        seed: int,
    ):
        self.cfg = cfg
        self.actions = action_space
        param_rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
        self.nets = SacNetworks(
            encoder=encoder,
            node_dim=node_dim,
            edge_dim=edge_dim,
            num_nodes=num_nodes,
            num_actions=action_space.num_actions,
            mpnn=mpnn,
            rng=param_rng,
        )
        self.replay_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.optimizers = {
            group: Adam(self.nets.store.tensors(group), lr=cfg.lr)
            for group in ("policy", "q1", "q2", "v")
        }
        self.steps = 0

    def action_probs(self, sample: GraphSample) -> np.ndarray:
        """(N, A) policy probabilities for one state."""
        batch = batch_graphs([sample])
        return np.exp(self.nets.node_log_probs(batch).data)

    def select_action(
        self, sample: GraphSample, rng: np.random.Generator, greedy: bool = False
    ) -> np.ndarray:
        """Joint action (one subset index per satellite)."""
        if not greedy and self.steps < self.cfg.warmup_steps:
            return rng.integers(self.actions.num_actions, size=self.nets.num_nodes)
        probs = self.action_probs(sample)
        if greedy:
            return np.argmax(probs, axis=1)  # ties resolve to the lowest index
        u = rng.random(probs.shape[0])
        joint = np.empty(probs.shape[0], dtype=np.int64)
        for n in range(probs.shape[0]):
            cdf = np.cumsum(probs[n])
            joint[n] = min(np.searchsorted(cdf, u[n], side="right"), probs.shape[1] - 1)
        return joint

    def observe(self, transition: Transition) -> None:
        self.buffer.push(transition)
        self.steps += 1

    def ready(self) -> bool:
        return (
            self.steps >= self.cfg.warmup_steps
            and len(self.buffer) >= self.cfg.batch_size
        )

    def update(self) -> dict | None:
        """One optimization phase: critics, then V against refreshed critics,
        then the actor, then the target soft update."""
        if not self.ready():
            return None
        cfg = self.cfg
        batch = self.buffer.sample(cfg.batch_size, self.replay_rng)
        s = batch_graphs([t.state for t in batch])
        s_next = batch_graphs([t.next_state for t in batch])
        rewards = np.array([t.reward for t in batch])
        actions = np.concatenate([t.action for t in batch])
        num_graphs = len(batch)
        losses: dict[str, float] = {}

        v_next = self.nets.state_value("v_target", s_next).data[:, 0]
        y_q = q_target(rewards, v_next, cfg.discount)
        for group in ("q1", "q2"):
            self.nets.store.zero_grads(group)
            table = self.nets.q_table(group, s)
            q_sa = ad.segment_sum(ad.take_per_row(table, actions), s.node2graph, num_graphs)
            loss = squared_error_loss(q_sa, y_q)
            _check_finite(f"{group}_loss", loss)
            loss.backward()
            self.optimizers[group].step()
            losses[f"{group}_loss"] = loss.item()

        log_probs = self.nets.node_log_probs(s).data
        min_q = np.minimum(self.nets.q_table("q1", s).data, self.nets.q_table("q2", s).data)
        y_v = v_target_values(log_probs, min_q, s.node2graph, num_graphs, cfg.alpha_ent)

        self.nets.store.zero_grads("v")
        v_pred = self.nets.state_value("v", s)
        loss = squared_error_loss(v_pred, y_v)
        _check_finite("v_loss", loss)
        loss.backward()
        self.optimizers["v"].step()
        losses["v_loss"] = loss.item()

        self.nets.store.zero_grads("policy")
        logp = self.nets.node_log_probs(s)
        loss = actor_loss(logp, min_q, s.node2graph, num_graphs, cfg.alpha_ent)
        _check_finite("actor_loss", loss)
        loss.backward()
        self.optimizers["policy"].step()
        losses["actor_loss"] = loss.item()

        soft_update(
            self.nets.store.group("v"), self.nets.store.group("v_target"), cfg.tau
        )
        return losses

    def save_params(self, path) -> None:
        self.nets.store.save(path)

    def load_params(self, path) -> None:
        loaded = ParamStore.load(path)
        for group, params in self.nets.store.groups.items():
            incoming = loaded.group(group)
            if incoming.keys() != params.keys():
                raise ValueError(f"checkpoint group {group!r} has mismatched names")
            for name, t in params.items():
                if incoming[name].data.shape != t.data.shape:
                    raise ValueError(f"checkpoint shape mismatch at {group}/{name}")
                t.data = incoming[name].data.copy()
