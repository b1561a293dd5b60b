"""Actor/critic networks: graph or flat state encoders plus per-node heads."""
from dataclasses import dataclass

import numpy as np

from ..nn import autodiff as ad
from ..nn.autodiff import Tensor
from ..nn.layers import MpnnConfig, dense, mpnn_layer
from ..nn.params import ParamStore, he_init
from .replay import GraphSample

GROUPS = ("policy", "q1", "q2", "v")
TRUNK_HIDDEN = 128  # flat-encoder trunk width


@dataclass(frozen=True)
class BatchedGraph:
    """Disjoint union of equally sized graphs."""

    node_features: np.ndarray  # (B*N, d)
    msg_src: np.ndarray
    msg_dst: np.ndarray
    msg_edge_features: np.ndarray
    node2graph: np.ndarray  # (B*N,)
    num_graphs: int
    nodes_per_graph: int


def batch_graphs(samples: list[GraphSample]) -> BatchedGraph:
    n = samples[0].num_nodes
    feats, srcs, dsts, efeats, seg = [], [], [], [], []
    for g, s in enumerate(samples):
        if s.num_nodes != n:
            raise ValueError("all graphs in a batch must have the same node count")
        offset = g * n
        feats.append(s.node_features)
        srcs.append(s.msg_src + offset)
        dsts.append(s.msg_dst + offset)
        efeats.append(s.msg_edge_features)
        seg.append(np.full(n, g, dtype=np.int64))
    return BatchedGraph(
        node_features=np.concatenate(feats, axis=0),
        msg_src=np.concatenate(srcs),
        msg_dst=np.concatenate(dsts),
        msg_edge_features=np.concatenate(efeats, axis=0),
        node2graph=np.concatenate(seg),
        num_graphs=len(samples),
        nodes_per_graph=n,
    )


class SacNetworks:
    """Five parameter groups (policy, q1, q2, v, v_target), each owning a full
    encoder plus head; encoder is message passing ('gnn') or a flat MLP ('flat').
    """

    def __init__(
        self,
        encoder: str,
        node_dim: int,
        edge_dim: int,
        num_nodes: int,
        num_actions: int,
        mpnn: MpnnConfig,
        rng: np.random.Generator,
    ):
        if encoder not in ("gnn", "flat"):
            raise ValueError(f"unknown encoder {encoder!r}")
        self.encoder = encoder
        self.node_dim = node_dim
        self.edge_dim = edge_dim
        self.num_nodes = num_nodes
        self.num_actions = num_actions
        self.mpnn = mpnn
        self.store = ParamStore()
        for group in GROUPS:
            head_out = 1 if group == "v" else num_actions
            self._init_group(group, head_out, rng)
        self.store.copy_group("v", "v_target")

    def _init_group(self, group: str, head_out: int, rng: np.random.Generator) -> None:
        h = self.mpnn.hidden_dim
        if self.encoder == "gnn":
            in_dim = self.node_dim
            for k in range(self.mpnn.layers):
                row = 2 * in_dim + self.edge_dim
                self.store.add(group, f"enc{k}_w", he_init(rng, row, h))
                self.store.add(group, f"enc{k}_b", np.zeros(h))
                in_dim = h
        else:
            flat_in = self.num_nodes * self.node_dim
            self.store.add(group, "trunk0_w", he_init(rng, flat_in, TRUNK_HIDDEN))
            self.store.add(group, "trunk0_b", np.zeros(TRUNK_HIDDEN))
            self.store.add(group, "trunk1_w", he_init(rng, TRUNK_HIDDEN, self.num_nodes * h))
            self.store.add(group, "trunk1_b", np.zeros(self.num_nodes * h))
        self.store.add(group, "head_w", he_init(rng, h, head_out))
        self.store.add(group, "head_b", np.zeros(head_out))

    def encode(self, group: str, batch: BatchedGraph) -> tuple[Tensor, Tensor]:
        """Returns (per-node embeddings (B*N, h), global mean embeddings (B, h))."""
        params = self.store.group(group)
        if self.encoder == "gnn":
            h = ad.constant(batch.node_features)
            e = ad.constant(batch.msg_edge_features)
            total = batch.node_features.shape[0]
            for k in range(self.mpnn.layers):
                h = mpnn_layer(
                    h, e, batch.msg_src, batch.msg_dst, total,
                    params[f"enc{k}_w"], params[f"enc{k}_b"],
                )
        else:
            flat = ad.constant(
                batch.node_features.reshape(batch.num_graphs, -1)
            )
            z = ad.relu(dense(flat, params["trunk0_w"], params["trunk0_b"]))
            z = ad.relu(dense(z, params["trunk1_w"], params["trunk1_b"]))
            h = ad.reshape(z, (batch.num_graphs * batch.nodes_per_graph, self.mpnn.hidden_dim))
        pooled = ad.segment_mean(h, batch.node2graph, batch.num_graphs)
        return h, pooled

    def node_log_probs(self, batch: BatchedGraph) -> Tensor:
        """(B*N, A) log policy probabilities."""
        pernode, _ = self.encode("policy", batch)
        params = self.store.group("policy")
        return ad.log_softmax(dense(pernode, params["head_w"], params["head_b"]))

    def q_table(self, group: str, batch: BatchedGraph) -> Tensor:
        """(B*N, A) per-node action values for critic group 'q1' or 'q2'."""
        pernode, _ = self.encode(group, batch)
        params = self.store.group(group)
        return dense(pernode, params["head_w"], params["head_b"])

    def state_value(self, group: str, batch: BatchedGraph) -> Tensor:
        """(B, 1) state values for group 'v' or 'v_target'."""
        _, pooled = self.encode(group, batch)
        params = self.store.group(group)
        return dense(pooled, params["head_w"], params["head_b"])
