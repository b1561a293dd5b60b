import math

import numpy as np
import pytest

from leocache.agents.actions import ActionSpace
from leocache.agents.baselines import cloud_policy, pcf_policy
from leocache.agents.networks import GROUPS, SacNetworks, batch_graphs
from leocache.agents.replay import GraphSample, ReplayBuffer, Transition
from leocache.agents.sac import (
    SacAgent,
    SacConfig,
    actor_loss,
    q_target,
    squared_error_loss,
    v_target_values,
)
from leocache.nn import autodiff as ad
from leocache.nn.layers import MpnnConfig


def make_sample(rng, n=4, d=5, num_edges=6):
    src = rng.integers(0, n, size=num_edges).astype(np.int64)
    dst = rng.integers(0, n, size=num_edges).astype(np.int64)
    return GraphSample(
        node_features=rng.normal(size=(n, d)),
        msg_src=src,
        msg_dst=dst,
        msg_edge_features=rng.normal(size=(num_edges, 2)),
    )


def make_agent(seed=0, encoder="gnn", n=4, d=5, capacity=1, contents=3, **cfg_kw):
    cfg_args = dict(
        batch_size=4, buffer_capacity=64, warmup_steps=8, lr=1e-3, episodes=1
    )
    cfg_args.update(cfg_kw)
    return SacAgent(
        encoder=encoder,
        node_dim=d,
        edge_dim=2,
        num_nodes=n,
        action_space=ActionSpace(contents, capacity),
        cfg=SacConfig(**cfg_args),
        mpnn=MpnnConfig(layers=2, hidden_dim=8),
        seed=seed,
    )


def fill_buffer(agent, rng, count):
    n = agent.nets.num_nodes
    for _ in range(count):
        t = Transition(
            state=make_sample(rng, n=n, d=agent.nets.node_dim),
            action=rng.integers(0, agent.actions.num_actions, size=n),
            reward=float(rng.normal()),
            next_state=make_sample(rng, n=n, d=agent.nets.node_dim),
        )
        agent.observe(t)


class TestActionSpace:
    def test_six_choose_two(self):
        sp = ActionSpace(6, 2)
        assert sp.num_actions == 15
        assert sp.subsets[0] == (0, 1)
        assert sp.subsets[1] == (0, 2)
        assert sp.subsets[-1] == (4, 5)

    def test_decode_rows_have_capacity_ones(self):
        sp = ActionSpace(6, 2)
        joint = np.arange(15)
        psi = sp.decode(joint)
        assert psi.shape == (15, 6)
        np.testing.assert_array_equal(psi.sum(axis=1), np.full(15, 2))

    def test_round_trip(self):
        sp = ActionSpace(5, 2)
        joint = np.array([0, 3, 9, 9, 1])
        np.testing.assert_array_equal(sp.encode(sp.decode(joint)), joint)

    def test_encode_rejects_wrong_subset(self):
        sp = ActionSpace(4, 2)
        with pytest.raises(ValueError, match="row 0"):
            sp.encode(np.array([[1, 0, 0, 0]]))

    def test_capacity_zero_single_action(self):
        sp = ActionSpace(3, 0)
        assert sp.num_actions == 1
        np.testing.assert_array_equal(sp.decode(np.zeros(2, dtype=int)), np.zeros((2, 3)))

    def test_validation(self):
        with pytest.raises(ValueError):
            ActionSpace(3, 4)
        with pytest.raises(ValueError):
            ActionSpace(3, -1)


class TestReplayBuffer:
    def test_fifo_overwrite(self):
        buf = ReplayBuffer(3)
        items = []
        rng = np.random.default_rng(0)
        for i in range(5):
            t = Transition(make_sample(rng), np.zeros(4, dtype=int), float(i), make_sample(rng))
            items.append(t)
            buf.push(t)
        assert len(buf) == 3
        rewards = {t.reward for t in buf._items}
        assert rewards == {2.0, 3.0, 4.0}  # the two oldest were evicted

    def test_sample_without_replacement(self):
        buf = ReplayBuffer(8)
        rng = np.random.default_rng(1)
        for i in range(8):
            buf.push(Transition(make_sample(rng), np.zeros(4, dtype=int), float(i), make_sample(rng)))
        batch = buf.sample(8, np.random.default_rng(2))
        assert sorted(t.reward for t in batch) == [float(i) for i in range(8)]

    def test_sample_too_large(self):
        buf = ReplayBuffer(4)
        with pytest.raises(ValueError):
            buf.sample(1, np.random.default_rng(0))

    def test_capacity_validation(self):
        with pytest.raises(ValueError):
            ReplayBuffer(0)


class TestBaselines:
    def test_pcf_top_counts(self):
        counts = np.array([[5, 3, 3, 0, 0, 0]])
        np.testing.assert_array_equal(
            pcf_policy(counts, 2), [[1, 1, 0, 0, 0, 0]]
        )

    def test_pcf_tie_prefers_lower_index(self):
        counts = np.array([[0, 7, 7, 7]])
        np.testing.assert_array_equal(pcf_policy(counts, 2), [[0, 1, 1, 0]])

    def test_pcf_cold_start(self):
        np.testing.assert_array_equal(
            pcf_policy(np.zeros((2, 4)), 2), [[1, 1, 0, 0], [1, 1, 0, 0]]
        )

    def test_pcf_capacity_nested(self):
        rng = np.random.default_rng(3)
        counts = rng.integers(0, 10, size=(20, 6))
        small = pcf_policy(counts, 1)
        big = pcf_policy(counts, 2)
        assert np.all(big - small >= 0)  # C=2 caches a superset of C=1

    def test_pcf_zero_capacity(self):
        np.testing.assert_array_equal(pcf_policy(np.ones((2, 3)), 0), np.zeros((2, 3)))

    def test_pcf_validation(self):
        with pytest.raises(ValueError):
            pcf_policy(np.zeros(3), 1)
        with pytest.raises(ValueError):
            pcf_policy(np.zeros((2, 3)), 4)

    def test_cloud_all_zero(self):
        psi = cloud_policy(5, 4)
        assert psi.shape == (5, 4)
        assert psi.sum() == 0


class TestBatchGraphs:
    def test_offsets_and_segments(self):
        rng = np.random.default_rng(4)
        a, b = make_sample(rng), make_sample(rng)
        batch = batch_graphs([a, b])
        assert batch.num_graphs == 2
        assert batch.node_features.shape == (8, 5)
        np.testing.assert_array_equal(batch.msg_src[:6], a.msg_src)
        np.testing.assert_array_equal(batch.msg_src[6:], b.msg_src + 4)
        np.testing.assert_array_equal(batch.node2graph, [0] * 4 + [1] * 4)

    def test_rejects_mismatched_sizes(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError):
            batch_graphs([make_sample(rng, n=4), make_sample(rng, n=5)])


class TestSacFunctional:
    def test_q_target_formula(self):
        r = np.array([1.0, -2.0])
        v = np.array([10.0, 20.0])
        np.testing.assert_allclose(q_target(r, v, 0.95), r + 0.95 * v)

    def test_q_target_zero_discount_is_reward(self):
        rng = np.random.default_rng(6)
        r = rng.normal(size=32)
        v = rng.normal(size=32)
        np.testing.assert_array_equal(q_target(r, v, 0.0), r)

    def test_squared_error_loss_value(self):
        pred = ad.constant(np.array([[1.0], [3.0]]))
        loss = squared_error_loss(pred, np.array([0.0, 1.0]))
        assert loss.item() == pytest.approx((1.0 + 4.0) / 2.0)

    def test_v_target_uniform_policy_is_scaled_entropy(self):
        n, a, alpha = 6, 4, 0.05
        log_probs = np.full((n, a), -math.log(a))
        min_q = np.zeros((n, a))
        node2graph = np.array([0, 0, 0, 1, 1, 1])
        got = v_target_values(log_probs, min_q, node2graph, 2, alpha)
        want = 3 * alpha * math.log(a)  # per-graph: nodes * alpha * entropy
        np.testing.assert_allclose(got, [want, want], rtol=1e-12)

    def test_v_target_zero_entropy_is_expected_q(self):
        rng = np.random.default_rng(7)
        logits = rng.normal(size=(5, 3))
        log_probs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        min_q = rng.normal(size=(5, 3))
        node2graph = np.zeros(5, dtype=np.int64)
        got = v_target_values(log_probs, min_q, node2graph, 1, 0.0)
        want = (np.exp(log_probs) * min_q).sum()
        np.testing.assert_allclose(got, [want], rtol=1e-12)

    def test_actor_loss_matches_manual(self):
        rng = np.random.default_rng(8)
        logits = rng.normal(size=(6, 3))
        log_probs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        min_q = rng.normal(size=(6, 3))
        node2graph = np.array([0, 0, 0, 1, 1, 1])
        alpha = 0.05
        loss = actor_loss(ad.constant(log_probs), min_q, node2graph, 2, alpha)
        probs = np.exp(log_probs)
        per_node = (probs * (alpha * log_probs - min_q)).sum(axis=1)
        want = np.array([per_node[:3].sum(), per_node[3:].sum()]).mean()
        assert loss.item() == pytest.approx(want, rel=1e-12)

    def test_sac_config_validation(self):
        with pytest.raises(ValueError):
            SacConfig(discount=1.0)
        with pytest.raises(ValueError):
            SacConfig(tau=0.0)
        with pytest.raises(ValueError):
            SacConfig(alpha_ent=-0.1)
        with pytest.raises(ValueError):
            SacConfig(batch_size=64, buffer_capacity=32)
        assert SacConfig().discount == 0.95
        assert SacConfig().tau == 0.005
        assert SacConfig().alpha_ent == 0.05
        assert SacConfig().warmup_steps == 500


class TestNetworks:
    @pytest.mark.parametrize("encoder", ["gnn", "flat"])
    def test_output_shapes(self, encoder):
        rng = np.random.default_rng(9)
        nets = SacNetworks(
            encoder=encoder, node_dim=5, edge_dim=2, num_nodes=4, num_actions=3,
            mpnn=MpnnConfig(layers=2, hidden_dim=8), rng=rng,
        )
        batch = batch_graphs([make_sample(rng), make_sample(rng)])
        assert nets.node_log_probs(batch).shape == (8, 3)
        assert nets.q_table("q1", batch).shape == (8, 3)
        assert nets.state_value("v", batch).shape == (2, 1)

    def test_log_probs_normalized(self):
        rng = np.random.default_rng(10)
        nets = SacNetworks(
            encoder="gnn", node_dim=5, edge_dim=2, num_nodes=4, num_actions=3,
            mpnn=MpnnConfig(layers=2, hidden_dim=8), rng=rng,
        )
        batch = batch_graphs([make_sample(rng)])
        p = np.exp(nets.node_log_probs(batch).data)
        np.testing.assert_allclose(p.sum(axis=1), np.ones(4), rtol=1e-12)

    def test_v_target_initialized_to_v(self):
        rng = np.random.default_rng(11)
        nets = SacNetworks(
            encoder="gnn", node_dim=5, edge_dim=2, num_nodes=4, num_actions=3,
            mpnn=MpnnConfig(layers=2, hidden_dim=8), rng=rng,
        )
        for name, t in nets.store.group("v").items():
            np.testing.assert_array_equal(nets.store.group("v_target")[name].data, t.data)

    def test_unknown_encoder(self):
        with pytest.raises(ValueError):
            SacNetworks(
                encoder="rnn", node_dim=5, edge_dim=2, num_nodes=4, num_actions=3,
                mpnn=MpnnConfig(), rng=np.random.default_rng(0),
            )

    def test_groups_present(self):
        rng = np.random.default_rng(12)
        nets = SacNetworks(
            encoder="flat", node_dim=5, edge_dim=2, num_nodes=4, num_actions=3,
            mpnn=MpnnConfig(layers=2, hidden_dim=8), rng=rng,
        )
        assert set(nets.store.groups) == set(GROUPS) | {"v_target"}


class TestSacAgent:
    def test_action_probs_shape(self):
        agent = make_agent()
        rng = np.random.default_rng(0)
        p = agent.action_probs(make_sample(rng))
        assert p.shape == (4, 3)
        np.testing.assert_allclose(p.sum(axis=1), np.ones(4), rtol=1e-12)

    def test_warmup_actions_uniform_stream(self):
        agent = make_agent(warmup_steps=100)
        sample = make_sample(np.random.default_rng(1))
        a1 = agent.select_action(sample, np.random.default_rng(5))
        a2 = agent.select_action(sample, np.random.default_rng(5))
        np.testing.assert_array_equal(a1, a2)
        want = np.random.default_rng(5).integers(3, size=4)
        np.testing.assert_array_equal(a1, want)

    def test_greedy_deterministic_and_ignores_warmup(self):
        agent = make_agent(warmup_steps=100)
        sample = make_sample(np.random.default_rng(2))
        g1 = agent.select_action(sample, np.random.default_rng(0), greedy=True)
        g2 = agent.select_action(sample, np.random.default_rng(9), greedy=True)
        np.testing.assert_array_equal(g1, g2)
        np.testing.assert_array_equal(g1, np.argmax(agent.action_probs(sample), axis=1))

    def test_sampled_actions_follow_policy_frequencies(self):
        agent = make_agent(warmup_steps=0)
        sample = make_sample(np.random.default_rng(3))
        probs = agent.action_probs(sample)
        rng = np.random.default_rng(4)
        draws = np.stack([agent.select_action(sample, rng) for _ in range(4000)])
        for n in range(4):
            freq = np.bincount(draws[:, n], minlength=3) / 4000.0
            np.testing.assert_allclose(freq, probs[n], atol=0.03)

    def test_ready_needs_warmup_and_batch(self):
        agent = make_agent(warmup_steps=8, batch_size=4)
        rng = np.random.default_rng(5)
        assert not agent.ready()
        fill_buffer(agent, rng, 7)
        assert not agent.ready()
        fill_buffer(agent, rng, 1)
        assert agent.ready()
        assert agent.steps == 8

    def test_update_before_ready_is_none(self):
        agent = make_agent()
        assert agent.update() is None

    def test_update_returns_finite_losses(self):
        agent = make_agent()
        fill_buffer(agent, np.random.default_rng(6), 12)
        losses = agent.update()
        assert set(losses) == {"q1_loss", "q2_loss", "v_loss", "actor_loss"}
        assert all(np.isfinite(v) for v in losses.values())

    def test_zero_lr_keeps_parameters(self):
        agent = make_agent(lr=0.0, tau=1.0)
        fill_buffer(agent, np.random.default_rng(7), 12)
        before = {
            (g, name): t.data.copy()
            for g in ("policy", "q1", "q2", "v")
            for name, t in agent.nets.store.group(g).items()
        }
        agent.update()
        for (g, name), data in before.items():
            np.testing.assert_array_equal(agent.nets.store.group(g)[name].data, data)

    def test_target_moves_toward_v(self):
        agent = make_agent(tau=1.0)
        fill_buffer(agent, np.random.default_rng(8), 12)
        agent.update()
        for name, t in agent.nets.store.group("v").items():
            np.testing.assert_array_equal(
                agent.nets.store.group("v_target")[name].data, t.data
            )

    def test_same_seed_same_policy(self):
        a = make_agent(seed=3)
        b = make_agent(seed=3)
        sample = make_sample(np.random.default_rng(9))
        np.testing.assert_array_equal(a.action_probs(sample), b.action_probs(sample))

    def test_save_load_round_trip(self, tmp_path):
        agent = make_agent(seed=4)
        path = tmp_path / "ckpt.json"
        agent.save_params(path)
        ref = {name: t.data.copy() for name, t in agent.nets.store.group("policy").items()}
        tensor_ids = {name: id(t) for name, t in agent.nets.store.group("policy").items()}
        for t in agent.nets.store.group("policy").values():
            t.data += 1.0
        agent.load_params(path)
        for name, t in agent.nets.store.group("policy").items():
            np.testing.assert_array_equal(t.data, ref[name])
            assert id(t) == tensor_ids[name]  # optimizer references stay valid

    def test_load_rejects_mismatched_names(self, tmp_path):
        agent = make_agent(encoder="gnn")
        other = make_agent(encoder="flat")
        path = tmp_path / "ckpt.json"
        other.save_params(path)
        with pytest.raises(ValueError):
            agent.load_params(path)

    def test_flat_encoder_agent_updates(self):
        agent = make_agent(encoder="flat")
        fill_buffer(agent, np.random.default_rng(10), 12)
        losses = agent.update()
        assert all(np.isfinite(v) for v in losses.values())
