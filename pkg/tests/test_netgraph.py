import numpy as np
import pytest

from leocache.channel import LinkBudget, isl_rate
from leocache.constellation import ConstellationConfig, distance_km, propagate
from leocache.netgraph import (
    DIST_SCALE_KM,
    RATE_SCALE_BPS,
    GraphSnapshot,
    NoHolderError,
    NoRouteError,
    RegionGrid,
    RouteCache,
    build_graph,
    nearest_holder,
    shortest_delay_path,
    snapshot_to_dict,
)

from oracles import (
    bellman_ford_best,
    brute_force_best,
    make_torus_adjacency,
    snapshot_from_adjacency,
)


def build_small(planes=3, sats_per_plane=4, num_contents=2, per_sat=4, seed=0):
    cfg = ConstellationConfig(
        planes=planes, sats_per_plane=sats_per_plane, altitude_km=1000.0,
        inclination_deg=60.0,
    )
    rng = np.random.default_rng(seed)
    n = cfg.num_sats
    cache = rng.integers(0, 2, size=(n, num_contents)).astype(np.uint8)
    requests = rng.multinomial(per_sat, np.full(num_contents, 1.0 / num_contents), size=n)
    budget = LinkBudget(tx_gain_db=44.0, rx_gain_db=44.0)
    regions = RegionGrid()
    states = propagate(cfg, 0.0)
    g = build_graph(cfg, states, cache, requests, budget, regions, per_sat)
    return cfg, states, cache, requests, budget, regions, g


class TestRegionGrid:
    def test_num_regions(self):
        assert RegionGrid().num_regions == 12
        assert RegionGrid(lat_bands=2, lon_sectors=5).num_regions == 10

    def test_corner_cases(self):
        rg = RegionGrid(lat_bands=3, lon_sectors=4)
        assert rg.region_index(-90.0, -180.0) == 0
        assert rg.region_index(90.0, 0.0) == 2 * 4 + 2
        assert rg.region_index(89.9, 179.9) == 2 * 4 + 3
        # longitude 180 wraps onto -180
        assert rg.region_index(0.0, 180.0) == rg.region_index(0.0, -180.0)

    def test_one_hot(self):
        rg = RegionGrid()
        v = rg.one_hot(10.0, 20.0)
        assert v.shape == (12,)
        assert v.sum() == 1.0
        assert v[rg.region_index(10.0, 20.0)] == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            RegionGrid(lat_bands=0)


class TestBuildGraph:
    def test_feature_layout(self):
        cfg, states, cache, requests, budget, regions, g = build_small()
        n = cfg.num_sats
        width = 3 + regions.num_regions + 2 * requests.shape[1]
        assert g.node_features.shape == (n, width)
        coords = g.node_features[:, :3]
        np.testing.assert_allclose(np.linalg.norm(coords, axis=1), 1.0, rtol=1e-12)
        region_block = g.node_features[:, 3 : 3 + regions.num_regions]
        np.testing.assert_array_equal(region_block.sum(axis=1), np.ones(n))
        req_block = g.node_features[:, 3 + regions.num_regions : 3 + regions.num_regions + 2]
        np.testing.assert_allclose(req_block, requests / 4.0)
        np.testing.assert_array_equal(g.node_features[:, -2:], cache)

    def test_feature_width_for_six_contents(self):
        cfg, _, _, _, _, _, g = build_small(num_contents=6)
        assert g.node_features.shape[1] == 27

    def test_edge_count_and_uniqueness(self):
        cfg, *_, g = build_small(planes=4, sats_per_plane=4)
        assert g.num_edges == 32  # 4-regular torus: N*4/2
        assert np.all(g.edge_i < g.edge_j)
        pairs = set(zip(g.edge_i.tolist(), g.edge_j.tolist()))
        assert len(pairs) == g.num_edges

    def test_rates_match_link_budget(self):
        cfg, states, _, _, budget, _, g = build_small()
        for i, j, d, r in zip(g.edge_i, g.edge_j, g.edge_dist_km, g.edge_rate_bps):
            assert d == pytest.approx(distance_km(states[i], states[j]), rel=1e-12)
            assert r == pytest.approx(isl_rate(budget, d * 1000.0), rel=1e-12)

    def test_adjacency_symmetric_sorted(self):
        cfg, *_, g = build_small()
        for i, nbrs in enumerate(g.adjacency):
            assert list(nbrs) == sorted(nbrs)
            for j, r in nbrs:
                assert (i, r) in g.adjacency[j]

    def test_directed_views(self):
        cfg, *_, g = build_small()
        e = g.num_edges
        assert g.msg_src.shape == (2 * e,)
        np.testing.assert_array_equal(g.msg_src[:e], g.edge_i)
        np.testing.assert_array_equal(g.msg_dst[:e], g.edge_j)
        np.testing.assert_array_equal(g.msg_src[e:], g.edge_j)
        np.testing.assert_array_equal(g.msg_dst[e:], g.edge_i)
        np.testing.assert_allclose(g.msg_edge_features[:e, 0], g.edge_dist_km / DIST_SCALE_KM)
        np.testing.assert_allclose(g.msg_edge_features[:e, 1], g.edge_rate_bps / RATE_SCALE_BPS)
        np.testing.assert_array_equal(g.msg_edge_features[:e], g.msg_edge_features[e:])

    def test_range_cutoff(self):
        cfg = ConstellationConfig(
            planes=3, sats_per_plane=4, altitude_km=1000.0, inclination_deg=60.0
        )
        states = propagate(cfg, 0.0)
        cache = np.zeros((12, 2))
        requests = np.zeros((12, 2))
        g_all = build_graph(cfg, states, cache, requests, LinkBudget(), RegionGrid(), 1)
        g_none = build_graph(
            cfg, states, cache, requests, LinkBudget(), RegionGrid(), 1,
            max_isl_range_km=1.0,
        )
        assert g_all.num_edges > 0
        assert g_none.num_edges == 0
        assert all(len(a) == 0 for a in g_none.adjacency)

    def test_shape_mismatch(self):
        cfg = ConstellationConfig(
            planes=3, sats_per_plane=4, altitude_km=1000.0, inclination_deg=60.0
        )
        states = propagate(cfg, 0.0)
        with pytest.raises(ValueError, match="satellite count"):
            build_graph(
                cfg, states, np.zeros((5, 2)), np.zeros((12, 2)),
                LinkBudget(), RegionGrid(), 1,
            )


class TestRouting:
    def test_matches_brute_force_on_small_tori(self):
        rng = np.random.default_rng(12)
        for planes, per_plane in ((2, 2), (2, 3), (3, 3)):
            for rep in range(3):
                adjacency = make_torus_adjacency(planes, per_plane, rng)
                g = snapshot_from_adjacency(adjacency)
                size = float(rng.uniform(1e8, 1e9))
                n = planes * per_plane
                for src in range(n):
                    for dst in range(n):
                        if src == dst:
                            continue
                        want = brute_force_best(adjacency, src, dst, size)
                        plan = shortest_delay_path(g, src, dst, size)
                        assert plan.isl_delay == want[0]
                        path = (plan.source,) + tuple(h[1] for h in plan.hops)
                        assert path == want[1]

    def test_matches_bellman_ford(self):
        rng = np.random.default_rng(77)
        adjacency = make_torus_adjacency(3, 3, rng)
        g = snapshot_from_adjacency(adjacency)
        size = 5e8
        best = bellman_ford_best(adjacency, 0, size)
        for dst in range(1, 9):
            plan = shortest_delay_path(g, 0, dst, size)
            assert plan.isl_delay == best[dst][0]
            assert (plan.source,) + tuple(h[1] for h in plan.hops) == best[dst][1]

    def test_zero_size_prefers_short_lexicographic_path(self):
        adjacency = make_torus_adjacency(2, 3, np.random.default_rng(0))
        g = snapshot_from_adjacency(adjacency)
        plan = shortest_delay_path(g, 0, 1, 0.0)
        # all paths cost 0: the lexicographically smallest node sequence wins
        assert plan.isl_delay == 0.0
        assert plan.hops == ((0, 1),)

    def test_no_route(self):
        empty = tuple(() for _ in range(2))
        g = snapshot_from_adjacency(empty)
        with pytest.raises(NoRouteError):
            shortest_delay_path(g, 0, 1, 1e8)

    def test_bad_arguments(self):
        g = snapshot_from_adjacency(make_torus_adjacency(2, 2, np.random.default_rng(0)))
        with pytest.raises(IndexError):
            shortest_delay_path(g, 0, 9, 1e8)
        with pytest.raises(ValueError):
            shortest_delay_path(g, 0, 1, -1.0)

    def test_route_cache_reuses_results(self):
        adjacency = make_torus_adjacency(3, 3, np.random.default_rng(5))
        g = snapshot_from_adjacency(adjacency)
        rc = RouteCache(g)
        a = rc.best_from(0, 1e8)
        b = rc.best_from(0, 1e8)
        assert a is b
        for dst, (delay, path) in a.items():
            if dst == 0:
                continue
            plan = shortest_delay_path(g, 0, dst, 1e8)
            assert plan.isl_delay == delay


class TestNearestHolder:
    def test_local_hit_is_free(self):
        adjacency = make_torus_adjacency(2, 3, np.random.default_rng(2))
        g = snapshot_from_adjacency(adjacency)
        cache = np.zeros((6, 2), dtype=np.uint8)
        cache[4, 1] = 1
        plan = nearest_holder(g, 4, 1, cache, 1e8)
        assert plan.holder == 4 and plan.hops == () and plan.isl_delay == 0.0

    def test_no_holder(self):
        adjacency = make_torus_adjacency(2, 3, np.random.default_rng(2))
        g = snapshot_from_adjacency(adjacency)
        with pytest.raises(NoHolderError):
            nearest_holder(g, 0, 0, np.zeros((6, 2)), 1e8)

    def test_picks_min_delay_holder(self):
        rng = np.random.default_rng(8)
        adjacency = make_torus_adjacency(3, 3, rng)
        g = snapshot_from_adjacency(adjacency)
        size = 3e8
        cache = np.zeros((9, 1), dtype=np.uint8)
        holders = [2, 5, 7]
        for h in holders:
            cache[h, 0] = 1
        plan = nearest_holder(g, 0, 0, cache, size)
        want = min(brute_force_best(adjacency, 0, h, size) for h in holders)
        assert plan.isl_delay == want[0]
        assert plan.holder == want[1][-1]

    def test_equidistant_holders_take_lexicographic_path(self):
        # square ring with equal rates: 0 reaches holders 1 and 2 in one hop
        rate = 1e8
        adjacency = (
            ((1, rate), (2, rate)),
            ((0, rate), (3, rate)),
            ((0, rate), (3, rate)),
            ((1, rate), (2, rate)),
        )
        g = snapshot_from_adjacency(adjacency)
        cache = np.zeros((4, 1), dtype=np.uint8)
        cache[1, 0] = 1
        cache[2, 0] = 1
        plan = nearest_holder(g, 0, 0, cache, 1e8)
        assert plan.holder == 1
        assert plan.hops == ((0, 1),)

    def test_content_index_checked(self):
        g = snapshot_from_adjacency(make_torus_adjacency(2, 2, np.random.default_rng(0)))
        with pytest.raises(IndexError):
            nearest_holder(g, 0, 5, np.zeros((4, 2)), 1e8)


class TestSnapshotDict:
    def test_round_trippable_fields(self):
        cfg, states, cache, requests, budget, regions, g = build_small()
        d = snapshot_to_dict(g)
        assert d["num_nodes"] == g.num_nodes
        assert len(d["edges"]) == g.num_edges
        assert d["edges"][0]["i"] == int(g.edge_i[0])
        assert d["edges"][0]["rate_bps"] == float(g.edge_rate_bps[0])
        assert np.asarray(d["node_features"]).shape == g.node_features.shape
