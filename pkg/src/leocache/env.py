"""Cache MDP environment: slot stepping, delay/traffic accounting, reward."""
import dataclasses
from dataclasses import dataclass

import numpy as np

from .channel import LinkBudget, RainModel, downlink_gain, downlink_rate, sample_rain
from .constellation import ConstellationConfig, propagate
from .netgraph import (
    GraphSnapshot,
    NoHolderError,
    NoRouteError,
    RegionGrid,
    RouteCache,
    RoutePlan,
    build_graph,
    nearest_holder,
)
from .workload import ContentCatalog, RequestSet, RequestTrace, generate_requests


class RejectedActionError(Exception):
    """Action violates the per-satellite cache capacity."""


@dataclass(frozen=True)
class CacheMatrix:
    """N x F binary cache occupancy with per-satellite capacity."""

    psi: np.ndarray
    capacity: int

    def __post_init__(self):
        psi = np.asarray(self.psi)
        if psi.ndim != 2:
            raise ValueError("cache matrix must be 2-D")
        if not np.isin(psi, (0, 1)).all():
            raise ValueError("cache entries must be 0 or 1")
        if self.capacity < 0:
            raise ValueError(f"capacity must be >= 0, got {self.capacity}")
        if np.any(psi.sum(axis=1) > self.capacity):
            raise RejectedActionError(f"a row exceeds cache capacity {self.capacity}")
        object.__setattr__(self, "psi", psi.astype(np.uint8))


@dataclass(frozen=True)
class RewardConfig:
    success_weight: float = 1.0  # weight on the slot success rate
    traffic_weight: float = 0.5  # weight on normalized total traffic
    max_traffic_bits: float | None = None  # None: worst-case default at env init
    cloud_backhaul_delay_s: float = 5.0

    def __post_init__(self):
        if self.success_weight < 0 or self.traffic_weight < 0:
            raise ValueError("reward weights must be >= 0")
        if self.max_traffic_bits is not None and self.max_traffic_bits <= 0:
            raise ValueError("max_traffic_bits must be > 0")
        if self.cloud_backhaul_delay_s < 0:
            raise ValueError("cloud_backhaul_delay_s must be >= 0")


@dataclass(frozen=True)
class SlotMetrics:
    success_rate: float
    discarded: int
    traffic_request_bits: float
    traffic_update_bits: float
    traffic_total_bits: float
    reward: float


@dataclass(frozen=True)
class EnvState:
    episode: int
    slot: int
    graph: GraphSnapshot
    cache_prev: np.ndarray  # psi at t-1, (N, F) uint8
    requests: RequestSet
    rain_db: np.ndarray  # (N,)
    downlink_gain: np.ndarray  # (N,) linear, full-bandwidth


def resolve_route(
    sat: int,
    content: int,
    psi: np.ndarray,
    g: GraphSnapshot,
    size_bits: float,
    retrieval: str = "full",
    route_cache: RouteCache | None = None,
) -> RoutePlan | None:
    """Route serving (sat, content) under psi; None means cloud fallback."""
    if retrieval == "full":
        try:
            return nearest_holder(g, sat, content, psi, size_bits, route_cache)
        except (NoHolderError, NoRouteError):
            return None
    if retrieval == "neighbor1":
        if psi[sat, content]:
            return RoutePlan(source=sat, holder=sat, hops=(), isl_delay=0.0)
        options = [
            (size_bits / rate, (sat, nbr), nbr)
            for nbr, rate in g.adjacency[sat]
            if psi[nbr, content] and rate > 0.0
        ]
        if not options:
            return None
        delay, path, holder = min(options)
        return RoutePlan(source=sat, holder=holder, hops=(path,), isl_delay=delay)
    raise ValueError(f"unknown retrieval mode {retrieval!r}")


def delivery_delay(
    sat: int,
    content: int,
    psi: np.ndarray,
    g: GraphSnapshot,
    downlink_rate_bps: float,
    size_bits: float,
    cloud_backhaul_delay_s: float,
    retrieval: str = "full",
) -> float:
    """Downlink time plus ISL fetch time (or cloud backhaul on a total miss)."""
    if downlink_rate_bps <= 0.0:
        return float("inf")
    down = size_bits / downlink_rate_bps
    route = resolve_route(sat, content, psi, g, size_bits, retrieval)
    if route is None:
        return down + cloud_backhaul_delay_s
    return down + route.isl_delay


def count_discarded(delays: np.ndarray, thresholds: np.ndarray) -> int:
    delays = np.asarray(delays, dtype=np.float64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if delays.shape != thresholds.shape:
        raise ValueError("delays and thresholds must align")
    return int(np.count_nonzero(delays > thresholds))


def success_rate(discarded: int, total: int) -> float:
    if total < 0 or discarded < 0:
        raise ValueError("counts must be >= 0")
    if discarded > total:
        raise ValueError(f"discarded {discarded} exceeds total {total}")
    if total == 0:
        return 1.0
    return 1.0 - discarded / total


def update_traffic(psi_prev: np.ndarray, psi_next: np.ndarray, size_bits: np.ndarray) -> float:
    """Bits shipped for newly cached contents; evictions are free."""
    psi_prev = np.asarray(psi_prev)
    psi_next = np.asarray(psi_next)
    if psi_prev.shape != psi_next.shape:
        raise ValueError("cache matrices must share a shape")
    new = (psi_prev == 0) & (psi_next == 1)
    return float((new * np.asarray(size_bits, dtype=np.float64)[None, :]).sum())


def reward(success: float, traffic_bits: float, cfg: RewardConfig) -> float:
    if traffic_bits < 0:
        raise ValueError("traffic must be >= 0")
    if cfg.max_traffic_bits is None:
        raise ValueError("max_traffic_bits unresolved")
    return (
        cfg.success_weight * success
        - cfg.traffic_weight * traffic_bits / cfg.max_traffic_bits
    )


def default_max_traffic_bits(
    cfg: ConstellationConfig, capacity: int, per_sat_requests: int, max_size_bits: float
) -> float:
    """Worst case: full cache refresh plus every request fetched across the grid."""
    diameter = cfg.planes // 2 + cfg.sats_per_plane // 2
    n = cfg.num_sats
    return (
        n * capacity * max_size_bits
        + n * per_sat_requests * (1 + diameter) * max_size_bits
    )


class CacheEnv:
    """Discrete-time cache MDP over the satellite grid.

    Per slot: the agent fixes psi(t), the slot's requests are served under
    psi(t) on the current graph (whose features carry psi(t-1)), metrics and
    reward accrue, then the constellation advances one slot.
    """

    def __init__(
        self,
        constellation: ConstellationConfig,
        catalog: ContentCatalog,
        budget: LinkBudget,
        rain: RainModel,
        regions: RegionGrid,
        reward_cfg: RewardConfig,
        per_sat_requests: int,
        cache_capacity: int,
        seed: int,
        slot_duration_s: float = 5.0,
        slots_per_episode: int = 50,
        retrieval: str = "full",
        max_isl_range_km: float | None = None,
        request_trace: RequestTrace | None = None,
    ):
        if retrieval not in ("full", "neighbor1"):
            raise ValueError(f"unknown retrieval mode {retrieval!r}")
        if cache_capacity < 0 or cache_capacity > catalog.num_contents:
            raise ValueError("cache capacity must be within [0, num_contents]")
        if per_sat_requests < 0:
            raise ValueError("per_sat_requests must be >= 0")
        if slots_per_episode < 1:
            raise ValueError("slots_per_episode must be >= 1")
        self.constellation = constellation
        self.catalog = catalog
        self.budget = budget
        self.rain = rain
        self.regions = regions
        self.per_sat_requests = per_sat_requests
        self.cache_capacity = cache_capacity
        self.seed = seed
        self.slot_duration_s = slot_duration_s
        self.slots_per_episode = slots_per_episode
        self.retrieval = retrieval
        self.max_isl_range_km = max_isl_range_km
        self.request_trace = request_trace
        self.request_recorder: RequestTrace | None = None
        if reward_cfg.max_traffic_bits is None:
            reward_cfg = dataclasses.replace(
                reward_cfg,
                max_traffic_bits=default_max_traffic_bits(
                    constellation,
                    cache_capacity,
                    per_sat_requests,
                    float(catalog.size_bits.max()),
                ),
            )
        self.reward_cfg = reward_cfg
        self._episode = -1
        self._slot = 0
        self._state: EnvState | None = None
        self._req_rng: np.random.Generator | None = None
        self._rain_rng: np.random.Generator | None = None

    @property
    def num_sats(self) -> int:
        return self.constellation.num_sats

    @property
    def state(self) -> EnvState:
        if self._state is None:
            raise RuntimeError("call reset() before reading the state")
        return self._state

    def _draw_requests(self, episode: int, slot: int) -> RequestSet:
        # each episode makes slots_per_episode + 1 draws (the bootstrap state
        # after the last step included), so traces are keyed with that stride
        key = episode * (self.slots_per_episode + 1) + slot
        if self.request_trace is not None:
            requests = self.request_trace.replay(key)
        else:
            requests = generate_requests(
                self.catalog.popularity, self.per_sat_requests, self.num_sats, self._req_rng
            )
        if self.request_recorder is not None:
            self.request_recorder.record(key, requests)
        return requests

    def _draw_rain(self) -> np.ndarray:
        return np.array([sample_rain(self.rain, self._rain_rng) for _ in range(self.num_sats)])

    def _make_state(self, episode: int, slot: int, cache_prev: np.ndarray) -> EnvState:
        states = propagate(self.constellation, slot * self.slot_duration_s)
        requests = self._draw_requests(episode, slot)
        rain_db = self._draw_rain()
        h_m = self.constellation.altitude_km * 1000.0
        gain = np.array(
            [downlink_gain(self.budget, h_m, rain_db[n]) for n in range(self.num_sats)]
        )
        graph = build_graph(
            self.constellation,
            states,
            cache_prev,
            requests.counts,
            self.budget,
            self.regions,
            self.per_sat_requests,
            self.max_isl_range_km,
        )
        return EnvState(
            episode=episode,
            slot=slot,
            graph=graph,
            cache_prev=cache_prev.astype(np.uint8),
            requests=requests,
            rain_db=rain_db,
            downlink_gain=gain,
        )

    def reset(self, episode: int) -> EnvState:
        if episode < 0:
            raise ValueError("episode must be >= 0")
        self._episode = episode
        self._slot = 0
        ss = np.random.SeedSequence
        self._req_rng = np.random.default_rng(ss([self.seed, 2, episode]))
        self._rain_rng = np.random.default_rng(ss([self.seed, 3, episode]))
        cold = np.zeros((self.num_sats, self.catalog.num_contents), dtype=np.uint8)
        self._state = self._make_state(episode, 0, cold)
        return self._state

    def serve_slot(self, state: EnvState, psi: np.ndarray) -> SlotMetrics:
        """Account one slot served under psi; pure function of its inputs."""
        counts = state.requests.counts
        sizes = self.catalog.size_bits
        deadlines = self.catalog.deadline_s
        bw = self.budget.bandwidth_hz
        discarded = 0
        total = int(counts.sum())
        traffic_req = 0.0
        routes = RouteCache(state.graph)
        for n in range(self.num_sats):
            k_n = int(counts[n].sum())
            if k_n == 0:
                continue
            share = bw / k_n  # OFDM split of the downlink band across requests
            for f in range(self.catalog.num_contents):
                c = int(counts[n, f])
                if c == 0:
                    continue
                rate = downlink_rate(self.budget, state.downlink_gain[n], share)
                down = sizes[f] / rate if rate > 0.0 else float("inf")
                route = resolve_route(
                    n, f, psi, state.graph, sizes[f], self.retrieval, routes
                )
                if route is None:
                    delay = down + self.reward_cfg.cloud_backhaul_delay_s
                    traffic_req += c * 2.0 * sizes[f]  # downlink + cloud backhaul
                else:
                    delay = down + route.isl_delay
                    traffic_req += c * (sizes[f] + len(route.hops) * sizes[f])
                if delay > deadlines[f]:
                    discarded += c
        traffic_up = update_traffic(state.cache_prev, psi, sizes)
        success = success_rate(discarded, total)
        total_traffic = float(traffic_req + traffic_up)
        return SlotMetrics(
            success_rate=float(success),
            discarded=int(discarded),
            traffic_request_bits=float(traffic_req),
            traffic_update_bits=float(traffic_up),
            traffic_total_bits=total_traffic,
            reward=float(reward(success, total_traffic, self.reward_cfg)),
        )

    def step(self, action) -> tuple[EnvState, float, SlotMetrics, bool]:
        if self._state is None:
            raise RuntimeError("call reset() before step()")
        psi = action.psi if isinstance(action, CacheMatrix) else np.asarray(action)
        CacheMatrix(psi=psi, capacity=self.cache_capacity)  # validates or raises
        psi = psi.astype(np.uint8)
        metrics = self.serve_slot(self._state, psi)
        self._slot += 1
        done = self._slot >= self.slots_per_episode
        self._state = self._make_state(self._episode, self._slot, psi)
        return self._state, metrics.reward, metrics, done
