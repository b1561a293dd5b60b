"""Per-slot network graph: node/edge features and min-delay routing over ISLs."""
import heapq
from dataclasses import dataclass, field

import numpy as np

from .channel import LinkBudget, isl_rate
from .constellation import ConstellationConfig, SatelliteState, distance_km, isl_neighbors

# feature scaling constants, shared by every profile so checkpoints stay portable
DIST_SCALE_KM = 1.0e4
RATE_SCALE_BPS = 1.0e10


class NoRouteError(Exception):
    """Destination unreachable over usable ISLs."""


class NoHolderError(Exception):
    """No satellite caches the content; caller falls back to the cloud."""


@dataclass(frozen=True)
class RegionGrid:
    """Equal-angle latitude bands x longitude sectors, one-hot encoded."""

    lat_bands: int = 3
    lon_sectors: int = 4

    def __post_init__(self):
        if self.lat_bands < 1 or self.lon_sectors < 1:
            raise ValueError("region grid needs at least one band and one sector")

    @property
    def num_regions(self) -> int:
        return self.lat_bands * self.lon_sectors

    def region_index(self, lat_deg: float, lon_deg: float) -> int:
        band = int((lat_deg + 90.0) / 180.0 * self.lat_bands)
        band = min(max(band, 0), self.lat_bands - 1)
        lon = (lon_deg + 180.0) % 360.0
        sector = min(int(lon / 360.0 * self.lon_sectors), self.lon_sectors - 1)
        return band * self.lon_sectors + sector

    def one_hot(self, lat_deg: float, lon_deg: float) -> np.ndarray:
        out = np.zeros(self.num_regions)
        out[self.region_index(lat_deg, lon_deg)] = 1.0
        return out


@dataclass(frozen=True)
class RoutePlan:
    source: int
    holder: int
    hops: tuple  # ordered (i, j) node pairs
    isl_delay: float


@dataclass(frozen=True)
class GraphSnapshot:
    """Immutable per-slot graph; each undirected edge is stored once."""

    node_features: np.ndarray  # (N, d)
    edge_i: np.ndarray  # (E,)
    edge_j: np.ndarray  # (E,)
    edge_dist_km: np.ndarray  # (E,)
    edge_rate_bps: np.ndarray  # (E,)
    adjacency: tuple  # adjacency[n] = tuple of (neighbor, rate_bps)
    # directed views for message passing: both orientations of every edge
    msg_src: np.ndarray = field(repr=False, default=None)
    msg_dst: np.ndarray = field(repr=False, default=None)
    msg_edge_features: np.ndarray = field(repr=False, default=None)

    @property
    def num_nodes(self) -> int:
        return self.node_features.shape[0]

    @property
    def num_edges(self) -> int:
        return len(self.edge_i)


def _directed_views(edge_i, edge_j, edge_dist_km, edge_rate_bps):
    src = np.concatenate([edge_i, edge_j])
    dst = np.concatenate([edge_j, edge_i])
    feat_one = np.stack(
        [edge_dist_km / DIST_SCALE_KM, edge_rate_bps / RATE_SCALE_BPS], axis=1
    )
    return src, dst, np.concatenate([feat_one, feat_one], axis=0)


def build_graph(
    cfg: ConstellationConfig,
    states: list[SatelliteState],
    cache: np.ndarray,
    requests: np.ndarray,
    budget: LinkBudget,
    regions: RegionGrid,
    per_sat_requests: int,
    max_isl_range_km: float | None = None,
) -> GraphSnapshot:
    """Assemble node features [coords | region | requests | cache] and ISL edges."""
    n = len(states)
    cache = np.asarray(cache, dtype=np.float64)
    requests = np.asarray(requests, dtype=np.float64)
    if cache.shape[0] != n or requests.shape[0] != n:
        raise ValueError("states, cache and requests disagree on satellite count")

    req_norm = float(max(per_sat_requests, 1))
    feat = np.zeros((n, 3 + regions.num_regions + requests.shape[1] + cache.shape[1]))
    for s in states:
        row = feat[s.sat_id]
        row[0:3] = s.position_km / cfg.orbit_radius_km
        row[3 : 3 + regions.num_regions] = regions.one_hot(s.lat_deg, s.lon_deg)
    feat[:, 3 + regions.num_regions : 3 + regions.num_regions + requests.shape[1]] = (
        requests / req_norm
    )
    feat[:, 3 + regions.num_regions + requests.shape[1] :] = cache

    ei, ej, dists, rates = [], [], [], []
    for i in range(n):
        for j in sorted(isl_neighbors(cfg, i)):
            if j <= i:
                continue
            d = distance_km(states[i], states[j])
            if max_isl_range_km is not None and d > max_isl_range_km:
                continue
            ei.append(i)
            ej.append(j)
            dists.append(d)
            rates.append(isl_rate(budget, d * 1000.0))

    edge_i = np.asarray(ei, dtype=np.int64)
    edge_j = np.asarray(ej, dtype=np.int64)
    edge_dist = np.asarray(dists)
    edge_rate = np.asarray(rates)

    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i, j, r in zip(edge_i, edge_j, edge_rate):
        adj[i].append((int(j), float(r)))
        adj[j].append((int(i), float(r)))
    adjacency = tuple(tuple(sorted(a)) for a in adj)

    src, dst, msg_feat = _directed_views(edge_i, edge_j, edge_dist, edge_rate)
    return GraphSnapshot(
        node_features=feat,
        edge_i=edge_i,
        edge_j=edge_j,
        edge_dist_km=edge_dist,
        edge_rate_bps=edge_rate,
        adjacency=adjacency,
        msg_src=src,
        msg_dst=dst,
        msg_edge_features=msg_feat,
    )


def _dijkstra(g: GraphSnapshot, src: int, size_bits: float) -> dict[int, tuple[float, tuple]]:
    """Min (delay, node sequence) to every reachable node; lexicographic tie-break."""
    best: dict[int, tuple[float, tuple]] = {}
    heap = [(0.0, (src,))]
    while heap:
        delay, path = heapq.heappop(heap)
        node = path[-1]
        if node in best:
            continue
        best[node] = (delay, path)
        for nbr, rate in g.adjacency[node]:
            if nbr in best or rate <= 0.0:
                continue
            heapq.heappush(heap, (delay + size_bits / rate, path + (nbr,)))
    return best


class RouteCache:
    """Memoizes single-source routing results on one immutable snapshot."""

    def __init__(self, g: GraphSnapshot):
        self.g = g
        self._best: dict[tuple[int, float], dict[int, tuple[float, tuple]]] = {}

    def best_from(self, src: int, size_bits: float) -> dict[int, tuple[float, tuple]]:
        key = (src, float(size_bits))
        if key not in self._best:
            self._best[key] = _dijkstra(self.g, src, size_bits)
        return self._best[key]


def shortest_delay_path(g: GraphSnapshot, src: int, dst: int, size_bits: float) -> RoutePlan:
    """Min total transfer delay (size/rate per hop) from src to dst."""
    n = g.num_nodes
    if not (0 <= src < n and 0 <= dst < n):
        raise IndexError(f"node index out of range [0, {n})")
    if size_bits < 0:
        raise ValueError("size_bits must be >= 0")
    best = _dijkstra(g, src, size_bits)
    if dst not in best:
        raise NoRouteError(f"no route from {src} to {dst}")
    delay, path = best[dst]
    hops = tuple(zip(path[:-1], path[1:]))
    return RoutePlan(source=src, holder=dst, hops=hops, isl_delay=delay)


def nearest_holder(
    g: GraphSnapshot,
    src: int,
    content: int,
    cache: np.ndarray,
    size_bits: float,
    route_cache: RouteCache | None = None,
) -> RoutePlan:
    """Min-delay route to any satellite caching the content; local hit is free."""
    cache = np.asarray(cache)
    if not 0 <= content < cache.shape[1]:
        raise IndexError(f"content index out of range [0, {cache.shape[1]})")
    if cache[src, content]:
        return RoutePlan(source=src, holder=src, hops=(), isl_delay=0.0)
    holders = np.flatnonzero(cache[:, content])
    if holders.size == 0:
        raise NoHolderError(f"content {content} cached nowhere")
    if route_cache is not None:
        best = route_cache.best_from(src, size_bits)
    else:
        best = _dijkstra(g, src, size_bits)
    ranked = [(best[h][0], best[h][1]) for h in holders if h in best]
    if not ranked:
        raise NoRouteError(f"no route from {src} to any holder of content {content}")
    delay, path = min(ranked)
    hops = tuple(zip(path[:-1], path[1:]))
    return RoutePlan(source=src, holder=int(path[-1]), hops=hops, isl_delay=delay)


def snapshot_to_dict(g: GraphSnapshot) -> dict:
    """JSON-ready dump of one slot's graph (debug CLI flag)."""
    return {
        "num_nodes": g.num_nodes,
        "node_features": g.node_features.tolist(),
        "edges": [
            {
                "i": int(i),
                "j": int(j),
                "distance_km": float(d),
                "rate_bps": float(r),
            }
            for i, j, d, r in zip(g.edge_i, g.edge_j, g.edge_dist_km, g.edge_rate_bps)
        ],
    }
