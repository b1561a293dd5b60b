"""Experiment orchestration: config loading, seeded runs, metrics output."""
import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .agents.actions import ActionSpace
from .agents.baselines import cloud_policy, pcf_policy
from .agents.replay import GraphSample, Transition
from .agents.sac import SacAgent, SacConfig
from .channel import LinkBudget, RainModel
from .constellation import ConstellationConfig
from .env import CacheEnv, RegionGrid, RewardConfig
from .netgraph import snapshot_to_dict
from .nn.layers import MpnnConfig
from .workload import ContentCatalog, RequestTrace

METRICS_HEADER = (
    "episode,slot,scheme,cache_capacity,per_sat_requests,reward,success_rate,"
    "traffic_req_bits,traffic_update_bits,traffic_total_bits,discarded"
)
METRICS_VERSION = "# leocache-metrics v1"
SCHEMES = ("gtsac", "sac_neighbor", "pcf", "cloud")


class ConfigError(Exception):
    """Config file failed validation; message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    seed: int
    episodes: int
    eval_episodes: int
    slots_per_episode: int
    slot_duration_s: float
    cache_capacity: int
    per_sat_requests: int
    constellation: ConstellationConfig
    max_isl_range_km: float | None
    budget: LinkBudget
    rain: RainModel
    catalog: ContentCatalog
    regions: RegionGrid
    reward: RewardConfig
    sac: SacConfig
    mpnn: MpnnConfig


@dataclass(frozen=True)
class MetricsRow:
    episode: int
    slot: int
    scheme: str
    cache_capacity: int
    per_sat_requests: int
    reward: float
    success_rate: float
    traffic_req_bits: float
    traffic_update_bits: float
    traffic_total_bits: float
    discarded: int

    def to_csv(self) -> str:
        return ",".join(
            [
                str(self.episode),
                str(self.slot),
                self.scheme,
                str(self.cache_capacity),
                str(self.per_sat_requests),
                repr(float(self.reward)),
                repr(float(self.success_rate)),
                repr(float(self.traffic_req_bits)),
                repr(float(self.traffic_update_bits)),
                repr(float(self.traffic_total_bits)),
                str(self.discarded),
            ]
        )


_TOP_DEFAULTS = {
    "scheme": "gtsac",
    "seed": 0,
    "episodes": 500,
    "eval_episodes": 10,
    "slots_per_episode": 50,
    "slot_duration_s": 5.0,
    "cache_capacity": 1,
    "per_sat_requests": 6,
}
_SECTIONS = ("constellation", "link_budget", "rain", "catalog", "regions", "reward", "sac")

_CONSTELLATION_KEYS = {
    "planes",
    "sats_per_plane",
    "altitude_km",
    "inclination_deg",
    "phasing_offset_deg",
    "max_isl_range_km",
}
_BUDGET_KEYS = {
    "tx_power_w",
    "tx_gain_db",
    "rx_gain_db",
    "noise_temp_dbk",
    "ebn0_req_db",
    "link_margin_db",
    "carrier_freq_hz",
    "wavelength_m",
    "bandwidth_hz",
    "noise_power_w",
}
_RAIN_KEYS = {"enabled", "shape", "scale_db"}
_CATALOG_KEYS = {"num_contents", "size_mbits", "deadline_s", "zipf_alpha"}
_REGION_KEYS = {"lat_bands", "lon_sectors"}
_REWARD_KEYS = {
    "success_weight",
    "traffic_weight",
    "max_traffic_bits",
    "cloud_backhaul_delay_s",
}
_SAC_KEYS = {
    "discount",
    "tau",
    "alpha_ent",
    "lr",
    "batch_size",
    "buffer_capacity",
    "warmup_steps",
    "mpnn_layers",
    "mpnn_hidden",
}


def _section(raw: dict, name: str, allowed: set) -> dict:
    sec = raw.get(name, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: must be a mapping")
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}: unknown key")
    out = {}
    for key, value in sec.items():
        # YAML 1.1 reads unsigned exponents ("2.3e10") as strings; repair that
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                pass
        out[key] = value
    return out


def _build(section: str, factory, kwargs: dict):
    try:
        return factory(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level: must be a mapping")
    allowed_top = set(_TOP_DEFAULTS) | set(_SECTIONS)
    for key in raw:
        if key not in allowed_top:
            raise ConfigError(f"{key}: unknown key")

    top = dict(_TOP_DEFAULTS)
    top.update({k: raw[k] for k in _TOP_DEFAULTS if k in raw})
    if top["scheme"] not in SCHEMES:
        raise ConfigError(f"scheme: must be one of {SCHEMES}, got {top['scheme']!r}")
    for key in ("seed", "episodes", "eval_episodes", "slots_per_episode",
                "cache_capacity", "per_sat_requests"):
        if isinstance(top[key], bool) or not isinstance(top[key], int):
            raise ConfigError(f"{key}: must be an integer")
    if top["episodes"] < 1 or top["eval_episodes"] < 0:
        raise ConfigError("episodes: must be >= 1 (eval_episodes >= 0)")
    if float(top["slot_duration_s"]) <= 0:
        raise ConfigError("slot_duration_s: must be > 0")

    cons = dict(_section(raw, "constellation", _CONSTELLATION_KEYS))
    max_range = cons.pop("max_isl_range_km", None)
    if max_range is not None:
        max_range = float(max_range)
        if max_range <= 0:
            raise ConfigError("constellation.max_isl_range_km: must be > 0 or null")
    constellation = _build("constellation", ConstellationConfig, cons)

    budget = _build("link_budget", LinkBudget, _section(raw, "link_budget", _BUDGET_KEYS))
    rain = _build("rain", RainModel, _section(raw, "rain", _RAIN_KEYS))

    cat = dict(_section(raw, "catalog", _CATALOG_KEYS))
    num_contents = cat.pop("num_contents", 6)
    size_mbits = cat.pop("size_mbits", 800.0)
    deadline_s = cat.pop("deadline_s", 2.5)
    catalog = _build(
        "catalog",
        ContentCatalog,
        {
            "num_contents": num_contents,
            "size_bits": np.asarray(size_mbits, dtype=np.float64) * 1e6,
            "deadline_s": np.asarray(deadline_s, dtype=np.float64),
            **cat,
        },
    )
    if top["cache_capacity"] > catalog.num_contents:
        raise ConfigError("cache_capacity: exceeds catalog.num_contents")

    regions = _build("regions", RegionGrid, _section(raw, "regions", _REGION_KEYS))
    reward = _build("reward", RewardConfig, _section(raw, "reward", _REWARD_KEYS))

    sac_raw = dict(_section(raw, "sac", _SAC_KEYS))
    mpnn = _build(
        "sac",
        MpnnConfig,
        {
            "layers": sac_raw.pop("mpnn_layers", 2),
            "hidden_dim": sac_raw.pop("mpnn_hidden", 32),
        },
    )
    sac = _build("sac", SacConfig, {**sac_raw, "episodes": top["episodes"]})

    return ExperimentConfig(
        scheme=top["scheme"],
        seed=top["seed"],
        episodes=top["episodes"],
        eval_episodes=top["eval_episodes"],
        slots_per_episode=top["slots_per_episode"],
        slot_duration_s=float(top["slot_duration_s"]),
        cache_capacity=top["cache_capacity"],
        per_sat_requests=top["per_sat_requests"],
        constellation=constellation,
        max_isl_range_km=max_range,
        budget=budget,
        rain=rain,
        catalog=catalog,
        regions=regions,
        reward=reward,
        sac=sac,
        mpnn=mpnn,
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Canonical resolved mapping; written to run_config.yaml and compared by compare()."""
    return {
        "scheme": cfg.scheme,
        "seed": cfg.seed,
        "episodes": cfg.episodes,
        "eval_episodes": cfg.eval_episodes,
        "slots_per_episode": cfg.slots_per_episode,
        "slot_duration_s": cfg.slot_duration_s,
        "cache_capacity": cfg.cache_capacity,
        "per_sat_requests": cfg.per_sat_requests,
        "constellation": {
            "planes": cfg.constellation.planes,
            "sats_per_plane": cfg.constellation.sats_per_plane,
            "altitude_km": cfg.constellation.altitude_km,
            "inclination_deg": cfg.constellation.inclination_deg,
            "phasing_offset_deg": cfg.constellation.phasing_offset_deg,
            "max_isl_range_km": cfg.max_isl_range_km,
        },
        "link_budget": {
            "tx_power_w": cfg.budget.tx_power_w,
            "tx_gain_db": cfg.budget.tx_gain_db,
            "rx_gain_db": cfg.budget.rx_gain_db,
            "noise_temp_dbk": cfg.budget.noise_temp_dbk,
            "ebn0_req_db": cfg.budget.ebn0_req_db,
            "link_margin_db": cfg.budget.link_margin_db,
            "carrier_freq_hz": cfg.budget.carrier_freq_hz,
            "wavelength_m": cfg.budget.wavelength_m,
            "bandwidth_hz": cfg.budget.bandwidth_hz,
            "noise_power_w": cfg.budget.noise_power_w,
        },
        "rain": {
            "enabled": cfg.rain.enabled,
            "shape": cfg.rain.shape,
            "scale_db": cfg.rain.scale_db,
        },
        "catalog": {
            "num_contents": cfg.catalog.num_contents,
            "size_mbits": (cfg.catalog.size_bits / 1e6).tolist(),
            "deadline_s": cfg.catalog.deadline_s.tolist(),
            "zipf_alpha": cfg.catalog.zipf_alpha,
        },
        "regions": {
            "lat_bands": cfg.regions.lat_bands,
            "lon_sectors": cfg.regions.lon_sectors,
        },
        "reward": {
            "success_weight": cfg.reward.success_weight,
            "traffic_weight": cfg.reward.traffic_weight,
            "max_traffic_bits": cfg.reward.max_traffic_bits,
            "cloud_backhaul_delay_s": cfg.reward.cloud_backhaul_delay_s,
        },
        "sac": {
            "discount": cfg.sac.discount,
            "tau": cfg.sac.tau,
            "alpha_ent": cfg.sac.alpha_ent,
            "lr": cfg.sac.lr,
            "batch_size": cfg.sac.batch_size,
            "buffer_capacity": cfg.sac.buffer_capacity,
            "warmup_steps": cfg.sac.warmup_steps,
            "mpnn_layers": cfg.mpnn.layers,
            "mpnn_hidden": cfg.mpnn.hidden_dim,
        },
    }


def build_env(cfg: ExperimentConfig, request_trace: RequestTrace | None = None) -> CacheEnv:
    return CacheEnv(
        constellation=cfg.constellation,
        catalog=cfg.catalog,
        budget=cfg.budget,
        rain=cfg.rain,
        regions=cfg.regions,
        reward_cfg=cfg.reward,
        per_sat_requests=cfg.per_sat_requests,
        cache_capacity=cfg.cache_capacity,
        seed=cfg.seed,
        slot_duration_s=cfg.slot_duration_s,
        slots_per_episode=cfg.slots_per_episode,
        retrieval="neighbor1" if cfg.scheme == "sac_neighbor" else "full",
        max_isl_range_km=cfg.max_isl_range_km,
        request_trace=request_trace,
    )


def build_agent(cfg: ExperimentConfig) -> SacAgent | None:
    if cfg.scheme not in ("gtsac", "sac_neighbor"):
        return None
    node_dim = 3 + cfg.regions.num_regions + 2 * cfg.catalog.num_contents
    return SacAgent(
        encoder="gnn" if cfg.scheme == "gtsac" else "flat",
        node_dim=node_dim,
        edge_dim=2,
        num_nodes=cfg.constellation.num_sats,
        action_space=ActionSpace(cfg.catalog.num_contents, cfg.cache_capacity),
        cfg=cfg.sac,
        mpnn=cfg.mpnn,
        seed=cfg.seed,
    )


def _run_episode(
    env: CacheEnv,
    cfg: ExperimentConfig,
    agent: SacAgent | None,
    episode: int,
    train: bool,
    graph_dir: Path | None,
) -> list[MetricsRow]:
    state = env.reset(episode)
    policy_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 4, episode]))
    n, f = env.num_sats, cfg.catalog.num_contents
    pcf_prev = np.zeros((n, f), dtype=np.int64)
    action_space = agent.actions if agent is not None else None
    rows = []
    for slot in range(cfg.slots_per_episode):
        if graph_dir is not None:
            path = graph_dir / f"episode_{episode:04d}_slot_{slot:04d}.json"
            with open(path, "w") as fh:
                json.dump(snapshot_to_dict(state.graph), fh)
        if cfg.scheme == "pcf":
            psi = pcf_policy(pcf_prev, cfg.cache_capacity)
            joint = sample = None
        elif cfg.scheme == "cloud":
            psi = cloud_policy(n, f)
            joint = sample = None
        else:
            sample = GraphSample.from_snapshot(state.graph)
            joint = agent.select_action(sample, policy_rng, greedy=not train)
            psi = action_space.decode(joint)
        pcf_prev = state.requests.counts
        next_state, rew, metrics, _ = env.step(psi)
        if train and agent is not None:
            agent.observe(
                Transition(
                    state=sample,
                    action=joint,
                    reward=rew,
                    next_state=GraphSample.from_snapshot(next_state.graph),
                )
            )
            agent.update()
        rows.append(
            MetricsRow(
                episode=episode,
                slot=slot,
                scheme=cfg.scheme,
                cache_capacity=cfg.cache_capacity,
                per_sat_requests=cfg.per_sat_requests,
                reward=rew,
                success_rate=metrics.success_rate,
                traffic_req_bits=metrics.traffic_request_bits,
                traffic_update_bits=metrics.traffic_update_bits,
                traffic_total_bits=metrics.traffic_total_bits,
                discarded=metrics.discarded,
            )
        )
        state = next_state
    return rows


def write_metrics(rows: list[MetricsRow], path) -> None:
    lines = [METRICS_VERSION, METRICS_HEADER] + [r.to_csv() for r in rows]
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_metrics(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != METRICS_VERSION:
        raise ValueError(f"{path}: not a leocache metrics file")
    header = lines[1].split(",")
    for ln in lines[2:]:
        parts = ln.split(",")
        row = dict(zip(header, parts))
        for key in ("episode", "slot", "cache_capacity", "per_sat_requests", "discarded"):
            row[key] = int(row[key])
        for key in (
            "reward",
            "success_rate",
            "traffic_req_bits",
            "traffic_update_bits",
            "traffic_total_bits",
        ):
            row[key] = float(row[key])
        rows.append(row)
    return rows


def summarize(rows: list[MetricsRow], cfg: ExperimentConfig) -> dict:
    train_rows = [r for r in rows if r.episode < cfg.episodes]
    eval_rows = [r for r in rows if r.episode >= cfg.episodes]
    per_episode = []
    for e in sorted({r.episode for r in train_rows}):
        ep = [r.reward for r in train_rows if r.episode == e]
        per_episode.append(sum(ep) / len(ep))
    summary = {
        "scheme": cfg.scheme,
        "seed": cfg.seed,
        "episodes": cfg.episodes,
        "eval_episodes": cfg.eval_episodes,
        "cache_capacity": cfg.cache_capacity,
        "per_sat_requests": cfg.per_sat_requests,
        "train_episode_reward_mean": per_episode,
    }
    if eval_rows:
        count = len(eval_rows)
        summary["eval"] = {
            "slots": count,
            "reward_mean": sum(r.reward for r in eval_rows) / count,
            "success_rate_mean": sum(r.success_rate for r in eval_rows) / count,
            "traffic_req_bits_mean": sum(r.traffic_req_bits for r in eval_rows) / count,
            "traffic_update_bits_mean": sum(r.traffic_update_bits for r in eval_rows) / count,
            "traffic_total_bits_mean": sum(r.traffic_total_bits for r in eval_rows) / count,
            "discarded_total": sum(r.discarded for r in eval_rows),
        }
    return summary


def run(
    cfg: ExperimentConfig,
    out_dir,
    eval_only: bool = False,
    checkpoint=None,
    dump_graphs: bool = False,
    dump_trace=None,
    replay_trace=None,
) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace = None
    if replay_trace is not None:
        trace = RequestTrace.load(
            replay_trace, cfg.constellation.num_sats, cfg.catalog.num_contents
        )
    env = build_env(cfg, trace)
    agent = build_agent(cfg)
    if eval_only and agent is not None:
        if checkpoint is None:
            raise ValueError("--eval-only requires --checkpoint for learning schemes")
        agent.load_params(checkpoint)
    elif checkpoint is not None and agent is not None:
        agent.load_params(checkpoint)

    recorder = None
    if dump_trace is not None:
        recorder = RequestTrace(cfg.constellation.num_sats, cfg.catalog.num_contents)
        env.request_recorder = recorder
    graph_dir = None
    if dump_graphs:
        graph_dir = out / "graphs"
        graph_dir.mkdir(exist_ok=True)

    rows: list[MetricsRow] = []
    if not eval_only:
        for episode in range(cfg.episodes):
            rows.extend(_run_episode(env, cfg, agent, episode, True, graph_dir))
    for episode in range(cfg.episodes, cfg.episodes + cfg.eval_episodes):
        rows.extend(_run_episode(env, cfg, agent, episode, False, graph_dir))

    write_metrics(rows, out / "metrics.csv")
    summary = summarize(rows, cfg)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "run_config.yaml", "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=True)
    if agent is not None and not eval_only:
        agent.save_params(out / "checkpoint.json")
    if recorder is not None:
        recorder.save(dump_trace)
    return summary


def compare(run_dirs: list, out_csv) -> list[dict]:
    """Aggregate eval success rate and update traffic per (scheme, C, per_sat)."""
    if len(run_dirs) < 2:
        raise ValueError("compare needs at least 2 run directories")
    runs = []
    catalog_ref = None
    for d in run_dirs:
        d = Path(d)
        with open(d / "run_config.yaml") as fh:
            rc = yaml.safe_load(fh)
        if catalog_ref is None:
            catalog_ref = rc["catalog"]
        elif rc["catalog"] != catalog_ref:
            raise ValueError(f"{d}: catalog differs from {run_dirs[0]}; refusing to compare")
        rows = read_metrics(d / "metrics.csv")
        eval_rows = [r for r in rows if r["episode"] >= rc["episodes"]]
        if not eval_rows:
            eval_rows = rows
        runs.append((rc, eval_rows))

    grouped: dict[tuple, list[dict]] = {}
    for rc, eval_rows in runs:
        key = (rc["scheme"], rc["cache_capacity"], rc["per_sat_requests"])
        grouped.setdefault(key, []).extend(eval_rows)
    table = []
    for key in sorted(grouped):
        rows = grouped[key]
        count = len(rows)
        table.append(
            {
                "scheme": key[0],
                "cache_capacity": key[1],
                "per_sat_requests": key[2],
                "success_rate_mean": sum(r["success_rate"] for r in rows) / count,
                "traffic_update_bits_mean": sum(r["traffic_update_bits"] for r in rows) / count,
                "reward_mean": sum(r["reward"] for r in rows) / count,
                "slots": count,
            }
        )
    header = (
        "scheme,cache_capacity,per_sat_requests,success_rate_mean,"
        "traffic_update_bits_mean,reward_mean,slots"
    )
    lines = [header]
    for row in table:
        lines.append(
            ",".join(
                [
                    row["scheme"],
                    str(row["cache_capacity"]),
                    str(row["per_sat_requests"]),
                    repr(row["success_rate_mean"]),
                    repr(row["traffic_update_bits_mean"]),
                    repr(row["reward_mean"]),
                    str(row["slots"]),
                ]
            )
        )
    with open(out_csv, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return table


def apply_overrides(
    cfg: ExperimentConfig,
    seed: int | None = None,
    episodes: int | None = None,
    scheme: str | None = None,
) -> ExperimentConfig:
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    if episodes is not None:
        if episodes < 1:
            raise ConfigError("episodes: must be >= 1")
        cfg = dataclasses.replace(
            cfg, episodes=episodes, sac=dataclasses.replace(cfg.sac, episodes=episodes)
        )
    if scheme is not None:
        if scheme not in SCHEMES:
            raise ConfigError(f"scheme: must be one of {SCHEMES}, got {scheme!r}")
        cfg = dataclasses.replace(cfg, scheme=scheme)
    return cfg
