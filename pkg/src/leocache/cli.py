"""Command-line entry points: `leocache run` and `leocache compare`."""
import argparse
import sys

from .runner import ConfigError, apply_overrides, compare, load_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leocache",
        description="Satellite edge-cache simulator and learners",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one seeded experiment")
    p_run.add_argument("--config", required=True, help="YAML experiment config")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--episodes", type=int, default=None, help="override training episodes")
    p_run.add_argument("--scheme", default=None, help="override scheme (gtsac|sac_neighbor|pcf|cloud)")
    p_run.add_argument("--eval-only", action="store_true", help="skip training, evaluate a checkpoint")
    p_run.add_argument("--checkpoint", default=None, help="parameter checkpoint to load")
    p_run.add_argument("--dump-graphs", action="store_true", help="write per-slot graph JSON dumps")
    p_run.add_argument("--dump-trace", default=None, help="record the request stream to this CSV")
    p_run.add_argument("--replay-trace", default=None, help="replay requests from this CSV")

    p_cmp = sub.add_parser("compare", help="tabulate eval metrics across runs")
    p_cmp.add_argument("dirs", nargs="+", help="completed run directories")
    p_cmp.add_argument("--out", required=True, help="output CSV table")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            cfg = apply_overrides(cfg, seed=args.seed, episodes=args.episodes, scheme=args.scheme)
            summary = run(
                cfg,
                args.out,
                eval_only=args.eval_only,
                checkpoint=args.checkpoint,
                dump_graphs=args.dump_graphs,
                dump_trace=args.dump_trace,
                replay_trace=args.replay_trace,
            )
            final = summary.get("eval", {})
            if final:
                print(
                    f"{cfg.scheme}: eval success_rate={final['success_rate_mean']:.4f} "
                    f"reward={final['reward_mean']:.4f}"
                )
            print(f"wrote {args.out}/metrics.csv")
        else:
            table = compare(args.dirs, args.out)
            for row in table:
                print(
                    f"{row['scheme']} C={row['cache_capacity']} "
                    f"per_sat={row['per_sat_requests']}: "
                    f"S={row['success_rate_mean']:.4f} "
                    f"update_bits={row['traffic_update_bits_mean']:.3e}"
                )
            print(f"wrote {args.out}")
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
