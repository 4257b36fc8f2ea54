"""Command-line entry point.

Any config key can be overridden with a dotted flag, e.g.
``offloadsim run --lambda 0.3 --reward.chi_o 100 --topology.mode clusters``.
The config file defaults to ``$OFFLOADSIM_CONFIG`` when ``--config`` is omitted.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import yaml

from .config import ENV_CONFIG, SCHEMA, build_config, load_settings, normalize_settings
from .domain import ConfigError, validate_config
from .metrics import csv_row, render_csv, summarize
from .policies import POLICY_KINDS, TABULAR_Q, QLearnerParams
from .runner import SweepSpec, evaluate, sweep_csv, train_q
from .topology import ClusterPlan, generate_cluster_topology, save_topology
from .workload import write_trace_fixture


def _split_overrides(extra: list[str]) -> dict:
    overrides = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key, sep, value = tok[2:].partition("=")
        if not sep:
            try:
                value = next(it)
            except StopIteration:
                raise ConfigError(f"flag --{key} needs a value") from None
        if key not in SCHEMA:
            raise ConfigError(f"unknown key: {key}")
        overrides[key] = yaml.safe_load(value)
    return overrides


def _load_config(args, extra):
    path = args.config or os.environ.get(ENV_CONFIG)
    settings = normalize_settings(load_settings(path)) if path else normalize_settings({})
    settings = normalize_settings(_split_overrides(extra), base=settings)
    config = build_config(settings)
    bad = validate_config(config)
    if bad:
        raise ConfigError("invalid config", bad)
    return config


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _q_params(args) -> QLearnerParams:
    return QLearnerParams(alpha=args.alpha, gamma=args.gamma, eps_start=args.eps_start,
                          eps_end=args.eps_end, eps_decay=args.eps_decay, buckets=args.buckets)


def cmd_validate(args, extra) -> int:
    path = args.config or os.environ.get(ENV_CONFIG)
    settings = normalize_settings(load_settings(path)) if path else normalize_settings({})
    config = build_config(normalize_settings(_split_overrides(extra), base=settings))
    bad = validate_config(config)
    for v in bad:
        print(v)
    if not bad:
        print(f"ok: {len(config.topology.nodes)} nodes, "
              f"{len(config.topology.controllers)} agents, horizon {config.horizon}")
    return 1 if bad else 0


def cmd_run(args, extra) -> int:
    config = _load_config(args, extra)
    if args.policy == TABULAR_Q:
        raise ConfigError("use the 'train' command for the tabular Q-learner")
    batch = evaluate(config, args.policy, args.episodes)
    s = config.settings
    clusters = s["topology"]["n_clusters"] if s["topology"]["mode"] == "clusters" else None
    row = csv_row(summarize(batch), args.scenario or s["topology"]["mode"], args.policy,
                  config.lam, clusters, config.seed)
    _write(render_csv([row]), args.out)
    return 0


def cmd_sweep(args, extra) -> int:
    config = _load_config(args, extra)
    values = _floats(args.values)
    if args.axis == "clusters":
        values = [int(v) for v in values]
    spec = SweepSpec(axis=args.axis, values=values, policies=args.policies.split(","),
                     episodes=args.episodes, base_config=config, scenario=args.scenario,
                     train_episodes=args.train_episodes, q_params=_q_params(args))
    _write(sweep_csv(spec, workers=args.workers), args.out)
    return 0


def cmd_train(args, extra) -> int:
    config = _load_config(args, extra)
    result = train_q(config, args.episodes, _q_params(args))
    if args.curve_out:
        Path(args.curve_out).write_text(result.curve_csv())
    if args.table_dir:
        d = Path(args.table_dir)
        d.mkdir(parents=True, exist_ok=True)
        for agent, table in result.tables.items():
            table.save(d / f"q_agent_{agent}.csv")
    if args.eval_episodes:
        batch = evaluate(config, result.frozen(), args.eval_episodes,
                         config.seed + args.episodes)
        s = config.settings
        clusters = s["topology"]["n_clusters"] if s["topology"]["mode"] == "clusters" else None
        row = csv_row(summarize(batch), s["topology"]["mode"], TABULAR_Q, config.lam, clusters,
                      config.seed)
        _write(render_csv([row]), args.out)
    return 0


def cmd_serve(args, extra) -> int:
    from .bridge import serve_bridge

    config = _load_config(args, extra)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    try:
        serve_bridge(args.port, config, args.host)
    except KeyboardInterrupt:
        pass
    return 0


def cmd_gen_topology(args, extra) -> int:
    if extra:
        raise ConfigError(f"unexpected arguments {extra}")
    plan = ClusterPlan(n_clusters=args.clusters, sbc_pairs_per_cluster=args.sbc_pairs,
                       base_station_nodes=args.base_station_nodes,
                       shared_server=not args.no_server)
    topo = generate_cluster_topology(plan)
    if args.out:
        save_topology(topo, args.out)
    else:
        from .topology import topology_to_listing
        sys.stdout.write(yaml.safe_dump(topology_to_listing(topo), sort_keys=False))
    return 0


def cmd_gen_trace_fixture(args, extra) -> int:
    if extra:
        raise ConfigError(f"unexpected arguments {extra}")
    write_trace_fixture(args.out, n_jobs=args.jobs, seed=args.seed)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="offloadsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help=f"YAML config (default: ${ENV_CONFIG})")
        return sp

    def with_q(sp):
        d = QLearnerParams()
        sp.add_argument("--alpha", type=float, default=d.alpha)
        sp.add_argument("--gamma", type=float, default=d.gamma)
        sp.add_argument("--eps-start", type=float, default=d.eps_start)
        sp.add_argument("--eps-end", type=float, default=d.eps_end)
        sp.add_argument("--eps-decay", type=float, default=d.eps_decay)
        sp.add_argument("--buckets", type=int, default=d.buckets)

    sp = with_config(sub.add_parser("validate", help="check a config and list violations"))
    sp.set_defaults(func=cmd_validate)

    sp = with_config(sub.add_parser("run", help="run episodes with one policy"))
    sp.add_argument("--policy", choices=[k for k in POLICY_KINDS if k != TABULAR_Q],
                    default="random")
    sp.add_argument("--episodes", type=int, default=10)
    sp.add_argument("--scenario")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_run)

    sp = with_config(sub.add_parser("sweep", help="sweep lambda or cluster count"))
    sp.add_argument("--axis", choices=["lambda", "clusters"], required=True)
    sp.add_argument("--values", required=True, help="comma-separated axis values")
    sp.add_argument("--policies", default="local,random,least_queue")
    sp.add_argument("--episodes", type=int, default=10)
    sp.add_argument("--train-episodes", type=int, default=300)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--scenario")
    sp.add_argument("--out")
    with_q(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = with_config(sub.add_parser("train", help="train tabular Q-learners"))
    sp.add_argument("--episodes", type=int, default=300)
    sp.add_argument("--eval-episodes", type=int, default=100)
    sp.add_argument("--curve-out")
    sp.add_argument("--table-dir")
    sp.add_argument("--out")
    with_q(sp)
    sp.set_defaults(func=cmd_train)

    sp = with_config(sub.add_parser("serve", help="serve the agent bridge over TCP"))
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=5555)
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("gen-topology", help="write a cluster topology file")
    sp.add_argument("--clusters", type=int, default=1)
    sp.add_argument("--sbc-pairs", type=int, default=4)
    sp.add_argument("--base-station-nodes", type=int, default=3)
    sp.add_argument("--no-server", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gen_topology)

    sp = sub.add_parser("gen-trace-fixture", help="write a synthetic job trace")
    sp.add_argument("--jobs", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_trace_fixture)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        return args.func(args, extra)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
