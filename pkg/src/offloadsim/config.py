"""Configuration files.

A config is a YAML mapping. Every key is optional; omitted keys take the
defaults below (the experiment defaults: lambda 0.17, 1000-step episodes,
150 MB payloads, 8e7-instruction tasks, three tiers of ten nodes).
Unknown keys are rejected so typos never pass silently.

Example::

    seed: 7
    lambda: 0.3
    reward: {chi_o: 100}
    topology: {mode: clusters, n_clusters: 2}
    max_neighbors: auto
"""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Mapping

import yaml

from .domain import (
    BITS_PER_MB, ChannelParams, ConfigError, GainModel, RewardWeights, SimConfig, TaskSource,
    TaskTemplate, validate_config,
)
from .topology import ClusterPlan, RoleSpec, generate_cluster_topology, load_topology, \
    tiered_topology, topology_from_listing
from .workload import load_trace

ENV_CONFIG = "OFFLOADSIM_CONFIG"

# dotted key -> (default, kind)
SCHEMA: dict[str, tuple[Any, str]] = {
    "seed": (0, "int"),
    "horizon": (1000, "int"),
    "lambda": (0.17, "float"),
    "max_neighbors": (10, "int_or_auto"),
    "reward.r_u": (2.0, "float"),
    "reward.chi_wait": (20.0, "float"),
    "reward.chi_comm": (20.0, "float"),
    "reward.chi_exc": (20.0, "float"),
    "reward.chi_o": (150.0, "float"),
    "reward.p_floor": (1e-6, "float"),
    "channel.bandwidth_hz": (2e6, "float"),
    "channel.noise_dbm": (-90.0, "float"),
    "channel.gain_model": ("free_space", "enum:free_space,constant"),
    "channel.gain_ref_db": (-30.0, "float"),
    "channel.transmit_power_dbm": (20.0, "float"),
    "task.source": ("parametric", "enum:parametric,trace"),
    "task.rho": (8e7, "range"),
    "task.alpha_in_mb": (150.0, "range"),
    "task.alpha_out_mb": (150.0, "range"),
    "task.xi": (1.0, "range"),
    "task.delta": (100, "int_range"),
    "task.trace_path": (None, "path"),
    "task.reference_frequency": (1e7, "float"),
    "topology.mode": ("tiered", "enum:tiered,clusters,file,inline"),
    "topology.nodes_per_tier": ([10, 10, 10], "int_list"),
    "topology.frequencies": ([4e7, 2e7, 8e7], "float_list"),
    "topology.cores": ([1, 1, 2], "int_list"),
    "topology.queue_capacities": ([20, 10, 100], "int_list"),
    "topology.client_tiers": ([0], "int_list"),
    "topology.n_clusters": (1, "int"),
    "topology.sbc_pairs": (4, "int"),
    "topology.base_station_nodes": (3, "int"),
    "topology.shared_server": (True, "bool"),
    "topology.cluster_frequency": (4e7, "float"),
    "topology.path": (None, "path"),
    "topology.nodes": (None, "listing"),
    "topology.links": (None, "listing"),
}


def default_settings() -> dict[str, Any]:
    tree: dict[str, Any] = {}
    for key, (default, _) in SCHEMA.items():
        _set(tree, key, copy.deepcopy(default))
    return tree


def _set(tree: dict, dotted: str, value: Any) -> None:
    *head, last = dotted.split(".")
    for part in head:
        tree = tree.setdefault(part, {})
    tree[last] = value


def _get(tree: Mapping, dotted: str) -> Any:
    for part in dotted.split("."):
        tree = tree[part]
    return tree


def _flatten(tree: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    flat = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping) and key not in SCHEMA:
            sub = _flatten(v, key + ".")
            if not sub and not any(s.startswith(key + ".") for s in SCHEMA):
                raise ConfigError(f"unknown key: {key}")
            flat.update(sub)
        else:
            flat[key] = v
    return flat


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _number(key: str, v: Any) -> float:
    # YAML 1.1 reads "8e7" as a string
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            pass
    if not _is_number(v):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    return float(v)


def _integer(key: str, v: Any) -> int:
    f = _number(key, v)
    if f != int(f):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    return int(f)


def _coerce(key: str, v: Any, kind: str) -> Any:
    if kind == "int":
        return _integer(key, v)
    if kind == "float":
        return _number(key, v)
    if kind == "bool":
        if not isinstance(v, bool):
            raise ConfigError(f"{key}: expected true/false, got {v!r}")
        return v
    if kind == "int_or_auto":
        return "auto" if v == "auto" else _integer(key, v)
    if kind.startswith("enum:"):
        choices = kind[5:].split(",")
        if v not in choices:
            raise ConfigError(f"{key}: expected one of {choices}, got {v!r}")
        return v
    if kind in ("range", "int_range"):
        conv = _integer if kind == "int_range" else _number
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise ConfigError(f"{key}: a range needs exactly two values [low, high]")
            return [conv(key, v[0]), conv(key, v[1])]
        return conv(key, v)
    if kind in ("int_list", "float_list"):
        conv = _integer if kind == "int_list" else _number
        if not isinstance(v, (list, tuple)):
            raise ConfigError(f"{key}: expected a list, got {v!r}")
        return [conv(f"{key}[{i}]", x) for i, x in enumerate(v)]
    if kind == "path":
        if v is not None and not isinstance(v, str):
            raise ConfigError(f"{key}: expected a path string, got {v!r}")
        return v
    if kind == "listing":
        if v is not None and not (isinstance(v, list) and all(isinstance(x, Mapping) for x in v)):
            raise ConfigError(f"{key}: expected a list of mappings")
        return None if v is None else [dict(x) for x in v]
    raise AssertionError(kind)


def normalize_settings(raw: Mapping[str, Any] | None, base: Mapping[str, Any] | None = None
                       ) -> dict[str, Any]:
    """Merge ``raw`` (nested and/or dotted keys) over ``base`` (defaults when
    omitted), rejecting unknown keys and coercing types."""
    tree = copy.deepcopy(dict(base)) if base is not None else default_settings()
    for key, value in _flatten(raw or {}).items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown key: {key}")
        _set(tree, key, _coerce(key, value, SCHEMA[key][1]))
    return tree


def with_overrides(config: SimConfig, overrides: Mapping[str, Any]) -> SimConfig:
    """Rebuild ``config`` with dotted-key overrides applied."""
    if config.settings is None:
        raise ConfigError("config was not built from settings; cannot apply overrides")
    return build_config(normalize_settings(overrides, base=config.settings))


def _range_scaled(v, factor):
    if isinstance(v, list):
        return (v[0] * factor, v[1] * factor)
    return v * factor


def _as_number(v):
    return tuple(v) if isinstance(v, list) else v


def _build_topology(s: Mapping[str, Any]):
    t = s["topology"]
    ch = s["channel"]
    mode = t["mode"]
    if mode == "tiered":
        return tiered_topology(
            nodes_per_tier=t["nodes_per_tier"], frequencies=t["frequencies"], cores=t["cores"],
            queue_capacities=t["queue_capacities"], client_tiers=tuple(t["client_tiers"]),
            transmit_power=ch["transmit_power_dbm"], bandwidth_hz=ch["bandwidth_hz"],
        )
    if mode == "clusters":
        f, p = t["cluster_frequency"], ch["transmit_power_dbm"]
        plan = ClusterPlan(
            n_clusters=t["n_clusters"], sbc_pairs_per_cluster=t["sbc_pairs"],
            base_station_nodes=t["base_station_nodes"], shared_server=t["shared_server"],
            sbc=RoleSpec(1, f, 10, p), nuc=RoleSpec(2, f, 20, p), gpu=RoleSpec(4, f, 20, p),
            server=RoleSpec(8, f, 100, p), bandwidth_hz=ch["bandwidth_hz"],
        )
        return generate_cluster_topology(plan)
    if mode == "file":
        if not t["path"]:
            raise ConfigError("topology.path is required when topology.mode is 'file'")
        return load_topology(t["path"])
    if not t["nodes"]:
        raise ConfigError("topology.nodes is required when topology.mode is 'inline'")
    return topology_from_listing(t["nodes"], t["links"] or [], ch["bandwidth_hz"],
                                 ch["transmit_power_dbm"])


def build_config(settings: Mapping[str, Any] | None = None) -> SimConfig:
    """Build a :class:`SimConfig` from a (possibly partial) settings tree.

    Structural problems raise :class:`ConfigError`; semantic ones are left to
    :func:`validate_config`.
    """
    s = normalize_settings(settings)
    topology = _build_topology(s)
    ch = s["channel"]
    gain = GainModel(ch["gain_model"], ch["gain_ref_db"])
    channel = ChannelParams(dict(topology.link_bandwidth), ch["noise_dbm"], gain)
    reward = RewardWeights(**s["reward"])
    task = s["task"]
    xi, delta = _as_number(task["xi"]), _as_number(task["delta"])
    if task["source"] == "parametric":
        templates = (TaskTemplate(
            rho=_as_number(task["rho"]),
            alpha_in=_as_number(_range_scaled(task["alpha_in_mb"], BITS_PER_MB)),
            alpha_out=_as_number(_range_scaled(task["alpha_out_mb"], BITS_PER_MB)),
            xi=xi, delta=delta,
        ),)
    else:
        if not task["trace_path"]:
            raise ConfigError("task.trace_path is required when task.source is 'trace'")
        templates = tuple(load_trace(task["trace_path"], task["reference_frequency"], xi, delta))
    max_nb = s["max_neighbors"]
    if max_nb == "auto":
        max_nb = topology.max_degree
    return SimConfig(
        topology=topology, channel=channel, reward=reward, lam=s["lambda"],
        tasks=TaskSource(templates, task["source"]), horizon=s["horizon"], seed=s["seed"],
        max_neighbors=max_nb, settings=s,
    )


def default_config(**overrides: Any) -> SimConfig:
    """Defaults plus dotted-key overrides; ``lam`` is accepted for ``lambda``."""
    if "lam" in overrides:
        overrides["lambda"] = overrides.pop("lam")
    return build_config(normalize_settings(overrides))


def _resolve_paths(tree: dict, root: Path) -> None:
    for key in ("task.trace_path", "topology.path"):
        try:
            v = _get(tree, key)
        except (KeyError, TypeError):
            continue
        if isinstance(v, str) and not Path(v).is_absolute():
            _set(tree, key, str((root / v).resolve()))


def load_settings(path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ConfigError(f"{path}: parse error{where}: {getattr(e, 'problem', e)}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    raw = copy.deepcopy(dict(raw))
    _resolve_paths(raw, path.parent)
    return raw


def parse_config(path, overrides: Mapping[str, Any] | None = None) -> SimConfig:
    """Read, build and validate a config file; raises ConfigError listing violations."""
    settings = normalize_settings(load_settings(path))
    if overrides:
        settings = normalize_settings(overrides, base=settings)
    config = build_config(settings)
    bad = validate_config(config)
    if bad:
        raise ConfigError(f"{path}: invalid config", bad)
    return config


def serialize_config(config: SimConfig) -> str:
    if config.settings is None:
        raise ConfigError("config was not built from settings; nothing to serialize")
    return yaml.safe_dump(dict(config.settings), sort_keys=False)
