"""Topology builders: urban-sensing style clusters, plain tiers, and
explicit node/link listings read from files."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml

from .domain import ConfigError, NodeSpec, Topology

DEFAULT_BANDWIDTH_HZ = 2e6


@dataclass(frozen=True)
class RoleSpec:
    num_cores: int
    frequency: float
    queue_capacity: int
    transmit_power: float = 20.0


@dataclass(frozen=True)
class ClusterPlan:
    """Layout of an urban-sensing deployment.

    Every cluster holds ``sbc_pairs_per_cluster`` pairs of single-board
    computers plus a base station made of ``base_station_nodes`` machines
    (the first one a NUC, the rest GPU boxes). An optional server is shared
    by all clusters. Frequencies are uniform; capacity differs by core count.
    """

    n_clusters: int = 1
    sbc_pairs_per_cluster: int = 4
    base_station_nodes: int = 3
    shared_server: bool = True
    sbc: RoleSpec = RoleSpec(1, 4e7, 10)
    nuc: RoleSpec = RoleSpec(2, 4e7, 20)
    gpu: RoleSpec = RoleSpec(4, 4e7, 20)
    server: RoleSpec = RoleSpec(8, 4e7, 100)
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ
    cluster_spacing_m: float = 100.0
    ring_radius_m: float = 10.0
    jitter_m: float = 0.0

    @property
    def node_count(self) -> int:
        per_cluster = 2 * self.sbc_pairs_per_cluster + self.base_station_nodes
        return self.n_clusters * per_cluster + int(self.shared_server)

    def violations(self) -> list[str]:
        out = []
        if self.n_clusters < 1:
            out.append("n_clusters must be >= 1")
        if self.sbc_pairs_per_cluster < 0:
            out.append("sbc_pairs_per_cluster must be >= 0")
        if self.base_station_nodes < 1:
            out.append("base_station_nodes must be >= 1")
        return out


def _spec(nid, tier, role: RoleSpec, pos, client) -> NodeSpec:
    return NodeSpec(
        id=nid,
        tier=tier,
        num_cores=role.num_cores,
        frequency=role.frequency,
        queue_capacity=role.queue_capacity,
        transmit_power=role.transmit_power,
        position=(float(pos[0]), float(pos[1])),
        is_client=client,
        has_controller=True,
    )


def _symmetric(edges: Iterable[tuple[int, int]], ids: Iterable[int]) -> dict[int, set[int]]:
    nbrs: dict[int, set[int]] = {i: set() for i in ids}
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    return nbrs


def _uniform_bandwidth(nbrs: Mapping[int, Iterable[int]], hz: float) -> dict[tuple[int, int], float]:
    return {(i, j): float(hz) for i, js in nbrs.items() for j in js}


def generate_cluster_topology(plan: ClusterPlan, rng=None) -> Topology:
    """Build the cluster deployment described by ``plan``.

    Cluster ``c`` is centred at ``(c * cluster_spacing_m, 0)`` with its members
    evenly spaced on a ring; the shared server sits one spacing above the
    middle of the row. ``rng`` is only consulted when ``plan.jitter_m > 0``.
    """
    bad = plan.violations()
    if bad:
        raise ConfigError("invalid cluster plan", bad)
    nodes: list[NodeSpec] = []
    edges: list[tuple[int, int]] = []
    base_stations: list[int] = []
    nid = 0
    for c in range(plan.n_clusters):
        cx = c * plan.cluster_spacing_m
        members = 2 * plan.sbc_pairs_per_cluster + plan.base_station_nodes
        ring = [
            (cx + plan.ring_radius_m * math.cos(2 * math.pi * k / members),
             plan.ring_radius_m * math.sin(2 * math.pi * k / members))
            for k in range(members)
        ]
        sbc_ids = list(range(nid, nid + 2 * plan.sbc_pairs_per_cluster))
        bs_ids = list(range(sbc_ids[-1] + 1 if sbc_ids else nid,
                            nid + members))
        for k, i in enumerate(sbc_ids):
            nodes.append(_spec(i, 0, plan.sbc, ring[k], client=True))
        for k, i in enumerate(bs_ids):
            role = plan.nuc if k == 0 else plan.gpu
            nodes.append(_spec(i, 1, role, ring[len(sbc_ids) + k], client=False))
        for p in range(plan.sbc_pairs_per_cluster):
            a, b = sbc_ids[2 * p], sbc_ids[2 * p + 1]
            edges.append((a, b))
        for s in sbc_ids:
            edges.extend((s, b) for b in bs_ids)
        base_stations.extend(bs_ids)
        nid += members
    if plan.shared_server:
        mid = (plan.n_clusters - 1) * plan.cluster_spacing_m / 2
        nodes.append(_spec(nid, 2, plan.server, (mid, plan.cluster_spacing_m), client=False))
        edges.extend((b, nid) for b in base_stations)
    if plan.jitter_m > 0:
        if rng is None:
            raise ValueError("jitter requires an rng")
        jittered = []
        for n in nodes:
            dx, dy = rng.uniform(-plan.jitter_m, plan.jitter_m, size=2)
            jittered.append(_replace_pos(n, (n.position[0] + dx, n.position[1] + dy)))
        nodes = jittered
    nbrs = _symmetric(edges, [n.id for n in nodes])
    return Topology(tuple(nodes), {k: tuple(v) for k, v in nbrs.items()},
                    _uniform_bandwidth(nbrs, plan.bandwidth_hz))


def _replace_pos(n: NodeSpec, pos) -> NodeSpec:
    from dataclasses import replace

    return replace(n, position=(float(pos[0]), float(pos[1])))


def tiered_topology(
    nodes_per_tier=(10, 10, 10),
    frequencies=(4e7, 2e7, 8e7),
    cores=(1, 1, 2),
    queue_capacities=(20, 10, 100),
    client_tiers=(0,),
    transmit_power: float = 20.0,
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ,
    node_spacing_m: float = 10.0,
    tier_spacing_m: float = 50.0,
) -> Topology:
    """Tiers stacked vertically; each node links to its ring neighbours in its
    own tier and to the same-index node in the tiers directly above and below.
    Every node runs a controller; nodes in ``client_tiers`` also generate tasks."""
    lists = (frequencies, cores, queue_capacities)
    if any(len(x) != len(nodes_per_tier) for x in lists):
        raise ConfigError("tier parameter lists must all have one entry per tier")
    nodes: list[NodeSpec] = []
    index: dict[tuple[int, int], int] = {}
    nid = 0
    for tier, count in enumerate(nodes_per_tier):
        for i in range(count):
            nodes.append(NodeSpec(
                id=nid, tier=tier, num_cores=int(cores[tier]), frequency=float(frequencies[tier]),
                queue_capacity=int(queue_capacities[tier]), transmit_power=float(transmit_power),
                position=(i * node_spacing_m, tier * tier_spacing_m),
                is_client=tier in client_tiers, has_controller=True,
            ))
            index[(tier, i)] = nid
            nid += 1
    edges = []
    for tier, count in enumerate(nodes_per_tier):
        if count == 2:
            edges.append((index[(tier, 0)], index[(tier, 1)]))
        elif count >= 3:
            edges.extend((index[(tier, i)], index[(tier, (i + 1) % count)]) for i in range(count))
        if tier + 1 < len(nodes_per_tier):
            for i in range(min(count, nodes_per_tier[tier + 1])):
                edges.append((index[(tier, i)], index[(tier + 1, i)]))
    nbrs = _symmetric(edges, [n.id for n in nodes])
    return Topology(tuple(nodes), {k: tuple(v) for k, v in nbrs.items()},
                    _uniform_bandwidth(nbrs, bandwidth_hz))


# -- explicit listings -------------------------------------------------------

_NODE_KEYS = {"id", "tier", "num_cores", "frequency", "queue_capacity", "transmit_power",
              "x", "y", "client", "controller"}
_LINK_KEYS = {"a", "b", "bandwidth_hz", "bandwidth_ba_hz"}


def topology_from_listing(nodes: list[Mapping[str, Any]], links: list[Mapping[str, Any]],
                          default_bandwidth: float = DEFAULT_BANDWIDTH_HZ,
                          default_power: float = 20.0) -> Topology:
    specs = []
    for k, raw in enumerate(nodes):
        unknown = set(raw) - _NODE_KEYS
        if unknown:
            raise ConfigError(f"nodes[{k}]: unknown key: {sorted(unknown)[0]}")
        try:
            specs.append(NodeSpec(
                id=int(raw["id"]),
                tier=int(raw.get("tier", 0)),
                num_cores=int(raw.get("num_cores", 1)),
                frequency=float(raw["frequency"]),
                queue_capacity=int(raw["queue_capacity"]),
                transmit_power=float(raw.get("transmit_power", default_power)),
                position=(float(raw.get("x", 0.0)), float(raw.get("y", 0.0))),
                is_client=bool(raw.get("client", False)),
                has_controller=bool(raw.get("controller", True)),
            ))
        except KeyError as e:
            raise ConfigError(f"nodes[{k}]: missing key {e.args[0]}") from None
        except (TypeError, ValueError) as e:
            raise ConfigError(f"nodes[{k}]: {e}") from None
    ids = {s.id for s in specs}
    nbrs: dict[int, set[int]] = {i: set() for i in ids}
    bandwidth: dict[tuple[int, int], float] = {}
    for k, raw in enumerate(links):
        unknown = set(raw) - _LINK_KEYS
        if unknown:
            raise ConfigError(f"links[{k}]: unknown key: {sorted(unknown)[0]}")
        try:
            a, b = int(raw["a"]), int(raw["b"])
        except KeyError as e:
            raise ConfigError(f"links[{k}]: missing key {e.args[0]}") from None
        if a not in ids or b not in ids:
            raise ConfigError(f"links[{k}]: unknown node id")
        bw = float(raw.get("bandwidth_hz", default_bandwidth))
        nbrs[a].add(b)
        nbrs[b].add(a)
        bandwidth[(a, b)] = bw
        bandwidth[(b, a)] = float(raw.get("bandwidth_ba_hz", bw))
    return Topology(tuple(specs), {k: tuple(v) for k, v in nbrs.items()}, bandwidth)


def topology_to_listing(topology: Topology) -> dict[str, list[dict[str, Any]]]:
    nodes = [
        {
            "id": n.id, "tier": n.tier, "num_cores": n.num_cores, "frequency": n.frequency,
            "queue_capacity": n.queue_capacity, "transmit_power": n.transmit_power,
            "x": n.position[0], "y": n.position[1],
            "client": n.is_client, "controller": n.has_controller,
        }
        for n in topology.nodes
    ]
    links = []
    for i in topology.ids:
        for j in topology.neighbors_of(i):
            if i < j:
                link = {"a": i, "b": j, "bandwidth_hz": topology.link_bandwidth[(i, j)]}
                back = topology.link_bandwidth[(j, i)]
                if back != link["bandwidth_hz"]:
                    link["bandwidth_ba_hz"] = back
                links.append(link)
    return {"nodes": nodes, "links": links}


def load_topology(path) -> Topology:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"topology file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from None
    unknown = set(raw) - {"nodes", "links"}
    if unknown:
        raise ConfigError(f"{path}: unknown key: {sorted(unknown)[0]}")
    return topology_from_listing(raw.get("nodes") or [], raw.get("links") or [])


def save_topology(topology: Topology, path) -> None:
    Path(path).write_text(yaml.safe_dump(topology_to_listing(topology), sort_keys=False))
