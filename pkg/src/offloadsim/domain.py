"""Core domain types shared by the simulator, environment and tooling.

Unit canon used throughout the package:

* time is measured in simulation steps (one step is one second);
* data sizes are in bits (configs accept decimal megabytes, 1 MB = 8e6 bits);
* processor frequencies are in cycles per step;
* powers, gains and noise are in dB / dBm.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

BITS_PER_MB = 8e6


class ConfigError(ValueError):
    """Raised when a configuration cannot be built or fails validation."""

    def __init__(self, message: str, violations: Sequence[str] = ()):
        self.violations = list(violations)
        if self.violations:
            message = message + ":\n  - " + "\n  - ".join(self.violations)
        super().__init__(message)


def mb_to_bits(mb: float) -> float:
    return float(mb) * BITS_PER_MB


@dataclass(slots=True, eq=False)
class TaskInstance:
    """One indivisible task.

    ``remaining_cycles`` tracks outstanding work on the cycle basis
    (``rho * xi`` when fresh). ``offload_chain`` lists every node the task
    visited, starting at the originating client; the last entry is the node
    that holds (or will process) the task.
    """

    id: int
    rho: float
    alpha_in: float
    alpha_out: float
    xi: float
    delta: int
    origin_client: int
    created_at: int
    remaining_cycles: float = -1.0
    offload_chain: list[int] = field(default_factory=list)
    cycles_done: float = 0.0

    def __post_init__(self) -> None:
        if self.remaining_cycles < 0:
            self.remaining_cycles = self.rho * self.xi
        if not self.offload_chain:
            self.offload_chain = [self.origin_client]

    @property
    def demand_cycles(self) -> float:
        return self.rho * self.xi

    @property
    def remaining_instructions(self) -> float:
        return self.remaining_cycles / self.xi

    @property
    def holder(self) -> int:
        return self.offload_chain[-1]

    def violations(self) -> list[str]:
        out = []
        if not self.rho > 0:
            out.append(f"task {self.id}: rho must be > 0")
        if not self.alpha_in > 0:
            out.append(f"task {self.id}: alpha_in must be > 0")
        if not self.alpha_out > 0:
            out.append(f"task {self.id}: alpha_out must be > 0")
        if not self.xi >= 1:
            out.append(f"task {self.id}: xi must be >= 1")
        if not self.delta > 0:
            out.append(f"task {self.id}: delta must be > 0")
        if not 0 <= self.remaining_instructions <= self.rho:
            out.append(f"task {self.id}: remaining instructions out of range")
        if not self.offload_chain or self.offload_chain[0] != self.origin_client:
            out.append(f"task {self.id}: offload chain must start at origin client")
        return out


@dataclass(frozen=True)
class NodeSpec:
    id: int
    tier: int
    num_cores: int
    frequency: float
    queue_capacity: int
    transmit_power: float = 20.0
    position: tuple[float, float] = (0.0, 0.0)
    is_client: bool = False
    has_controller: bool = True

    @property
    def rate(self) -> float:
        """Processing budget in cycles per step."""
        return self.num_cores * self.frequency

    def violations(self) -> list[str]:
        out = []
        if self.num_cores < 1:
            out.append(f"node {self.id}: num_cores must be >= 1")
        if not self.frequency > 0:
            out.append(f"node {self.id}: frequency must be > 0")
        if self.queue_capacity < 0:
            out.append(f"node {self.id}: queue_capacity must be >= 0")
        if not all(math.isfinite(c) for c in self.position):
            out.append(f"node {self.id}: position must be finite")
        if not math.isfinite(self.transmit_power):
            out.append(f"node {self.id}: transmit power must be finite")
        return out


@dataclass(slots=True, eq=False)
class NodeState:
    queue: deque = field(default_factory=deque)
    current_task: TaskInstance | None = None
    # neighbor id -> (queue length, queue capacity, rate) as last announced
    last_broadcast: dict[int, tuple[int, int, float]] = field(default_factory=dict)


@dataclass(frozen=True)
class GainModel:
    """Channel gain model: ``constant`` (value in dB) or ``free_space``
    (value is the reference gain at 1 m)."""

    kind: str = "free_space"
    value_db: float = -30.0

    @classmethod
    def constant(cls, gain_db: float) -> "GainModel":
        return cls("constant", float(gain_db))

    @classmethod
    def free_space(cls, reference_db: float) -> "GainModel":
        return cls("free_space", float(reference_db))


@dataclass(frozen=True)
class Topology:
    nodes: tuple[NodeSpec, ...]
    neighbors: Mapping[int, tuple[int, ...]]
    link_bandwidth: Mapping[tuple[int, int], float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(
            self, "neighbors", {k: tuple(sorted(v)) for k, v in sorted(self.neighbors.items())}
        )
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def node(self, node_id: int) -> NodeSpec:
        return self._by_id[node_id]

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._by_id

    @property
    def ids(self) -> list[int]:
        return [n.id for n in self.nodes]

    @property
    def controllers(self) -> list[int]:
        return [n.id for n in self.nodes if n.has_controller]

    @property
    def clients(self) -> list[int]:
        return [n.id for n in self.nodes if n.is_client]

    def neighbors_of(self, node_id: int) -> tuple[int, ...]:
        return self.neighbors.get(node_id, ())

    @property
    def max_degree(self) -> int:
        return max((len(v) for v in self.neighbors.values()), default=0)

    def receivers(self, client: int) -> tuple[int, ...]:
        """Controllers a client may hand new tasks to."""
        if self.node(client).has_controller:
            return (client,)
        return tuple(j for j in self.neighbors_of(client) if self.node(j).has_controller)

    def offload_targets(self) -> set[int]:
        targets = set()
        for c in self.controllers:
            targets.add(c)
            targets.update(self.neighbors_of(c))
        return targets


@dataclass(frozen=True)
class ChannelParams:
    bandwidth: Mapping[tuple[int, int], float]
    noise_power: float = -90.0
    gain_model: GainModel = GainModel()


@dataclass(frozen=True)
class RewardWeights:
    r_u: float = 2.0
    chi_wait: float = 20.0
    chi_comm: float = 20.0
    chi_exc: float = 20.0
    chi_o: float = 150.0
    p_floor: float = 1e-6

    def violations(self) -> list[str]:
        out = []
        for name in ("r_u", "chi_wait", "chi_comm", "chi_exc", "chi_o"):
            if not getattr(self, name) >= 0:
                out.append(f"reward.{name} must be >= 0")
        if not 0 < self.p_floor < 1:
            out.append("reward.p_floor must lie in (0, 1)")
        return out


Number = float | tuple[float, float]


@dataclass(frozen=True)
class TaskTemplate:
    """Per-field constants, or ``(low, high)`` pairs drawn uniformly.

    ``delta`` ranges are drawn as integers, inclusive on both ends.
    """

    rho: Number = 8e7
    alpha_in: Number = 150 * BITS_PER_MB
    alpha_out: Number = 150 * BITS_PER_MB
    xi: Number = 1.0
    delta: int | tuple[int, int] = 100

    def __post_init__(self):
        constant = not any(isinstance(getattr(self, f), tuple) for f in _TEMPLATE_FIELDS)
        object.__setattr__(self, "_constant", constant)

    def is_constant(self) -> bool:
        return self._constant

    def mean(self, name: str) -> float:
        v = getattr(self, name)
        if isinstance(v, tuple):
            return (v[0] + v[1]) / 2
        return float(v)

    def violations(self, label: str = "task") -> list[str]:
        out = []
        bounds = {"rho": 0, "alpha_in": 0, "alpha_out": 0, "delta": 0}
        for name in _TEMPLATE_FIELDS:
            v = getattr(self, name)
            lo, hi = v if isinstance(v, tuple) else (v, v)
            if lo > hi:
                out.append(f"{label}.{name}: range low exceeds high")
            if name == "xi":
                if not lo >= 1:
                    out.append(f"{label}.xi must be >= 1")
            elif not lo > bounds[name]:
                out.append(f"{label}.{name} must be > 0")
        return out


_TEMPLATE_FIELDS = ("rho", "alpha_in", "alpha_out", "xi", "delta")


@dataclass(frozen=True)
class TaskSource:
    """Where new tasks come from: a single parametric template, or a list of
    trace-derived templates picked uniformly at random."""

    templates: tuple[TaskTemplate, ...] = (TaskTemplate(),)
    kind: str = "parametric"

    def sample(self, rng) -> dict[str, Any]:
        if len(self.templates) == 1:
            tpl = self.templates[0]
        else:
            tpl = self.templates[int(rng.integers(len(self.templates)))]
        if tpl.is_constant():
            return {
                "rho": float(tpl.rho),
                "alpha_in": float(tpl.alpha_in),
                "alpha_out": float(tpl.alpha_out),
                "xi": float(tpl.xi),
                "delta": int(tpl.delta),
            }
        out: dict[str, Any] = {}
        for name in _TEMPLATE_FIELDS:
            v = getattr(tpl, name)
            if not isinstance(v, tuple):
                out[name] = int(v) if name == "delta" else float(v)
            elif name == "delta":
                out[name] = int(rng.integers(v[0], v[1] + 1))
            else:
                out[name] = float(rng.uniform(v[0], v[1]))
        return out

    def mean_demand(self) -> float:
        """Mean cycle demand per task, E[rho * xi] (fields drawn independently)."""
        total = sum(t.mean("rho") * t.mean("xi") for t in self.templates)
        return total / len(self.templates)

    def violations(self) -> list[str]:
        if not self.templates:
            return ["task source has no templates"]
        out = []
        for k, t in enumerate(self.templates):
            out.extend(t.violations("task" if len(self.templates) == 1 else f"trace[{k}]"))
        return out


@dataclass(frozen=True)
class SimConfig:
    topology: Topology
    channel: ChannelParams
    reward: RewardWeights = RewardWeights()
    lam: float = 0.17
    tasks: TaskSource = TaskSource()
    horizon: int = 1000
    seed: int = 0
    max_neighbors: int = 10
    # normalized settings tree the config was built from (see offloadsim.config)
    settings: Mapping[str, Any] | None = field(default=None, compare=False, repr=False)

    @property
    def task_template(self) -> TaskSource:
        return self.tasks


def validate_config(config: SimConfig) -> list[str]:
    """Return every violated invariant in ``config``; empty means valid."""
    from .comm import channel_gain, ChannelError

    out: list[str] = []
    topo = config.topology
    if config.horizon < 1:
        out.append("horizon must be >= 1")
    if not config.lam >= 0:
        out.append("lambda must be >= 0")
    if not topo.nodes:
        out.append("topology has no nodes")
    ids = topo.ids
    if len(set(ids)) != len(ids):
        out.append("duplicate node ids")
    for n in topo.nodes:
        out.extend(n.violations())
    for nid, nbrs in topo.neighbors.items():
        if nid not in topo:
            out.append(f"neighbor list for unknown node {nid}")
            continue
        for j in nbrs:
            if j not in topo:
                out.append(f"node {nid}: unknown neighbor {j}")
            elif j == nid:
                out.append(f"node {nid}: self-loop in neighbor set")
            elif nid not in topo.neighbors_of(j):
                out.append(f"neighbor relation not symmetric: {nid} -> {j}")
    for nid in ids:
        for j in topo.neighbors_of(nid):
            for a, b in ((nid, j), (j, nid)):
                bw = config.channel.bandwidth.get((a, b))
                if bw is None or not bw > 0:
                    out.append(f"link {a}->{b}: bandwidth must be > 0")
            if j in topo and config.channel.gain_model.kind == "free_space" and nid < j:
                try:
                    channel_gain(topo.node(nid).position, topo.node(j).position,
                                 config.channel.gain_model)
                except ChannelError:
                    out.append(f"link {nid}-{j}: degenerate distance for free-space gain")
    if config.channel.gain_model.kind not in ("constant", "free_space"):
        out.append(f"unknown gain model {config.channel.gain_model.kind!r}")
    if not math.isfinite(config.channel.noise_power):
        out.append("channel noise power must be finite")
    for t in sorted(topo.offload_targets()):
        if t in topo and topo.node(t).queue_capacity == 0:
            out.append(f"zero-capacity worker: node {t} is an offload target with queue_capacity 0")
    for c in topo.clients:
        if not topo.receivers(c):
            out.append(f"client {c} has no controller to receive its tasks")
    if config.max_neighbors < topo.max_degree:
        out.append(
            f"observation width too small: max_neighbors={config.max_neighbors} "
            f"but a node has {topo.max_degree} neighbors"
        )
    out.extend(config.reward.violations())
    out.extend(config.tasks.violations())
    if config.tasks.templates and not config.tasks.mean_demand() > 0:
        out.append("mean task demand must be > 0")
    return out
