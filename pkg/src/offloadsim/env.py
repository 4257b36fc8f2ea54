"""Multi-agent environment over the simulation engine.

Every controller node is an agent. Observations are fixed-length vectors::

    [self block | neighbor block 1 .. max_neighbors | staging flag]

with each block holding ``(id, tier, queue, capacity, rate, x, y, bandwidth,
power)``. Neighbours appear in ascending id order and absent ones are padded
with -1. Actions are local indices: 0 processes locally, ``k`` offloads to
the k-th neighbour.
"""
from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass
from typing import Any

import numpy as np

from .domain import SimConfig
from .engine import EpisodeFinished, IllegalAction, SimState, advance_step, init
from .reward import Potential, RewardBreakdown, compute_reward, snapshot

BLOCK_FIELDS = ("id", "tier", "queue", "capacity", "rate", "x", "y", "bandwidth", "power")
BLOCK = len(BLOCK_FIELDS)
QUEUE_FIELD = BLOCK_FIELDS.index("queue")
CAPACITY_FIELD = BLOCK_FIELDS.index("capacity")
PAD = -1.0


def observation_width(max_neighbors: int) -> int:
    return (1 + max_neighbors) * BLOCK + 1


@dataclass(frozen=True, eq=False)
class Observation:
    vector: np.ndarray
    action_mask: np.ndarray  # True where the local index is a legal target

    @property
    def padded(self) -> np.ndarray:
        return ~self.action_mask

    @property
    def has_task(self) -> bool:
        return bool(self.vector[-1] > 0)


class _Layout:
    """Static part of one agent's observation, computed once per topology."""

    def __init__(self, config: SimConfig, agent: int):
        topo = config.topology
        width = observation_width(config.max_neighbors)
        self.members = (agent,) + topo.neighbors_of(agent)
        self.template = np.full(width, PAD)
        self.mask = np.zeros(1 + config.max_neighbors, dtype=bool)
        self.mask[: len(self.members)] = True
        for k, nid in enumerate(self.members):
            n = topo.node(nid)
            bw = 0.0 if nid == agent else config.channel.bandwidth[(agent, nid)]
            self.template[k * BLOCK:(k + 1) * BLOCK] = (
                n.id, n.tier, 0.0, n.queue_capacity, n.rate, n.position[0], n.position[1],
                bw, n.transmit_power,
            )
        self.template[-1] = 0.0
        self.queue_slots = np.arange(len(self.members)) * BLOCK + QUEUE_FIELD


def encode_observation(state: SimState, agent: int, layout: _Layout | None = None) -> Observation:
    """Observation of ``agent``: own queue read live, neighbours from their last broadcast."""
    if layout is None:
        layout = _Layout(state.config, agent)
    v = layout.template.copy()
    lb = state.nodes[agent].last_broadcast
    queues = [len(state.nodes[agent].queue)] + [lb[j][0] for j in layout.members[1:]]
    v[layout.queue_slots] = queues
    v[-1] = 1.0 if state.staging[agent] else 0.0
    return Observation(v, layout.mask.copy())


class OffloadEnv:
    """reset/step environment with per-agent rewards.

    ``potential`` is an optional shaping function over reward snapshots.
    """

    def __init__(self, config: SimConfig, potential: Potential | None = None,
                 strict: bool = True):
        self.config = config
        self.potential = potential
        self.strict = strict
        self.agents = list(config.topology.controllers)
        self.observation_width = observation_width(config.max_neighbors)
        self.n_actions = 1 + config.max_neighbors
        self._layouts = {a: _Layout(config, a) for a in self.agents}
        self._mean_demand = config.tasks.mean_demand()
        self.state: SimState | None = None
        self.last_breakdowns: dict[int, RewardBreakdown] = {}

    def reset(self, seed: int | None = None) -> dict[int, Observation]:
        config = self.config
        if seed is not None and seed != config.seed:
            settings = None
            if config.settings is not None:
                settings = copy.deepcopy(dict(config.settings))
                settings["seed"] = seed
            config = dataclasses.replace(config, seed=seed, settings=settings)
        self.state = init(config, strict=self.strict)
        self.state.metrics.rewards = {a: 0.0 for a in self.agents}
        self.last_breakdowns = {}
        return self.observe()

    def observe(self) -> dict[int, Observation]:
        return {a: encode_observation(self.state, a, self._layouts[a]) for a in self.agents}

    def action_masks(self) -> dict[int, np.ndarray]:
        return {a: self._layouts[a].mask.copy() for a in self.agents}

    def target_of(self, agent: int, index: int) -> int:
        members = self._layouts[agent].members
        if isinstance(index, bool) or not isinstance(index, (int, np.integer)):
            raise IllegalAction(f"illegal action for agent {agent}: index {index!r} is not an integer")
        if not 0 <= index < len(members):
            raise IllegalAction(f"illegal action for agent {agent}: index {index} is masked or out of range")
        return members[int(index)]

    @property
    def done(self) -> bool:
        return self.state is not None and self.state.done

    @property
    def metrics(self):
        return self.state.metrics

    def step(self, actions: dict[int, int]) -> tuple[dict[int, Observation], dict[int, float], bool, dict[str, Any]]:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        if self.state.done:
            raise EpisodeFinished("episode finished")
        missing = [a for a in self.agents if a not in actions]
        if missing:
            raise ValueError(f"incomplete joint action: missing agents {missing}")
        joint = {a: self.target_of(a, actions[a]) for a in self.agents}
        before = snapshot(self.state)
        out = advance_step(self.state, joint)
        after = snapshot(self.state) if self.potential is not None else None
        rewards: dict[int, float] = {}
        breakdowns: dict[int, RewardBreakdown] = {}
        for a in self.agents:
            acted = out.acted.get(a)
            if acted is None:
                rewards[a] = 0.0
                continue
            bd = compute_reward(before, acted.target, after, a, acted.task, self.config.reward,
                                self._mean_demand, self.potential)
            breakdowns[a] = bd
            rewards[a] = bd.total
            self.state.metrics.rewards[a] += bd.total
        self.last_breakdowns = breakdowns
        info = {
            "time": self.state.time,
            "overloads": out.overloads,
            "terminal": out.terminal,
            "acted": {a: t.target for a, t in out.acted.items() if t is not None},
            "breakdowns": breakdowns,
            "action_masks": self.action_masks(),
        }
        return self.observe(), rewards, self.state.done, info
