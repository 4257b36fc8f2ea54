"""Per-agent reward: utility minus weighted delay and overload cost, plus an
optional potential-based shaping term ``F = potential(s') - potential(s)``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

from .comm import channel_gain, transmission_time
from .domain import ChannelParams, RewardWeights, TaskInstance, Topology


@dataclass(frozen=True)
class Snapshot:
    """Queue occupancy at one instant, plus the static network description."""

    time: int
    queues: Mapping[int, int]
    staged: Mapping[int, int]
    topology: Topology
    channel: ChannelParams


Potential = Callable[[Snapshot], float]


def snapshot(state) -> Snapshot:
    return Snapshot(
        time=state.time,
        queues={i: len(ns.queue) for i, ns in state.nodes.items()},
        staged={c: len(q) for c, q in state.staging.items()},
        topology=state.topology,
        channel=state.config.channel,
    )


def negative_occupancy(snap: Snapshot) -> float:
    """Example potential: minus the number of queued tasks in the whole system."""
    return -float(sum(snap.queues.values()))


@dataclass(frozen=True)
class RewardBreakdown:
    r_u: float
    t_wait: float
    t_comm: float
    t_exc: float
    delay: float
    p: float
    overload: float
    expected_queue: float
    shaping: float
    total: float


def compute_delay(snap: Snapshot, agent: int, target: int, task: TaskInstance,
                  weights: RewardWeights) -> tuple[float, float, float, float]:
    """Waiting, communication and execution-difference times and their weighted sum.

    Queue terms divide task counts by cycle rates as written in the reward
    definition, so they are tiny for realistic frequencies; the weights
    carry the scale.
    """
    topo = snap.topology
    me, dest = topo.node(agent), topo.node(target)
    t_wait = snap.queues[agent] / me.rate
    t_comm = 0.0
    if target != agent:
        t_wait += snap.queues[target] / dest.rate
        gain = channel_gain(me.position, dest.position, snap.channel.gain_model)
        t_comm = transmission_time(task.alpha_out, snap.channel.bandwidth[(agent, target)],
                                   me.transmit_power, gain, snap.channel.noise_power)
    work = task.rho * task.xi
    t_exc = work / dest.rate - work / me.rate
    delay = weights.chi_wait * t_wait + weights.chi_comm * t_comm + weights.chi_exc * t_exc
    return t_wait, t_comm, t_exc, delay


def compute_overload(snap: Snapshot, target: int, weights: RewardWeights,
                     mean_demand: float) -> tuple[float, float, float]:
    """Overload probability ``p`` (clamped to ``[p_floor, 1]``), expected queue
    state ``Q'`` in tasks, and overload cost ``-ln(p) / 3``."""
    node = snap.topology.node(target)
    q_max = node.queue_capacity
    if q_max == 0:
        raise ValueError("degenerate capacity")
    q = snap.queues[target]
    drained = node.rate / mean_demand  # tasks the node clears per step
    expected = min(max(0.0, q - drained) + 1, q_max)
    p = max(0.0, (q_max - q) / q_max)
    p = min(max(p, weights.p_floor), 1.0)
    return p, float(expected), (-math.log(p) / 3 if p < 1 else 0.0)


def compute_reward(snap: Snapshot, target: int, snap_next: Snapshot | None, agent: int,
                   task: TaskInstance, weights: RewardWeights, mean_demand: float,
                   potential: Potential | None = None) -> RewardBreakdown:
    t_wait, t_comm, t_exc, delay = compute_delay(snap, agent, target, task, weights)
    p, expected, overload = compute_overload(snap, target, weights, mean_demand)
    shaping = 0.0
    if potential is not None and snap_next is not None:
        shaping = potential(snap_next) - potential(snap)
    total = weights.r_u - (delay + weights.chi_o * overload) + shaping
    return RewardBreakdown(weights.r_u, t_wait, t_comm, t_exc, delay, p, overload, expected,
                           shaping, total)
