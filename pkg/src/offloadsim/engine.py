"""Discrete-time simulation engine.

One call to :func:`advance_step` executes step ``t`` in a fixed phase order:

1. offload decisions (agents in ascending id);
2. delivery of every transfer whose ``arrive_at <= t + 1``;
3. processing, each node spending ``num_cores * frequency`` cycles, FIFO;
4. deadline enforcement (``t + 1 - created_at > delta`` drops the task);
5. new client arrivals into the receiving controllers' staging buffers;
6. clock advance and one-hop state broadcast.

Completion and drop times are stamped ``t + 1``. Results travel back to the
origin client hop by hop along the task's offload chain.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .comm import LinkTable
from .domain import ConfigError, NodeState, SimConfig, TaskInstance, validate_config
from .metrics import EpisodeMetrics
from .workload import sample_arrivals

OFFLOAD = "offload"
RESULT_RETURN = "result_return"

COMPLETED = "completed"
DROPPED_OVERFLOW = "dropped_overflow"
DROPPED_DEADLINE = "dropped_deadline"


class EpisodeFinished(RuntimeError):
    pass


class IllegalAction(ValueError):
    pass


@dataclass(slots=True, eq=False)
class TransferEvent:
    task: TaskInstance
    src: int
    dst: int
    payload: float
    arrive_at: float
    kind: str
    seq: int
    hop: int = 0  # result_return: index of ``dst`` in the task's offload chain


@dataclass(frozen=True)
class TerminalRecord:
    task_id: int
    outcome: str
    finished_at: int
    response_time: int | None = None
    origin: int | None = None


@dataclass(frozen=True)
class ActedTask:
    agent: int
    target: int
    task: TaskInstance


@dataclass
class StepOutcome:
    time: int
    acted: dict[int, ActedTask | None] = field(default_factory=dict)
    terminal: list[TerminalRecord] = field(default_factory=list)
    overloads: list[int] = field(default_factory=list)


class SimState:
    """Mutable world state for one episode. Not thread-safe."""

    def __init__(self, config: SimConfig, strict: bool = True):
        bad = validate_config(config)
        if bad:
            raise ConfigError("invalid config", bad)
        self.config = config
        self.strict = strict
        self.topology = config.topology
        self.links = LinkTable(config.topology, config.channel)
        self.time = 0
        self.nodes: dict[int, NodeState] = {i: NodeState() for i in self.topology.ids}
        self.in_transit: list[TransferEvent] = []
        self.staging: dict[int, deque] = {c: deque() for c in self.topology.controllers}
        self.rng = np.random.default_rng(config.seed)
        self.metrics = EpisodeMetrics(overloads_by_node={i: 0 for i in self.topology.ids})
        self.next_task_id = 0
        self._seq = 0
        # task id -> task, and where the task currently sits
        self.resident: dict[int, TaskInstance] = {}
        self._where: dict[int, tuple[str, object]] = {}
        self._deadlines: list[tuple[int, int]] = []  # (last step a task may live, id)
        self._capacity = {n.id: n.queue_capacity for n in self.topology.nodes}
        self._rate = {n.id: n.rate for n in self.topology.nodes}
        self._neighbors = {i: self.topology.neighbors_of(i) for i in self.topology.ids}
        self._clients = [self.topology.node(c) for c in self.topology.clients]
        self._receivers = {c: self.topology.receivers(c) for c in self.topology.clients}
        self._allowed = {c: frozenset((c,) + self.topology.neighbors_of(c))
                         for c in self.topology.controllers}
        self._broadcast()

    # -- bookkeeping ---------------------------------------------------------

    @property
    def done(self) -> bool:
        return self.time >= self.config.horizon

    def queue_length(self, node_id: int) -> int:
        return len(self.nodes[node_id].queue)

    def resident_count(self) -> int:
        """Tasks currently inside the system, counted container by container."""
        n = sum(len(ns.queue) + (ns.current_task is not None) for ns in self.nodes.values())
        n += sum(len(q) for q in self.staging.values())
        return n + len(self.in_transit)

    def signature(self) -> tuple:
        """Hashable summary of the full state, for determinism checks."""
        return (
            self.time,
            self.next_task_id,
            tuple((i, tuple(t.id for t in ns.queue),
                   None if ns.current_task is None else (ns.current_task.id,
                                                         ns.current_task.remaining_cycles))
                  for i, ns in sorted(self.nodes.items())),
            tuple((c, tuple(t.id for t in q)) for c, q in sorted(self.staging.items())),
            tuple((e.task.id, e.src, e.dst, e.arrive_at, e.kind) for e in self.in_transit),
            repr(self.rng.bit_generator.state),
        )

    def stage(self, task: TaskInstance, controller: int) -> None:
        """Admit a new task into ``controller``'s staging buffer and count it as generated."""
        if task.id in self.resident:
            raise ValueError(f"task {task.id} is already in the system")
        self.staging[controller].append(task)
        self.resident[task.id] = task
        heapq.heappush(self._deadlines, (task.created_at + task.delta, task.id))
        self._place(task, "staging", controller)
        self.metrics.generated += 1
        self.next_task_id = max(self.next_task_id, task.id + 1)

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _place(self, task: TaskInstance, kind: str, where: object) -> None:
        self._where[task.id] = (kind, where)

    def _retire(self, task: TaskInstance, outcome: str, out: StepOutcome | None) -> TerminalRecord:
        finished = self.time + 1
        del self.resident[task.id]
        del self._where[task.id]
        m = self.metrics
        resp = None
        if outcome == COMPLETED:
            resp = finished - task.created_at
            m.completed += 1
            m.response_times.append(resp)
        elif outcome == DROPPED_OVERFLOW:
            m.dropped_overflow += 1
        else:
            m.dropped_deadline += 1
        rec = TerminalRecord(task.id, outcome, finished, resp, task.origin_client)
        if out is not None:
            out.terminal.append(rec)
        return rec

    def _enqueue(self, task: TaskInstance, node_id: int, out: StepOutcome | None) -> bool:
        ns = self.nodes[node_id]
        if len(ns.queue) >= self._capacity[node_id]:
            self.metrics.overloads_by_node[node_id] += 1
            if out is not None:
                out.overloads.append(node_id)
            self._retire(task, DROPPED_OVERFLOW, out)
            return False
        ns.queue.append(task)
        self._place(task, "queue", node_id)
        return True

    def _send(self, task: TaskInstance, src: int, dst: int, payload: float, start: float,
              kind: str, hop: int = 0) -> TransferEvent:
        ev = TransferEvent(task, src, dst, payload, start + self.links.time(src, dst, payload),
                           kind, self._next_seq(), hop)
        self._place(task, "transit", ev)
        return ev

    def _broadcast(self) -> None:
        report = {j: (len(ns.queue), self._capacity[j], self._rate[j])
                  for j, ns in self.nodes.items()}
        for i, ns in self.nodes.items():
            ns.last_broadcast.update((j, report[j]) for j in self._neighbors[i])


def init(config: SimConfig, strict: bool = True) -> SimState:
    """Fresh episode state; raises ConfigError when ``config`` is invalid."""
    return SimState(config, strict=strict)


def apply_offload(state: SimState, agent: int, target: int,
                  out: StepOutcome | None = None) -> ActedTask | None:
    """Send the head of ``agent``'s staging buffer to ``target``.

    Local targets enqueue immediately (or drop on a full queue); remote targets
    start an offload transfer of ``alpha_in`` bits. Returns None when nothing
    was staged.
    """
    allowed = state._allowed.get(agent)
    if allowed is None:
        raise IllegalAction(f"illegal action: node {agent} has no controller")
    if target not in allowed:
        if state.strict:
            raise IllegalAction(f"illegal action: agent {agent} cannot offload to {target}")
        target = agent
    staged = state.staging[agent]
    if not staged:
        return None
    task = staged.popleft()
    if target == agent:
        state._enqueue(task, agent, out)
    else:
        task.offload_chain.append(target)
        state.in_transit.append(
            state._send(task, agent, target, task.alpha_in, float(state.time), OFFLOAD))
    return ActedTask(agent, target, task)


def _deliver(state: SimState, out: StepOutcome) -> None:
    end = state.time + 1
    due, pending = [], []
    for e in state.in_transit:
        (due if e.arrive_at <= end else pending).append(e)
    if not due:
        return
    state.in_transit = pending
    heap = [(e.arrive_at, e.seq, e) for e in due]
    heapq.heapify(heap)
    while heap:
        _, _, ev = heapq.heappop(heap)
        task = ev.task
        if ev.kind == OFFLOAD:
            state._enqueue(task, ev.dst, out)
            continue
        if ev.hop == 0:
            state._retire(task, COMPLETED, out)
            continue
        chain = task.offload_chain
        nxt = state._send(task, chain[ev.hop], chain[ev.hop - 1], task.alpha_out, ev.arrive_at,
                          RESULT_RETURN, ev.hop - 1)
        if nxt.arrive_at <= end:
            heapq.heappush(heap, (nxt.arrive_at, nxt.seq, nxt))
        else:
            state.in_transit.append(nxt)


def _finish(state: SimState, task: TaskInstance, out: StepOutcome) -> None:
    chain = task.offload_chain
    if len(chain) == 1:
        state._retire(task, COMPLETED, out)
        return
    hop = len(chain) - 2
    state.in_transit.append(state._send(task, chain[-1], chain[hop], task.alpha_out,
                                        float(state.time + 1), RESULT_RETURN, hop))


def _process(state: SimState, out: StepOutcome) -> None:
    for node_id, ns in state.nodes.items():
        if ns.current_task is None and not ns.queue:
            continue
        budget = state._rate[node_id]
        while budget > 0:
            cur = ns.current_task
            if cur is None:
                if not ns.queue:
                    break
                cur = ns.queue.popleft()
                ns.current_task = cur
                state._place(cur, "current", node_id)
            need = cur.remaining_cycles
            if budget >= need:
                budget -= need
                cur.cycles_done += need
                cur.remaining_cycles = 0.0
                ns.current_task = None
                _finish(state, cur, out)
            else:
                cur.remaining_cycles = need - budget
                cur.cycles_done += budget
                budget = 0


def _enforce_deadlines(state: SimState, out: StepOutcome) -> None:
    now = state.time + 1
    heap = state._deadlines
    expired = []
    while heap and heap[0][0] < now:
        _, tid = heapq.heappop(heap)
        task = state.resident.get(tid)
        if task is not None:
            expired.append(task)
    for task in expired:
        kind, where = state._where[task.id]
        if kind == "staging":
            state.staging[where].remove(task)
        elif kind == "queue":
            state.nodes[where].queue.remove(task)
        elif kind == "current":
            state.nodes[where].current_task = None
        else:
            state.in_transit.remove(where)
        state._retire(task, DROPPED_DEADLINE, out)


def _arrivals(state: SimState) -> None:
    cfg = state.config
    if cfg.lam == 0:
        return
    for client in state._clients:
        tasks = sample_arrivals(client, cfg.lam, state.rng, cfg.tasks, state.time,
                                state.next_task_id)
        if not tasks:
            continue
        state.next_task_id += len(tasks)
        receivers = state._receivers[client.id]
        for task in tasks:
            recv = receivers[0] if len(receivers) == 1 else \
                receivers[int(state.rng.integers(len(receivers)))]
            if recv != client.id:
                task.offload_chain.append(recv)
            state.stage(task, recv)


def advance_step(state: SimState, joint_action: dict[int, int]) -> StepOutcome:
    """Execute one step; ``joint_action`` maps every controller to a target node id."""
    if state.done:
        raise EpisodeFinished("episode finished")
    keys = set(joint_action)
    expected = state._allowed.keys()
    if keys != expected:
        missing = sorted(expected - keys)
        if missing:
            raise ValueError(f"incomplete joint action: missing agents {missing}")
        raise ValueError(f"unknown agents in joint action: {sorted(keys - expected)}")
    for agent in sorted(joint_action):
        target = joint_action[agent]
        if target not in state._allowed[agent] and state.strict:
            raise IllegalAction(f"illegal action: agent {agent} cannot offload to {target}")
    out = StepOutcome(time=state.time)
    for agent in sorted(joint_action):
        out.acted[agent] = apply_offload(state, agent, joint_action[agent], out)
    _deliver(state, out)
    _process(state, out)
    _enforce_deadlines(state, out)
    _arrivals(state)
    state.time += 1
    state.metrics.steps = state.time
    state.metrics.resident_at_end = len(state.resident)
    state._broadcast()
    return out
