"""Decision makers: baselines and an epsilon-greedy tabular Q-learner.

A policy is anything with ``act(obs, mask) -> int``. Learners additionally
implement ``learn(obs, action, reward, next_obs, mask)`` and
``start_episode(index)``. Ties are broken toward the lowest index, and every
policy returns 0 when nothing is staged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .env import BLOCK, CAPACITY_FIELD, QUEUE_FIELD

LOCAL = "local"
RANDOM = "random"
LEAST_QUEUE = "least_queue"
TABULAR_Q = "tabular_q"
POLICY_KINDS = (LOCAL, RANDOM, LEAST_QUEUE, TABULAR_Q)


class Policy(Protocol):
    def act(self, obs: np.ndarray, mask: np.ndarray) -> int: ...


def _vec(obs) -> np.ndarray:
    return getattr(obs, "vector", obs)


def _staged(obs: np.ndarray) -> bool:
    return obs[-1] > 0


def _uniform(mask: np.ndarray, rng) -> int:
    legal = np.flatnonzero(mask)
    return int(legal[rng.integers(len(legal))])


def baseline_action(kind: str, obs, mask: np.ndarray, rng=None) -> int:
    obs = _vec(obs)
    if kind == LOCAL or not _staged(obs):
        return 0
    if kind == RANDOM:
        return _uniform(mask, rng)
    if kind == LEAST_QUEUE:
        queues = obs[QUEUE_FIELD:-1:BLOCK][: len(mask)]
        best, best_q = 0, math.inf
        for k in np.flatnonzero(mask):
            if queues[k] < best_q:
                best, best_q = int(k), queues[k]
        return best
    raise ValueError(f"unknown baseline {kind!r}")


class LocalPolicy:
    name = LOCAL

    def act(self, obs, mask) -> int:
        return 0


class RandomPolicy:
    name = RANDOM

    def __init__(self, seed=None):
        self.rng = np.random.default_rng(seed)

    def act(self, obs, mask) -> int:
        return baseline_action(RANDOM, obs, mask, self.rng)


class LeastQueuePolicy:
    name = LEAST_QUEUE

    def act(self, obs, mask) -> int:
        return baseline_action(LEAST_QUEUE, obs, mask)


# -- tabular Q-learning -------------------------------------------------------

@dataclass(frozen=True)
class QLearnerParams:
    alpha: float = 0.1
    gamma: float = 0.5
    eps_start: float = 1.0
    eps_end: float = 0.01
    eps_decay: float = 0.98
    buckets: int = 4

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not (0 <= self.eps_end <= 1 and 0 <= self.eps_start <= 1):
            raise ValueError("epsilon values must lie in [0, 1]")
        if self.buckets < 1:
            raise ValueError("buckets must be >= 1")

    def epsilon(self, episode: int) -> float:
        return max(self.eps_end, self.eps_start * self.eps_decay ** episode)


class QTable:
    """Sparse Q-values; unseen states read as all zeros."""

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self.values: dict[tuple, np.ndarray] = {}

    def row(self, key: tuple) -> np.ndarray:
        r = self.values.get(key)
        return r if r is not None else np.zeros(self.n_actions)

    def _row_for_update(self, key: tuple) -> np.ndarray:
        r = self.values.get(key)
        if r is None:
            r = self.values[key] = np.zeros(self.n_actions)
        return r

    def __getitem__(self, sa: tuple[tuple, int]) -> float:
        key, a = sa
        return float(self.row(key)[a])

    def __setitem__(self, sa: tuple[tuple, int], value: float) -> None:
        key, a = sa
        self._row_for_update(key)[a] = value

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QTable) or other.n_actions != self.n_actions:
            return NotImplemented
        return self.values.keys() == other.values.keys() and all(
            np.array_equal(v, other.values[k]) for k, v in self.values.items())

    def to_text(self) -> str:
        lines = ["state_key,action,value"]
        for key in sorted(self.values):
            skey = "|".join(str(x) for x in key)
            for a, v in enumerate(self.values[key]):
                lines.append(f"{skey},{a},{float(v)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n_actions: int) -> "QTable":
        table = cls(n_actions)
        for lineno, line in enumerate(text.splitlines(), start=1):
            if lineno == 1 and line.startswith("state_key"):
                continue
            if not line.strip():
                continue
            try:
                skey, a, v = line.rsplit(",", 2)
                key = tuple(int(x) for x in skey.split("|")) if skey else ()
                table[key, int(a)] = float(v)
            except ValueError as e:
                raise ValueError(f"line {lineno}: bad Q-table entry ({e})") from None
        return table

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path, n_actions: int) -> "QTable":
        return cls.from_text(Path(path).read_text(), n_actions)


def _greedy(row: np.ndarray, mask: np.ndarray | None) -> int:
    legal = np.flatnonzero(mask) if mask is not None else np.arange(len(row))
    # np.argmax returns the first maximum, i.e. the lowest legal index
    return int(legal[np.argmax(row[legal])])


def q_update(table: QTable, s_key: tuple, a: int, r: float, s2_key: tuple | None,
             params: QLearnerParams, next_mask: np.ndarray | None = None) -> QTable:
    """One Q-learning backup; ``s2_key=None`` marks a terminal transition."""
    if not math.isfinite(r):
        raise ValueError(f"non-finite reward {r!r}")
    future = 0.0
    if s2_key is not None and params.gamma > 0:
        row = table.row(s2_key)
        future = float(row[np.flatnonzero(next_mask)].max()) if next_mask is not None \
            else float(row.max())
    old = table[s_key, a]
    table[s_key, a] = (1 - params.alpha) * old + params.alpha * (r + params.gamma * future)
    return table


def epsilon_greedy(table: QTable, s_key: tuple, mask: np.ndarray, epsilon: float, rng) -> int:
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return _uniform(mask, rng)
    return _greedy(table.row(s_key), mask)


def discretize(obs, mask: np.ndarray, buckets: int) -> tuple:
    """Queue-occupancy ratio of each visible node, bucketed, plus the staging flag."""
    v = _vec(obs)
    key = []
    for k, legal in enumerate(mask):
        if not legal:
            key.append(-1)
            continue
        cap = v[k * BLOCK + CAPACITY_FIELD]
        occ = v[k * BLOCK + QUEUE_FIELD] / cap if cap > 0 else 1.0
        key.append(min(int(occ * buckets), buckets - 1))
    key.append(int(v[-1] > 0))
    return tuple(key)


class TabularQPolicy:
    name = TABULAR_Q

    def __init__(self, n_actions: int, params: QLearnerParams = QLearnerParams(), seed=None,
                 table: QTable | None = None):
        self.params = params
        self.table = table if table is not None else QTable(n_actions)
        self.rng = np.random.default_rng(seed)
        self.epsilon = params.eps_start
        self.training = True

    def start_episode(self, index: int) -> None:
        self.epsilon = self.params.epsilon(index)

    def evaluate(self) -> None:
        """Freeze learning and act with the final exploration rate."""
        self.training = False
        self.epsilon = self.params.eps_end

    def key(self, obs, mask) -> tuple:
        return discretize(obs, mask, self.params.buckets)

    def act(self, obs, mask) -> int:
        if not _staged(_vec(obs)):
            return 0
        return epsilon_greedy(self.table, self.key(obs, mask), mask, self.epsilon, self.rng)

    def learn(self, obs, action: int, reward: float, next_obs, mask, done: bool = False) -> None:
        if not self.training:
            return
        s2 = None if done else self.key(next_obs, mask)
        q_update(self.table, self.key(obs, mask), action, reward, s2, self.params, mask)


def make_policy(kind: str, n_actions: int, seed=None, params: QLearnerParams | None = None):
    if kind == LOCAL:
        return LocalPolicy()
    if kind == RANDOM:
        return RandomPolicy(seed)
    if kind == LEAST_QUEUE:
        return LeastQueuePolicy()
    if kind == TABULAR_Q:
        return TabularQPolicy(n_actions, params or QLearnerParams(), seed)
    raise ValueError(f"unknown policy {kind!r}; expected one of {POLICY_KINDS}")
