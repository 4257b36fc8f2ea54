"""Episode loop, parameter sweeps and Q-learner training."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .config import with_overrides
from .domain import SimConfig
from .env import OffloadEnv
from .metrics import EpisodeMetrics, csv_row, render_csv, summarize
from .policies import TABULAR_Q, QLearnerParams, QTable, TabularQPolicy, make_policy
from .reward import Potential


def make_policies(config: SimConfig, kind: str, params: QLearnerParams | None = None) -> dict:
    """One policy per controller; stochastic ones are seeded from (config.seed, agent)."""
    n_actions = 1 + config.max_neighbors
    return {a: make_policy(kind, n_actions, seed=[config.seed, a], params=params)
            for a in config.topology.controllers}


def run_episode(config: SimConfig, policies: str | Mapping[int, object],
                potential: Potential | None = None,
                on_step: Callable[[OffloadEnv, dict], None] | None = None) -> EpisodeMetrics:
    """Play one full episode; learners with a ``learn`` method are updated online."""
    if isinstance(policies, str):
        policies = make_policies(config, policies)
    env = OffloadEnv(config, potential=potential)
    obs = env.reset()
    missing = set(env.agents) - set(policies)
    if missing:
        raise ValueError(f"no policy for agents {sorted(missing)}")
    learners = {a: p for a, p in policies.items() if getattr(p, "learn", None) is not None}
    done = False
    while not done:
        actions = {a: policies[a].act(obs[a].vector, obs[a].action_mask) for a in env.agents}
        next_obs, rewards, done, info = env.step(actions)
        for a, p in learners.items():
            if a in info["acted"]:
                p.learn(obs[a].vector, actions[a], rewards[a], next_obs[a].vector,
                        obs[a].action_mask, done)
        if on_step is not None:
            on_step(env, info)
        obs = next_obs
    return env.metrics


def evaluate(config: SimConfig, policies_factory: Callable[[SimConfig], Mapping[int, object]] | str,
             episodes: int, base_seed: int | None = None,
             potential: Potential | None = None) -> list[EpisodeMetrics]:
    """Run ``episodes`` episodes on the seed ladder ``base_seed + k``."""
    base = config.seed if base_seed is None else base_seed
    out = []
    for k in range(episodes):
        cfg = with_overrides(config, {"seed": base + k})
        pol = make_policies(cfg, policies_factory) if isinstance(policies_factory, str) \
            else policies_factory(cfg)
        out.append(run_episode(cfg, pol, potential))
    return out


# -- Q-learning ----------------------------------------------------------------

@dataclass
class TrainResult:
    policies: dict[int, TabularQPolicy]
    curve: list[dict] = field(default_factory=list)

    @property
    def tables(self) -> dict[int, QTable]:
        return {a: p.table for a, p in self.policies.items()}

    def curve_csv(self) -> str:
        header = ("episode", "epsilon", "total_reward", "mean_reward", "decisions")
        rows = [[str(r["episode"]), f"{r['epsilon']:.6g}", f"{r['total_reward']:.6g}",
                 f"{r['mean_reward']:.6g}", str(r["decisions"])] for r in self.curve]
        return render_csv(rows, header)

    def frozen(self) -> Callable[[SimConfig], dict[int, TabularQPolicy]]:
        """Factory producing evaluation copies (no learning, final epsilon)."""
        def factory(cfg: SimConfig) -> dict[int, TabularQPolicy]:
            pols = {}
            for a, p in self.policies.items():
                q = TabularQPolicy(p.table.n_actions, p.params, seed=[cfg.seed, a],
                                   table=p.table)
                q.evaluate()
                pols[a] = q
            return pols
        return factory


def train_q(config: SimConfig, episodes: int, params: QLearnerParams = QLearnerParams(),
            potential: Potential | None = None) -> TrainResult:
    """Independent tabular learners, one per agent, trained on seeds ``config.seed + k``."""
    if episodes < 1:
        raise ValueError("train_q needs at least one training episode")
    n_actions = 1 + config.max_neighbors
    policies = {a: TabularQPolicy(n_actions, params, seed=[config.seed, a, 1])
                for a in config.topology.controllers}
    result = TrainResult(policies)
    for k in range(episodes):
        for p in policies.values():
            p.start_episode(k)
        cfg = with_overrides(config, {"seed": config.seed + k})
        decisions = 0

        def count(env, info):
            nonlocal decisions
            decisions += len(info["acted"])

        m = run_episode(cfg, policies, potential, on_step=count)
        total = m.total_reward
        result.curve.append({
            "episode": k,
            "epsilon": policies[next(iter(policies))].epsilon if policies else 0.0,
            "total_reward": total,
            "mean_reward": total / decisions if decisions else 0.0,
            "decisions": decisions,
        })
    return result


# -- sweeps --------------------------------------------------------------------

AXES = ("lambda", "clusters")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: Sequence[float]
    policies: Sequence[str]
    episodes: int
    base_config: SimConfig
    base_seed: int | None = None
    scenario: str | None = None
    train_episodes: int = 300
    q_params: QLearnerParams = QLearnerParams()

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        if not self.values:
            raise ValueError("sweep needs at least one axis value")
        if not self.policies:
            raise ValueError("sweep needs at least one policy")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")

    @property
    def seed(self) -> int:
        return self.base_config.seed if self.base_seed is None else self.base_seed


def _cell_config(spec: SweepSpec, value) -> SimConfig:
    if spec.axis == "lambda":
        return with_overrides(spec.base_config, {"lambda": float(value)})
    return with_overrides(spec.base_config, {"topology.mode": "clusters",
                                             "topology.n_clusters": int(value)})


def _run_cell(spec: SweepSpec, value, policy: str) -> list[str]:
    try:
        cfg = _cell_config(spec, value)
        if policy == TABULAR_Q:
            trained = train_q(with_overrides(cfg, {"seed": spec.seed}), spec.train_episodes,
                              spec.q_params)
            batch = evaluate(cfg, trained.frozen(), spec.episodes, spec.seed)
        else:
            batch = evaluate(cfg, policy, spec.episodes, spec.seed)
        s = cfg.settings
        clusters = s["topology"]["n_clusters"] if s["topology"]["mode"] == "clusters" else None
        scenario = spec.scenario or f"{spec.axis}-sweep"
        return csv_row(summarize(batch), scenario, policy, cfg.lam, clusters, spec.seed)
    except Exception as e:
        raise RuntimeError(f"sweep cell {spec.axis}={value} policy={policy} failed: {e}") from e


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[list[str]]:
    """One CSV row per (axis value, policy), in that nesting order."""
    cells = [(v, p) for v in spec.values for p in spec.policies]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(_run_cell, [spec] * len(cells), *zip(*cells)))
    return [_run_cell(spec, v, p) for v, p in cells]


def sweep_csv(spec: SweepSpec, workers: int = 1) -> str:
    return render_csv(run_sweep(spec, workers))


def pooled_se(std_a: float, n_a: int, std_b: float, n_b: int) -> float:
    """Standard error of the difference between two sample means."""
    return math.sqrt(std_a ** 2 / n_a + std_b ** 2 / n_b)
