"""Seedable discrete-time simulator of edge networks for multi-agent task offloading."""
from .comm import channel_gain, transmission_time
from .config import build_config, default_config, parse_config, serialize_config, with_overrides
from .domain import (
    ConfigError, GainModel, NodeSpec, RewardWeights, SimConfig, TaskInstance, TaskSource,
    TaskTemplate, Topology, validate_config,
)
from .engine import EpisodeFinished, IllegalAction, advance_step, apply_offload, init
from .env import Observation, OffloadEnv
from .metrics import EpisodeMetrics, summarize
from .policies import QLearnerParams, QTable, make_policy
from .runner import SweepSpec, run_episode, run_sweep, sweep_csv, train_q
from .topology import ClusterPlan, generate_cluster_topology, tiered_topology
from .workload import load_trace, sample_arrivals

__version__ = "0.1.0"
