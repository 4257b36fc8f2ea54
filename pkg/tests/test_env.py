import numpy as np
import pytest

from offloadsim import default_config
from offloadsim.engine import EpisodeFinished
from offloadsim.env import BLOCK, OffloadEnv, observation_width

from _support import cluster_config, pair_config, tiny_config


def test_default_width_is_100():
    env = OffloadEnv(default_config())
    assert env.observation_width == observation_width(10) == 100
    obs = env.reset()
    assert all(o.vector.shape == (100,) for o in obs.values())


def test_one_observation_per_controller():
    cfg = default_config()
    obs = OffloadEnv(cfg).reset()
    assert len(obs) == sum(n.has_controller for n in cfg.topology.nodes)


def test_resets_with_same_seed_match():
    env = OffloadEnv(cluster_config(lam=1.0))
    a = env.reset(5)
    for _ in range(10):
        env.step({k: 0 for k in env.agents})
    b = env.reset(5)
    assert all(np.array_equal(a[k].vector, b[k].vector) for k in a)


def test_padding_masks_missing_neighbors():
    env = OffloadEnv(tiny_config(max_neighbors=5))
    obs = env.reset()
    o = obs[0]
    assert o.action_mask.tolist() == [True, True, True, False, False, False]
    assert o.padded.sum() == 3
    assert np.all(o.vector[3 * BLOCK:-1] == -1)


def test_max_neighbors_five_with_three_neighbors():
    nodes = [dict(id=i, frequency=4e7, queue_capacity=5, client=(i == 0), x=i, y=0)
             for i in range(4)]
    links = [dict(a=0, b=j) for j in (1, 2, 3)]
    cfg = pair_config(**{"topology.nodes": nodes, "topology.links": links, "max_neighbors": 5})
    obs = OffloadEnv(cfg).reset()
    assert int((~obs[0].action_mask).sum()) == 2


def test_noop_step_rewards_zero():
    env = OffloadEnv(pair_config())
    env.reset()
    _, rewards, done, info = env.step({0: 0, 1: 0})
    assert rewards == {0: 0.0, 1: 0.0}
    assert env.state.time == 1 and not done and info["acted"] == {}


def test_done_then_error():
    env = OffloadEnv(pair_config(horizon=2))
    env.reset()
    env.step({0: 0, 1: 0})
    _, _, done, _ = env.step({0: 0, 1: 0})
    assert done
    with pytest.raises(EpisodeFinished):
        env.step({0: 0, 1: 0})


def test_neighbor_queue_is_one_step_stale():
    from offloadsim.domain import TaskInstance

    env = OffloadEnv(pair_config())
    env.reset()
    for k in range(3):
        env.state.stage(TaskInstance(id=k, rho=1e9, alpha_in=1, alpha_out=1, xi=1, delta=100,
                                     origin_client=1, created_at=0), 1)
    for _ in range(2):
        obs, *_ = env.step({0: 0, 1: 0})
    # two tasks admitted, one in service: queue holds one, refreshed at end of step
    assert obs[0].vector[BLOCK + 2] == 1
    env.state.nodes[1].queue.append(env.state.staging[1].popleft())
    now = env.observe()
    assert now[1].vector[2] == 2  # own queue is live
    assert now[0].vector[BLOCK + 2] == 1  # neighbour view waits for the broadcast


def test_identical_neighbourhoods_share_layout():
    env = OffloadEnv(default_config())
    obs = env.reset()
    a, b = obs[1].vector, obs[2].vector
    assert np.array_equal(obs[1].action_mask, obs[2].action_mask)
    fields = [1, 3, 4, 8]  # tier, capacity, rate, power
    for f in fields:
        assert np.array_equal(a[f::BLOCK][:5], b[f::BLOCK][:5])


def test_illegal_index_rejected():
    from offloadsim.engine import IllegalAction

    env = OffloadEnv(tiny_config())
    env.reset()
    with pytest.raises(IllegalAction):
        env.step({0: 3, 1: 0, 2: 0})
    with pytest.raises(IllegalAction):
        env.step({0: 1.0, 1: 0, 2: 0})
