import numpy as np
import pytest
from hypothesis import given, strategies as st

from offloadsim.env import BLOCK, observation_width
from offloadsim.policies import (LEAST_QUEUE, LOCAL, RANDOM, QLearnerParams, QTable,
                                 TabularQPolicy, baseline_action, discretize, epsilon_greedy,
                                 make_policy, q_update)


def obs_with_queues(queues, max_neighbors=3, staged=True, capacity=10):
    v = np.full(observation_width(max_neighbors), -1.0)
    for k, q in enumerate(queues):
        v[k * BLOCK:(k + 1) * BLOCK] = (k, 0, q, capacity, 4e7, 0, 0, 2e6, 20)
    v[-1] = 1.0 if staged else 0.0
    mask = np.zeros(1 + max_neighbors, dtype=bool)
    mask[: len(queues)] = True
    return v, mask


def test_local_always_zero():
    v, m = obs_with_queues([9, 0, 0, 0])
    assert make_policy(LOCAL, 4).act(v, m) == 0


def test_least_queue_first_minimum():
    v, m = obs_with_queues([5, 2, 2, 7])
    assert baseline_action(LEAST_QUEUE, v, m) == 1


def test_least_queue_keeps_self_on_tie():
    v, m = obs_with_queues([2, 2, 3])
    assert baseline_action(LEAST_QUEUE, v, m) == 0


def test_least_queue_skips_padding():
    v, m = obs_with_queues([5, 4])
    assert baseline_action(LEAST_QUEUE, v, m) == 1


@pytest.mark.parametrize("kind", [LOCAL, RANDOM, LEAST_QUEUE])
def test_nothing_staged_means_local(kind):
    v, m = obs_with_queues([5, 0, 0, 0], staged=False)
    assert make_policy(kind, 4, seed=0).act(v, m) == 0


def test_random_is_uniform_over_legal():
    v, m = obs_with_queues([1, 1, 1, 1])
    p = make_policy(RANDOM, 4, seed=123)
    counts = np.bincount([p.act(v, m) for _ in range(10_000)], minlength=4) / 10_000
    assert np.all(np.abs(counts - 0.25) <= 0.02)


def test_random_never_picks_masked():
    v, m = obs_with_queues([1, 1], max_neighbors=5)
    p = make_policy(RANDOM, 6, seed=1)
    assert {p.act(v, m) for _ in range(500)} == {0, 1}


def test_one_step_average():
    t = QTable(2)
    q_update(t, (0,), 0, 2.0, (1,), QLearnerParams(alpha=0.5, gamma=0.0))
    assert t[(0,), 0] == 1.0


@given(st.floats(0.01, 1), st.floats(-100, 100))
def test_zero_reward_shrinks(alpha, start):
    t = QTable(2)
    t[(0,), 1] = start
    q_update(t, (0,), 1, 0.0, None, QLearnerParams(alpha=alpha, gamma=0.0))
    assert t[(0,), 1] == pytest.approx((1 - alpha) * start)


def test_bootstrap_uses_legal_max():
    t = QTable(3)
    t[(1,), 2] = 100.0
    t[(1,), 1] = 4.0
    params = QLearnerParams(alpha=1.0, gamma=0.5)
    q_update(t, (0,), 0, 1.0, (1,), params, next_mask=np.array([True, True, False]))
    assert t[(0,), 0] == 3.0


def test_non_finite_reward_rejected():
    with pytest.raises(ValueError):
        q_update(QTable(2), (0,), 0, float("nan"), None, QLearnerParams())


def test_greedy_picks_dominant_entry():
    t = QTable(4)
    t[(0,), 2] = 5.0
    rng = np.random.default_rng(0)
    mask = np.ones(4, dtype=bool)
    assert {epsilon_greedy(t, (0,), mask, 0.0, rng) for _ in range(100)} == {2}


def test_greedy_tie_breaks_low():
    assert epsilon_greedy(QTable(4), (0,), np.ones(4, bool), 0.0, np.random.default_rng(0)) == 0


def test_full_exploration_matches_random():
    v, m = obs_with_queues([1, 1, 1, 1])
    t = QTable(4)
    t[(0,), 3] = 1e9
    rng = np.random.default_rng(9)
    counts = np.bincount([epsilon_greedy(t, (0,), m, 1.0, rng) for _ in range(10_000)],
                         minlength=4) / 10_000
    assert np.all(np.abs(counts - 0.25) <= 0.02)


def test_epsilon_schedule():
    p = QLearnerParams(eps_start=1.0, eps_end=0.05, eps_decay=0.5)
    assert [p.epsilon(k) for k in range(6)] == [1.0, 0.5, 0.25, 0.125, 0.0625, 0.05]


def test_discretize_buckets_occupancy_and_staging():
    v, m = obs_with_queues([0, 5, 10], max_neighbors=4)
    assert discretize(v, m, 4) == (0, 2, 3, -1, -1, 1)


keys = st.tuples(st.integers(-1, 3), st.integers(-1, 3), st.integers(0, 1))


@given(st.dictionaries(st.tuples(keys, st.integers(0, 2)),
                       st.floats(allow_nan=False, allow_infinity=False), max_size=20))
def test_table_text_roundtrip(entries):
    t = QTable(3)
    for (k, a), v in entries.items():
        t[k, a] = v
    assert QTable.from_text(t.to_text(), 3) == t


def test_table_load_reports_bad_line(tmp_path):
    f = tmp_path / "q.csv"
    f.write_text("state_key,action,value\n0|1,zero,1.0\n")
    with pytest.raises(ValueError, match="line 2"):
        QTable.load(f, 2)


def test_frozen_policy_does_not_learn():
    v, m = obs_with_queues([1, 1])
    p = TabularQPolicy(4, QLearnerParams(), seed=0)
    p.evaluate()
    p.learn(v, 0, 5.0, v, m)
    assert len(p.table) == 0
