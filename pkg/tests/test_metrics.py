import math

import pytest
from hypothesis import given, strategies as st

from offloadsim.metrics import (CSV_HEADER, ConservationError, EpisodeMetrics, csv_row,
                                render_csv, summarize)
from offloadsim.runner import evaluate

from _support import cluster_config


def episode(resp=(3, 5), dropped=1, reward=-10.0):
    return EpisodeMetrics(generated=len(resp) + dropped, completed=len(resp),
                          dropped_overflow=dropped, overloads_by_node={0: dropped},
                          response_times=list(resp), rewards={0: reward})


def test_identical_episodes_have_zero_std():
    s = summarize([episode()] * 4)
    assert s["overloads_std"] == s["resp_std"] == s["dropped_std"] == 0


def test_mean_of_response_means():
    s = summarize([episode(resp=(4,)), episode(resp=(6,))])
    assert s["resp_mean"] == 5


def test_sample_std():
    s = summarize([episode(dropped=d) for d in (1, 2, 3)])
    assert s["dropped_std"] == 1.0


def test_conservation_checked():
    bad = episode()
    bad.generated += 1
    with pytest.raises(ConservationError, match="episode 0"):
        summarize([bad])


def test_response_absent_without_completions():
    m = EpisodeMetrics(generated=1, dropped_deadline=1)
    assert m.mean_response is None
    row = csv_row(summarize([m]), "x", "local", 0.1, None, 0)
    assert row[CSV_HEADER.index("resp_mean")] == ""
    assert row[CSV_HEADER.index("clusters")] == ""


def test_dict_roundtrip():
    m = episode()
    assert EpisodeMetrics.from_dict(m.to_dict()) == m


batches = st.lists(st.builds(episode, st.lists(st.integers(1, 50), min_size=1, max_size=5).map(tuple),
                             st.integers(0, 5), st.floats(-1e4, 1e4)), min_size=1, max_size=8)


@given(batches, st.randoms())
def test_summary_ignores_order(batch, rnd):
    shuffled = list(batch)
    rnd.shuffle(shuffled)
    assert summarize(batch) == summarize(shuffled)


@given(batches)
def test_merge_is_associative_on_counts(batch):
    left = batch[0]
    for m in batch[1:]:
        left = left.merge(m)
    right = batch[-1]
    for m in reversed(batch[:-1]):
        right = m.merge(right)
    assert left.generated == right.generated
    assert sorted(left.response_times) == sorted(right.response_times)
    assert math.isclose(left.total_reward, right.total_reward, abs_tol=1e-6)


def test_random_cluster_summary_row():
    batch = evaluate(cluster_config(), "random", 100)
    s = summarize(batch)
    row = csv_row(s, "cluster", "random", 0.17, 1, 0)
    assert all(v != "" for v in row)
    assert 0 <= s["drop_pct"] <= 1
    text = render_csv([row])
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
