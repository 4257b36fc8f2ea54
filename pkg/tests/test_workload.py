import json

import numpy as np
import pytest

from offloadsim import ConfigError
from offloadsim.domain import NodeSpec, TaskSource, TaskTemplate
from offloadsim.workload import load_trace, sample_arrivals, write_trace_fixture

CLIENT = NodeSpec(id=0, tier=0, num_cores=1, frequency=4e7, queue_capacity=10, is_client=True)


def test_lambda_zero_never_arrives():
    rng = np.random.default_rng(0)
    assert all(sample_arrivals(CLIENT, 0.0, rng) == [] for _ in range(1000))


def test_arrival_mean_matches_rate():
    rng = np.random.default_rng(17)
    n = 100_000
    total = sum(len(sample_arrivals(CLIENT, 0.17, rng)) for _ in range(n))
    assert abs(total / n - 0.17) <= 3 * np.sqrt(0.17 / n)


def test_constant_template_fields():
    rng = np.random.default_rng(1)
    tasks = [t for _ in range(200) for t in sample_arrivals(CLIENT, 1.0, rng, time=4)]
    assert tasks
    assert all((t.rho, t.xi, t.delta, t.created_at) == (8e7, 1.0, 100, 4) for t in tasks)


def test_ranges_stay_in_bounds():
    src = TaskSource((TaskTemplate(rho=(1e7, 2e7), delta=(5, 6)),))
    rng = np.random.default_rng(2)
    tasks = [t for _ in range(300) for t in sample_arrivals(CLIENT, 1.0, rng, src)]
    assert all(1e7 <= t.rho <= 2e7 and t.delta in (5, 6) for t in tasks)
    assert {t.delta for t in tasks} == {5, 6}


def write_jobs(path, jobs):
    path.write_text("".join(json.dumps(j) + "\n" for j in jobs))


def test_trace_instruction_count(tmp_path):
    f = tmp_path / "t.jsonl"
    write_jobs(f, [{"job_id": "a", "tasks": [{"cores": 2, "duration": 4, "mem": 1e8}]}])
    (tpl,) = load_trace(f, reference_frequency=1e7)
    assert tpl.rho == 8e7
    assert tpl.alpha_in == tpl.alpha_out == 1e8


def test_trace_uses_peak_memory(tmp_path):
    f = tmp_path / "t.jsonl"
    write_jobs(f, [{"tasks": [{"cores": 1, "duration": 1, "mem": m * 1e7} for m in (1, 5, 3)]}])
    assert load_trace(f)[0].alpha_in == 5e7


def test_empty_trace(tmp_path):
    f = tmp_path / "t.jsonl"
    f.write_text("\n")
    with pytest.raises(ConfigError, match="empty job list"):
        load_trace(f)


def test_malformed_trace_line(tmp_path):
    f = tmp_path / "t.jsonl"
    f.write_text('{"tasks": [{"cores": 1, "duration": 1, "mem": 1}]}\nnot json\n')
    with pytest.raises(ConfigError, match="line 2: malformed record"):
        load_trace(f)


def test_fixture_loads(tmp_path):
    f = tmp_path / "fixture.jsonl"
    write_trace_fixture(f, n_jobs=7, seed=3)
    assert len(load_trace(f)) == 7
