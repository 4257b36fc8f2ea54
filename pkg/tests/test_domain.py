import pytest

from offloadsim import ConfigError, default_config, validate_config
from offloadsim.domain import NodeSpec, TaskInstance, TaskTemplate, mb_to_bits

from _support import pair_config


def test_defaults_are_valid():
    assert validate_config(default_config()) == []


def test_zero_capacity_worker_flagged():
    cfg = pair_config(**{"topology.nodes": [
        dict(id=0, frequency=4e7, queue_capacity=20, client=True),
        dict(id=1, frequency=4e7, queue_capacity=0, x=1),
    ]})
    assert any(v.startswith("zero-capacity worker") for v in validate_config(cfg))


def test_observation_width_too_small():
    cfg = default_config(max_neighbors=2)
    assert any(v.startswith("observation width too small") for v in validate_config(cfg))


def test_asymmetric_bandwidth_must_be_positive():
    cfg = pair_config(**{"topology.links": [dict(a=0, b=1, bandwidth_ba_hz=0)]})
    assert "link 1->0: bandwidth must be > 0" in validate_config(cfg)


def test_coincident_nodes_need_constant_gain():
    nodes = [dict(id=0, frequency=4e7, queue_capacity=5, client=True),
             dict(id=1, frequency=4e7, queue_capacity=5)]
    cfg = pair_config(**{"topology.nodes": nodes, "channel.gain_model": "free_space"})
    assert any("degenerate distance" in v for v in validate_config(cfg))


def test_config_error_lists_violations():
    err = ConfigError("invalid config", ["a", "b"])
    assert err.violations == ["a", "b"]
    assert "a" in str(err) and "b" in str(err)


def test_task_defaults():
    t = TaskInstance(id=0, rho=8e7, alpha_in=1.0, alpha_out=1.0, xi=1.0, delta=100,
                     origin_client=3, created_at=5)
    assert t.remaining_cycles == 8e7
    assert t.offload_chain == [3]
    assert t.holder == 3
    assert t.violations() == []


@pytest.mark.parametrize("field,value", [("rho", 0), ("xi", -1), ("delta", 0), ("alpha_in", -1)])
def test_task_violations(field, value):
    kw = dict(id=0, rho=8e7, alpha_in=1.0, alpha_out=1.0, xi=1.0, delta=100,
              origin_client=0, created_at=0)
    kw[field] = value
    assert TaskInstance(**kw).violations()


def test_node_rate_pools_cores():
    n = NodeSpec(id=0, tier=0, num_cores=2, frequency=4e7, queue_capacity=5)
    assert n.rate == 8e7


def test_template_ranges():
    t = TaskTemplate(rho=(1e7, 3e7), delta=(10, 20))
    assert not t.is_constant()
    assert TaskTemplate().is_constant()
    assert t.mean("rho") == 2e7
    assert mb_to_bits(150) == 1.2e9
