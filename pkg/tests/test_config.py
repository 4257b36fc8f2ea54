import pytest

from offloadsim import ConfigError, default_config, parse_config, serialize_config
from offloadsim.config import with_overrides


def test_seed_only_file_gets_defaults(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("seed: 7\n")
    cfg = parse_config(f)
    assert cfg.seed == 7
    tpl = cfg.tasks.templates[0]
    assert (tpl.rho, tpl.alpha_in, tpl.xi, tpl.delta) == (8e7, 1.2e9, 1.0, 100)
    assert cfg.lam == 0.17 and cfg.horizon == 1000 and len(cfg.topology.nodes) == 30
    assert (cfg.reward.r_u, cfg.reward.chi_o) == (2.0, 150.0)


def test_misspelt_key(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("lamda: 0.2\n")
    with pytest.raises(ConfigError, match="unknown key: lamda"):
        parse_config(f)


def test_nested_unknown_key():
    with pytest.raises(ConfigError, match="unknown key: reward.chi_x"):
        default_config(**{"reward.chi_x": 1})


def test_parse_error_has_position(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("seed: [1,\n")
    with pytest.raises(ConfigError, match="line"):
        parse_config(f)


def test_invalid_values_listed(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("horizon: 0\nmax_neighbors: 1\n")
    with pytest.raises(ConfigError) as e:
        parse_config(f)
    assert len(e.value.violations) == 2


def test_numeric_strings_coerced():
    assert default_config(**{"task.rho": "8e7"}).tasks.templates[0].rho == 8e7


def test_roundtrip(tmp_path):
    cfg = default_config(seed=3, lam=0.4, **{"topology.mode": "clusters",
                                             "topology.n_clusters": 2, "max_neighbors": "auto"})
    f = tmp_path / "c.yaml"
    f.write_text(serialize_config(cfg))
    again = parse_config(f)
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


def test_overrides_do_not_mutate():
    base = default_config()
    other = with_overrides(base, {"lambda": 0.5})
    assert base.lam == 0.17 and other.lam == 0.5


def test_trace_source(tmp_path):
    from offloadsim.workload import write_trace_fixture

    write_trace_fixture(tmp_path / "jobs.jsonl", n_jobs=5)
    f = tmp_path / "c.yaml"
    f.write_text("task:\n  source: trace\n  trace_path: jobs.jsonl\n")
    cfg = parse_config(f)
    assert len(cfg.tasks.templates) == 5
