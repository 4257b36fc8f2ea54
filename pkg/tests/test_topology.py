import numpy as np
import pytest
from hypothesis import given, strategies as st

from offloadsim import ConfigError
from offloadsim.topology import (ClusterPlan, generate_cluster_topology, load_topology,
                                 save_topology, tiered_topology, topology_from_listing)


def test_single_cluster_has_twelve_nodes():
    plan = ClusterPlan()
    assert plan.node_count == 12
    assert len(generate_cluster_topology(plan).nodes) == 12


def test_server_is_shared_across_clusters():
    topo = generate_cluster_topology(ClusterPlan(n_clusters=2))
    assert len(topo.nodes) == 23
    assert sum(n.tier == 2 for n in topo.nodes) == 1


@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 4), st.booleans())
def test_cluster_construction_invariants(n, pairs, bases, server):
    plan = ClusterPlan(n_clusters=n, sbc_pairs_per_cluster=pairs, base_station_nodes=bases,
                       shared_server=server)
    topo = generate_cluster_topology(plan)
    assert len(topo.nodes) == plan.node_count
    tiers = {nd.id: nd.tier for nd in topo.nodes}
    for c in topo.clients:
        assert tiers[c] == 0
        assert any(tiers[j] == 1 for j in topo.neighbors_of(c))
    for i in topo.ids:
        for j in topo.neighbors_of(i):
            assert i in topo.neighbors_of(j)
            assert topo.link_bandwidth[(i, j)] > 0


def test_jitter_uses_rng_deterministically():
    plan = ClusterPlan(jitter_m=5.0)
    a = generate_cluster_topology(plan, np.random.default_rng(1))
    b = generate_cluster_topology(plan, np.random.default_rng(1))
    assert [n.position for n in a.nodes] == [n.position for n in b.nodes]
    assert a.nodes != generate_cluster_topology(plan, np.random.default_rng(2)).nodes
    with pytest.raises(ValueError):
        generate_cluster_topology(plan)


def test_tiered_defaults():
    topo = tiered_topology()
    assert len(topo.nodes) == 30
    assert len(topo.clients) == 10
    assert topo.max_degree <= 4


def test_listing_roundtrip(tmp_path):
    topo = generate_cluster_topology(ClusterPlan(n_clusters=2))
    save_topology(topo, tmp_path / "t.yaml")
    back = load_topology(tmp_path / "t.yaml")
    assert back.nodes == topo.nodes
    assert back.neighbors == topo.neighbors
    assert back.link_bandwidth == topo.link_bandwidth


def test_listing_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown key: speed"):
        topology_from_listing([dict(id=0, frequency=1e7, queue_capacity=1, speed=3)], [])
    with pytest.raises(ConfigError, match="unknown node id"):
        topology_from_listing([dict(id=0, frequency=1e7, queue_capacity=1)], [dict(a=0, b=7)])
