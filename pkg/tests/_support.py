"""Shared builders for the test suite."""
from offloadsim import default_config

TINY_NODES = [
    dict(id=0, tier=0, frequency=4e7, queue_capacity=10, client=True, x=0, y=0),
    dict(id=1, tier=1, frequency=8e7, queue_capacity=20, x=10, y=0),
    dict(id=2, tier=1, frequency=2e7, queue_capacity=10, x=0, y=10),
]
TINY_LINKS = [dict(a=0, b=1), dict(a=0, b=2), dict(a=1, b=2)]


def tiny_config(**overrides):
    """Three fully linked nodes, one client, 1 MB payloads."""
    settings = {
        "topology.mode": "inline", "topology.nodes": TINY_NODES, "topology.links": TINY_LINKS,
        "max_neighbors": 2, "horizon": 200, "lambda": 0.3, "seed": 11,
        "task.alpha_in_mb": 1, "task.alpha_out_mb": 1,
    }
    settings.update(overrides)
    return default_config(**settings)


def pair_config(**overrides):
    """Client 0 linked to worker 1, constant -30 dB gain, nothing arrives by default."""
    nodes = [
        dict(id=0, tier=0, frequency=4e7, queue_capacity=20, client=True, x=0, y=0),
        dict(id=1, tier=1, frequency=4e7, queue_capacity=20, x=1, y=0),
    ]
    settings = {
        "topology.mode": "inline", "topology.nodes": nodes, "topology.links": [dict(a=0, b=1)],
        "max_neighbors": 1, "horizon": 50, "lambda": 0.0,
        "channel.gain_model": "constant", "channel.gain_ref_db": -30.0,
    }
    settings.update(overrides)
    return default_config(**settings)


def cluster_config(**overrides):
    settings = {"topology.mode": "clusters", "max_neighbors": "auto"}
    settings.update(overrides)
    return default_config(**settings)
