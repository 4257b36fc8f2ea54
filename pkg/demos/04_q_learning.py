# %% [markdown]
# # Independent tabular Q-learners
# Three fully connected nodes: a client, a fast worker and a slow worker.

# %%
import statistics

from offloadsim import default_config, train_q
from offloadsim.metrics import summarize
from offloadsim.runner import evaluate

nodes = [
    dict(id=0, tier=0, frequency=4e7, queue_capacity=10, client=True, x=0, y=0),
    dict(id=1, tier=1, frequency=8e7, queue_capacity=20, x=10, y=0),
    dict(id=2, tier=1, frequency=2e7, queue_capacity=10, x=0, y=10),
]
links = [dict(a=0, b=1), dict(a=0, b=2), dict(a=1, b=2)]
cfg = default_config(**{"topology.mode": "inline", "topology.nodes": nodes,
                        "topology.links": links, "max_neighbors": 2, "horizon": 200,
                        "lambda": 0.3, "seed": 11, "task.alpha_in_mb": 1,
                        "task.alpha_out_mb": 1})

# %%
result = train_q(cfg, 150)
totals = [r["total_reward"] for r in result.curve]
for k in range(0, 150, 30):
    print(f"episodes {k:3d}-{k + 29:3d}: mean reward {statistics.mean(totals[k:k + 30]):9.1f}")

# %%
for name, pol in (("tabular_q", result.frozen()), ("random", "random"), ("local", "local")):
    s = summarize(evaluate(cfg, pol, 30, cfg.seed + 1000))
    print(f"{name:10s} reward {s['reward_mean']:9.1f}  response {s['resp_mean']:.2f}")

# %%
# What the client learned when it has a task and every queue is empty
table = result.tables[0]
print(table.row((0, 0, 0, 1)))
