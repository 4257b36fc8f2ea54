# %% [markdown]
# # Arrival rate and network size sweeps
# Baselines on the urban-sensing cluster layout, one CSV row per cell.

# %%
from offloadsim import SweepSpec, default_config, sweep_csv

base = default_config(**{"topology.mode": "clusters", "max_neighbors": "auto", "horizon": 300})

# %%
spec = SweepSpec("lambda", [0.1, 0.5, 1.0], ["local", "random", "least_queue"], 5, base)
print(sweep_csv(spec))

# %%
# More clusters means more clients, and so more traffic
spec = SweepSpec("clusters", [1, 2, 3], ["random"], 5, base)
print(sweep_csv(spec))
