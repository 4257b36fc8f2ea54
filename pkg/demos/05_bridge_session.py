# %% [markdown]
# # Driving the simulator over TCP
# An external agent speaks newline-delimited JSON to the bridge.

# %%
from offloadsim import default_config
from offloadsim.bridge import BridgeClient, BridgeServer
from offloadsim.runner import run_episode

cfg = default_config(**{"topology.mode": "clusters", "max_neighbors": "auto", "horizon": 100})
server = BridgeServer(cfg)
server.start_background()

# %%
with BridgeClient(port=server.port) as client:
    hello = client.hello()
    print(hello)
    client.reset()
    while True:
        reward, last = client.act({a: 0 for a in hello["agents"]})
        if last["type"] == "done":
            break
    print(client.act({0: 0}))  # every agent must act; the bridge says which are missing

# %%
print(last["metrics"] == run_episode(cfg, "local").to_dict())
server.shutdown()
