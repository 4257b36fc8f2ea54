# %% [markdown]
# # One episode, step by step
# Build the default three-tier network, drive it with the least-queue
# heuristic and watch tasks flow through.

# %%
from offloadsim import OffloadEnv, default_config
from offloadsim.policies import LeastQueuePolicy

cfg = default_config(seed=7, lam=0.3, horizon=200)
env = OffloadEnv(cfg)
obs = env.reset()
print(len(env.agents), "agents, observation width", env.observation_width)

# %%
policy = LeastQueuePolicy()
done = False
while not done:
    actions = {a: policy.act(o.vector, o.action_mask) for a, o in obs.items()}
    obs, rewards, done, info = env.step(actions)
    if info["time"] % 50 == 0:
        m = env.metrics
        print(f"t={info['time']:4d} generated={m.generated:4d} completed={m.completed:4d} "
              f"resident={env.state.resident_count():3d} dropped={m.dropped}")

# %%
m = env.metrics
print("mean response", m.mean_response, "overloads", m.overload_events)
m.check_conservation()

# %%
# The reward of the last decision, term by term
for agent, bd in list(info["breakdowns"].items())[:3]:
    print(agent, {k: round(v, 4) for k, v in bd.__dict__.items()})
