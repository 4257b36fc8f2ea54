# %% [markdown]
# # How long does a payload take to cross one link?
# Rates follow the Shannon capacity of a link, with powers and gains in dB.

# %%
import numpy as np

from offloadsim.comm import channel_gain, transmission_time
from offloadsim.domain import GainModel, mb_to_bits

# %%
# A 150 MB task over a 2 MHz link, 20 dBm transmitter, -90 dBm noise floor
model = GainModel.free_space(-30.0)
for d in (1, 10, 50, 100, 200):
    g = channel_gain((0, 0), (d, 0), model)
    t = transmission_time(mb_to_bits(150), 2e6, 20.0, g, -90.0)
    print(f"{d:>4} m  gain {g:7.1f} dB  -> {t:6.2f} steps")

# %%
# Doubling bandwidth halves the time; extra power only helps logarithmically
bits = mb_to_bits(10)
for bw in (1e6, 2e6, 4e6):
    print(bw, [round(transmission_time(bits, bw, p, -60.0, -90.0), 3) for p in (10, 20, 30)])

# %%
# At 0 dB SNR the link moves exactly one bit per hertz per step
print(transmission_time(8, 1.0, -30.0, 0.0, -30.0))
