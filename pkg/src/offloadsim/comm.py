"""Wireless link model: channel gain and Shannon-rate transmission latency."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import ChannelParams, GainModel, Topology

# Shannon-Hartley capacity uses log base 2 (bits per second per Hz).
LOG_BASE = 2.0


class ChannelError(ValueError):
    pass


def _log(x: float) -> float:
    return math.log2(x) if LOG_BASE == 2.0 else math.log(x, LOG_BASE)


def channel_gain(pos_i, pos_j, model: GainModel) -> float:
    """Gain in dB between two positions (metres)."""
    if model.kind == "constant":
        return model.value_db
    if model.kind != "free_space":
        raise ChannelError(f"unknown gain model {model.kind!r}")
    d = math.dist(pos_i, pos_j)
    if not math.isfinite(d):
        raise ChannelError("non-finite position")
    if d == 0:
        raise ChannelError("degenerate distance")
    return model.value_db - 20.0 * math.log10(d)


def channel_rate(bandwidth: float, power_dbm: float, gain_db: float, noise_dbm: float) -> float:
    """Achievable rate in bits per step: ``B * log(1 + 10**((P + G - w0) / 10))``."""
    if not bandwidth > 0:
        raise ChannelError("bandwidth must be positive")
    snr = 10.0 ** ((power_dbm + gain_db - noise_dbm) / 10.0)
    rate = bandwidth * _log(1.0 + snr)
    if not rate > 0 or not math.isfinite(rate):
        raise ChannelError("unusable channel")
    return rate


def transmission_time(bits: float, bandwidth: float, power_dbm: float, gain_db: float,
                      noise_dbm: float) -> float:
    """Latency (steps, fractional) to push ``bits`` over one link."""
    if bits < 0:
        raise ValueError("bits must be >= 0")
    rate = channel_rate(bandwidth, power_dbm, gain_db, noise_dbm)
    if bits == 0:
        return 0.0
    return bits / rate


@dataclass(frozen=True)
class LinkBudget:
    source: int
    target: int
    bits: float
    snr_db: float
    rate: float
    time: float


def link_budget(topology: Topology, channel: ChannelParams, source: int, target: int,
                bits: float) -> LinkBudget:
    src = topology.node(source)
    dst = topology.node(target)
    gain = channel_gain(src.position, dst.position, channel.gain_model)
    bw = channel.bandwidth[(source, target)]
    rate = channel_rate(bw, src.transmit_power, gain, channel.noise_power)
    return LinkBudget(
        source=source,
        target=target,
        bits=bits,
        snr_db=src.transmit_power + gain - channel.noise_power,
        rate=rate,
        time=0.0 if bits == 0 else bits / rate,
    )


class LinkTable:
    """Per-directed-link rates, computed once per topology.

    ``time(i, j, bits)`` returns exactly what :func:`transmission_time` would.
    """

    def __init__(self, topology: Topology, channel: ChannelParams):
        self._rate: dict[tuple[int, int], float] = {}
        for i in topology.ids:
            for j in topology.neighbors_of(i):
                src, dst = topology.node(i), topology.node(j)
                gain = channel_gain(src.position, dst.position, channel.gain_model)
                self._rate[(i, j)] = channel_rate(
                    channel.bandwidth[(i, j)], src.transmit_power, gain, channel.noise_power
                )

    def rate(self, i: int, j: int) -> float:
        return self._rate[(i, j)]

    def time(self, i: int, j: int, bits: float) -> float:
        if i == j or bits == 0:
            return 0.0
        return bits / self._rate[(i, j)]
