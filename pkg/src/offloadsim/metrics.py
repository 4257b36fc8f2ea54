"""Episode metrics and batch summaries."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

CSV_HEADER = (
    "scenario", "policy", "lambda", "clusters", "seed", "episodes",
    "overloads_mean", "overloads_std", "resp_mean", "resp_std",
    "dropped_mean", "dropped_std", "drop_pct", "reward_mean",
)


class ConservationError(AssertionError):
    pass


@dataclass
class EpisodeMetrics:
    generated: int = 0
    completed: int = 0
    dropped_overflow: int = 0
    dropped_deadline: int = 0
    overloads_by_node: dict[int, int] = field(default_factory=dict)
    response_times: list[int] = field(default_factory=list)
    rewards: dict[int, float] = field(default_factory=dict)
    resident_at_end: int = 0
    steps: int = 0

    @property
    def overload_events(self) -> int:
        return sum(self.overloads_by_node.values())

    @property
    def dropped(self) -> int:
        return self.dropped_overflow + self.dropped_deadline

    @property
    def mean_response(self) -> float | None:
        if not self.response_times:
            return None
        return math.fsum(self.response_times) / len(self.response_times)

    @property
    def total_reward(self) -> float:
        return math.fsum(self.rewards.values())

    def conservation_gap(self) -> int:
        return self.generated - (self.completed + self.dropped + self.resident_at_end)

    def check_conservation(self) -> None:
        gap = self.conservation_gap()
        if gap:
            raise ConservationError(
                f"task conservation violated by {gap}: generated={self.generated} "
                f"completed={self.completed} dropped_overflow={self.dropped_overflow} "
                f"dropped_deadline={self.dropped_deadline} resident={self.resident_at_end}"
            )

    def merge(self, other: "EpisodeMetrics") -> "EpisodeMetrics":
        """Pooled counts of two accumulators (associative)."""
        overloads = dict(self.overloads_by_node)
        for k, v in other.overloads_by_node.items():
            overloads[k] = overloads.get(k, 0) + v
        rewards = dict(self.rewards)
        for k, v in other.rewards.items():
            rewards[k] = rewards.get(k, 0.0) + v
        return EpisodeMetrics(
            generated=self.generated + other.generated,
            completed=self.completed + other.completed,
            dropped_overflow=self.dropped_overflow + other.dropped_overflow,
            dropped_deadline=self.dropped_deadline + other.dropped_deadline,
            overloads_by_node=overloads,
            response_times=self.response_times + other.response_times,
            rewards=rewards,
            resident_at_end=self.resident_at_end + other.resident_at_end,
            steps=self.steps + other.steps,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "generated": self.generated,
            "completed": self.completed,
            "dropped_overflow": self.dropped_overflow,
            "dropped_deadline": self.dropped_deadline,
            "overloads_by_node": {str(k): v for k, v in sorted(self.overloads_by_node.items())},
            "response_times": list(self.response_times),
            "rewards": {str(k): v for k, v in sorted(self.rewards.items())},
            "resident_at_end": self.resident_at_end,
            "steps": self.steps,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EpisodeMetrics":
        return cls(
            generated=d["generated"],
            completed=d["completed"],
            dropped_overflow=d["dropped_overflow"],
            dropped_deadline=d["dropped_deadline"],
            overloads_by_node={int(k): v for k, v in d["overloads_by_node"].items()},
            response_times=list(d["response_times"]),
            rewards={int(k): float(v) for k, v in d["rewards"].items()},
            resident_at_end=d["resident_at_end"],
            steps=d["steps"],
        )


def _mean_std(values: Sequence[float]) -> tuple[float | None, float | None]:
    # fsum keeps the result independent of batch order
    if not values:
        return None, None
    mean = math.fsum(values) / len(values)
    if len(values) == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


def summarize(batch: Iterable[EpisodeMetrics]) -> dict[str, Any]:
    """Mean and sample standard deviation of each metric across episodes."""
    batch = list(batch)
    if not batch:
        raise ValueError("cannot summarize an empty batch")
    for k, m in enumerate(batch):
        try:
            m.check_conservation()
        except ConservationError as e:
            raise ConservationError(f"episode {k}: {e}") from None
    overloads = _mean_std([m.overload_events for m in batch])
    resp = _mean_std([m.mean_response for m in batch if m.mean_response is not None])
    dropped = _mean_std([m.dropped for m in batch])
    generated = sum(m.generated for m in batch)
    return {
        "episodes": len(batch),
        "overloads_mean": overloads[0],
        "overloads_std": overloads[1],
        "resp_mean": resp[0],
        "resp_std": resp[1],
        "dropped_mean": dropped[0],
        "dropped_std": dropped[1],
        "drop_pct": sum(m.dropped for m in batch) / generated if generated else 0.0,
        "reward_mean": _mean_std([m.total_reward for m in batch])[0],
        "generated_mean": _mean_std([m.generated for m in batch])[0],
        "completed_mean": _mean_std([m.completed for m in batch])[0],
    }


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def csv_row(summary: dict[str, Any], scenario: str, policy: str, lam: float,
            clusters: int | None, seed: int) -> list[str]:
    values = {"scenario": scenario, "policy": policy, "lambda": float(lam),
              "clusters": clusters, "seed": seed, **summary}
    return [_fmt(values[c]) for c in CSV_HEADER]


def render_csv(rows: Iterable[Sequence[str]], header: Sequence[str] = CSV_HEADER) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
