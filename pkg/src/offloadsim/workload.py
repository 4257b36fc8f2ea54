"""Task workloads: Poisson arrivals and trace-derived task templates.

Trace files are JSON Lines, one job per line::

    {"job_id": "j1", "tasks": [{"cores": 2, "duration": 4, "mem": 1e8}]}

Jobs are flattened to their peak requirements: the instruction count is
``max(cores) * max(duration) * reference_frequency`` and the data size is
the largest ``mem`` (bits) among the job's tasks.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .domain import ConfigError, NodeSpec, TaskInstance, TaskSource, TaskTemplate

DEFAULT_REFERENCE_FREQUENCY = 1e7


def sample_arrivals(client: NodeSpec, lam: float, rng, source: TaskSource = TaskSource(),
                    time: int = 0, first_id: int = 0) -> list[TaskInstance]:
    """Draw this step's new tasks for one client (count ~ Poisson(lam))."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0:
        return []
    n = int(rng.poisson(lam))
    tasks = []
    for k in range(n):
        f = source.sample(rng)
        tasks.append(TaskInstance(
            id=first_id + k, rho=f["rho"], alpha_in=f["alpha_in"], alpha_out=f["alpha_out"],
            xi=f["xi"], delta=f["delta"], origin_client=client.id, created_at=time,
        ))
    return tasks


def _job_template(job: dict, lineno: int, reference_frequency: float, xi: float,
                  delta: int) -> TaskTemplate:
    tasks = job.get("tasks")
    if not isinstance(tasks, list) or not tasks:
        raise ConfigError(f"line {lineno}: job has no tasks")
    try:
        cores = max(float(t["cores"]) for t in tasks)
        duration = max(float(t["duration"]) for t in tasks)
        mem = max(float(t["mem"]) for t in tasks)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"line {lineno}: malformed task record ({e})") from None
    if cores <= 0 or duration <= 0 or mem <= 0:
        raise ConfigError(f"line {lineno}: cores, duration and mem must be positive")
    return TaskTemplate(
        rho=cores * duration * reference_frequency,
        alpha_in=mem,
        alpha_out=mem,
        xi=xi,
        delta=delta,
    )


def load_trace(path, reference_frequency: float = DEFAULT_REFERENCE_FREQUENCY,
               xi: float = 1.0, delta: int = 100) -> list[TaskTemplate]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"trace file not found: {path}")
    templates = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                job = json.loads(line)
            except json.JSONDecodeError as e:
                raise ConfigError(f"line {lineno}: malformed record ({e.msg})") from None
            if not isinstance(job, dict):
                raise ConfigError(f"line {lineno}: malformed record (expected an object)")
            templates.append(_job_template(job, lineno, reference_frequency, xi, delta))
    if not templates:
        raise ConfigError("empty job list")
    return templates


def write_trace_fixture(path, n_jobs: int = 20, seed: int = 0, max_tasks: int = 4) -> None:
    """Write a synthetic trace in the loader's schema (stand-in for real cluster traces)."""
    rng = np.random.default_rng(seed)
    with Path(path).open("w") as fh:
        for j in range(n_jobs):
            tasks = [
                {
                    "cores": int(rng.integers(1, 5)),
                    "duration": int(rng.integers(1, 6)),
                    "mem": float(rng.integers(1, 13)) * 1e8,
                }
                for _ in range(int(rng.integers(1, max_tasks + 1)))
            ]
            fh.write(json.dumps({"job_id": f"job-{j}", "tasks": tasks}) + "\n")
