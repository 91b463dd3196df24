"""Sample paths of the decaying-interest counting process.

Inversion maps unit-rate Poisson arrivals through the inverse cumulative
intensity and is exact.  Thinning draws candidates at the constant rate
``b`` (an upper bound since the intensity only decays) and keeps each with
probability ``lambda(t) / b``.  Both stop at a time horizon or after a
fixed number of events.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from nhpp_decay.intensity import (
    IntensityParams,
    cumulative_intensity,
    intensity_at,
    inverse_cumulative,
)

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class EventSeries:
    """Sorted event times S_1 <= S_2 <= ... observed on ``[0, window_end]``.

    The origin S_0 = 0 is implicit and never stored.
    """

    times: np.ndarray
    window_end: float

    def __post_init__(self):
        times = np.array(self.times, dtype=float).ravel()
        window_end = float(self.window_end)
        if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
            raise ValueError("event times must be nonnegative and sorted")
        if times.size and times[-1] > window_end:
            raise ValueError(
                f"last event {times[-1]!r} lies beyond window_end {window_end!r}"
            )
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "window_end", window_end)

    def __len__(self):
        return self.times.size

    def count(self, t):
        """N(t): number of events in ``[0, t]``."""
        return np.searchsorted(self.times, t, side="right")


@dataclass(frozen=True)
class IntervalSample:
    """Inter-event durations with their collection mode.

    ``mode`` is ``"pooled"`` for successive gaps of whole series, or
    ``"fixed"`` for one gap T_{n+1} per independent realization, in which
    case ``index`` holds n.
    """

    intervals: np.ndarray
    mode: Literal["pooled", "fixed"] = "pooled"
    index: int | None = None
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.intervals, dtype=float).ravel()
        values.setflags(write=False)
        object.__setattr__(self, "intervals", values)
        if self.mode not in ("pooled", "fixed"):
            raise ValueError(f"unknown interval mode {self.mode!r}")
        if self.mode == "fixed" and (self.index is None or self.index < 1):
            raise ValueError("fixed-index samples need the event index n >= 1")

    def __len__(self):
        return self.intervals.size


@dataclass(frozen=True)
class SimulationConfig:
    """Ensemble settings; exactly one of ``horizon`` and ``count`` is set."""

    params: IntensityParams
    horizon: float | None = None
    count: int | None = None
    replicas: int = 1
    master_seed: int = 0
    method: Literal["inversion", "thinning"] = "inversion"

    def __post_init__(self):
        if (self.horizon is None) == (self.count is None):
            raise ValueError("set exactly one of horizon and count")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.count is not None and (int(self.count) != self.count or self.count < 1):
            raise ValueError("count must be an integer >= 1")
        if int(self.replicas) != self.replicas or self.replicas < 1:
            raise ValueError("replicas must be an integer >= 1")
        if self.method not in ("inversion", "thinning"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")


class ReplicaError(RuntimeError):
    """A replica of an ensemble failed; ``index`` identifies it."""

    def __init__(self, index, cause):
        super().__init__(f"replica {index} failed: {cause}")
        self.index = index
        self.cause = cause


def child_seed(master_seed: int, index: int) -> int:
    """Seed of replica ``index``: SplitMix64 applied to master + (index+1) * golden gamma."""
    z = (int(master_seed) + (int(index) + 1) * _GOLDEN64) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _check_stop(horizon, count):
    if (horizon is None) == (count is None):
        raise ValueError("set exactly one of horizon and count")
    if horizon is not None and not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon!r}")
    if count is not None and (int(count) != count or count < 1):
        raise ValueError(f"count must be an integer >= 1, got {count!r}")


def sample_path_inversion(
    params: IntensityParams, horizon: float | None = None, seed: int = 0, count: int | None = None
) -> EventSeries:
    """Exact sample path by time change of a unit-rate Poisson process."""
    _check_stop(horizon, count)
    rng = np.random.default_rng(seed)
    if count is not None:
        u = np.cumsum(rng.standard_exponential(int(count)))
        times = np.asarray(inverse_cumulative(params, u))
        return EventSeries(times, times[-1])

    total = cumulative_intensity(params, horizon)
    chunks = []
    reached = 0.0
    while True:
        size = int(total - reached + 5.0 * math.sqrt(total - reached + 1.0) + 16)
        u = reached + np.cumsum(rng.standard_exponential(size))
        keep = u[u <= total]
        chunks.append(keep)
        if keep.size < size:
            break
        reached = u[-1]
    u = np.concatenate(chunks)
    times = np.minimum(np.asarray(inverse_cumulative(params, u)), horizon)
    return EventSeries(times, horizon)


def sample_path_thinning(
    params: IntensityParams, horizon: float | None = None, seed: int = 0, count: int | None = None
) -> EventSeries:
    """Lewis-Shedler thinning of a rate-``b`` homogeneous process."""
    _check_stop(horizon, count)
    rng = np.random.default_rng(seed)
    rate = params.b
    accepted = []
    n_accepted = 0
    t0 = 0.0
    limit = math.inf if horizon is None else horizon
    block = 64 if horizon is None else int(rate * horizon + 5.0 * math.sqrt(rate * horizon) + 16)
    while True:
        cand = t0 + np.cumsum(rng.standard_exponential(block)) / rate
        marks = rng.random(block)
        cand_in = cand[cand <= limit]
        keep = cand_in[marks[: cand_in.size] * rate < intensity_at(params, cand_in)]
        if count is not None and n_accepted + keep.size >= count:
            accepted.append(keep[: count - n_accepted])
            times = np.concatenate(accepted)
            return EventSeries(times, times[-1])
        accepted.append(keep)
        n_accepted += keep.size
        if cand_in.size < block:
            return EventSeries(np.concatenate(accepted), horizon)
        t0 = cand[-1]


_SAMPLERS = {"inversion": sample_path_inversion, "thinning": sample_path_thinning}


def _run_replica(cfg: SimulationConfig, index: int) -> EventSeries:
    sampler = _SAMPLERS[cfg.method]
    try:
        return sampler(
            cfg.params, horizon=cfg.horizon, count=cfg.count, seed=child_seed(cfg.master_seed, index)
        )
    except Exception as exc:
        raise ReplicaError(index, exc) from exc


def _run_block(cfg: SimulationConfig, indices: range):
    return [_run_replica(cfg, i) for i in indices]


@dataclass(frozen=True)
class Ensemble:
    """Replica paths in index order, with interval extraction helpers."""

    config: SimulationConfig
    series: tuple

    def pooled(self) -> IntervalSample:
        """Successive gaps of every replica, concatenated in replica order."""
        gaps = [np.diff(s.times) for s in self.series if len(s) >= 2]
        values = np.concatenate(gaps) if gaps else np.empty(0)
        return IntervalSample(values, "pooled", source=_source(self.config))

    def fixed_index(self, n: int) -> IntervalSample:
        """T_{n+1} = S_{n+1} - S_n from each replica with at least n+1 events."""
        if int(n) != n or n < 1:
            raise ValueError("n must be a positive integer")
        values = [s.times[n] - s.times[n - 1] for s in self.series if len(s) > n]
        return IntervalSample(np.asarray(values, dtype=float), "fixed", index=int(n), source=_source(self.config))

    def counts(self, t=None) -> np.ndarray:
        """N(t) per replica; ``t`` defaults to each replica's window end."""
        if t is None:
            return np.array([len(s) for s in self.series])
        return np.array([s.count(t) for s in self.series])


def _source(cfg):
    return {
        "a": cfg.params.a,
        "b": cfg.params.b,
        "horizon": cfg.horizon,
        "count": cfg.count,
        "replicas": cfg.replicas,
        "master_seed": cfg.master_seed,
        "method": cfg.method,
    }


def simulate_ensemble(cfg: SimulationConfig, workers: int | None = None) -> Ensemble:
    """Run ``cfg.replicas`` independent paths.

    Replica ``i`` is seeded with :func:`child_seed` ``(master_seed, i)``,
    so the result does not depend on ``workers``.

    Raises:
        ReplicaError: carrying the index of the first failing replica.
    """
    if workers is None or workers <= 1 or cfg.replicas < 2 * workers:
        series = _run_block(cfg, range(cfg.replicas))
    else:
        step = math.ceil(cfg.replicas / workers)
        blocks = [range(lo, min(lo + step, cfg.replicas)) for lo in range(0, cfg.replicas, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            series = [s for part in pool.map(_run_block, [cfg] * len(blocks), blocks) for s in part]
    return Ensemble(cfg, tuple(series))

