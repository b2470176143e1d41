"""Scenario scheduling, query dispatch, and run aggregation.

Implements the two standard load-generation modes: Offline (the whole query
pool is available at t=0 and drains under a concurrency cap) and Server
(queries arrive as a Poisson stream at a target rate). Per-query timestamps
come back from the streaming client; this module turns them into a validated
run summary.
"""

from __future__ import annotations

import asyncio
import json
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from flexbench.errors import ConfigError, SummaryError

if TYPE_CHECKING:
    from flexbench.client import CompletionClient


class Scenario(str, Enum):
    OFFLINE = "Offline"
    SERVER = "Server"


@dataclass(frozen=True)
class LatencyPreset:
    ttft_limit_ms: float
    tpot_limit_ms: float


# Mirrors common datacenter LLM serving constraints; a convenience preset,
# not ground truth. Limits are unset unless the user opts in.
LATENCY_PRESETS: dict[str, LatencyPreset] = {
    "datacenter-llm": LatencyPreset(ttft_limit_ms=2000.0, tpot_limit_ms=200.0),
}

# Desk-scale validity defaults; production-grade runs use far longer floors.
DEFAULT_MIN_QUERY_COUNT = 100
DEFAULT_MIN_DURATION_S = 10.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs for one benchmark run."""

    scenario: Scenario
    target_qps: float = 0.0
    min_query_count: int = DEFAULT_MIN_QUERY_COUNT
    min_duration: float = DEFAULT_MIN_DURATION_S
    max_concurrency: int = 8
    ttft_limit: float | None = None
    tpot_limit: float | None = None
    rng_seed: int = 42

    def __post_init__(self) -> None:
        if self.scenario is Scenario.SERVER and self.target_qps <= 0:
            raise ConfigError("Server scenario requires target_qps > 0")
        if self.min_query_count < 1:
            raise ConfigError("min_query_count must be >= 1")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")


@dataclass(frozen=True)
class QuerySample:
    """One prompt fed to the load generator."""

    id: int
    prompt_tokens: int
    requested_output_tokens: int
    prompt_text: str

    def __post_init__(self) -> None:
        if self.prompt_tokens < 1:
            raise ConfigError(f"sample {self.id}: prompt_tokens must be >= 1")
        if self.requested_output_tokens < 1:
            raise ConfigError(f"sample {self.id}: requested_output_tokens must be >= 1")


@dataclass
class QueryMeasurement:
    """Per-query timestamps (monotonic ns) and token counts."""

    id: int
    scheduled_at: int
    issued_at: int
    first_token_at: int | None
    completed_at: int
    output_tokens: int
    output_text: str
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.first_token_at is not None and self.output_tokens >= 1

    @property
    def ttft_ms(self) -> float | None:
        if self.first_token_at is None:
            return None
        return (self.first_token_at - self.issued_at) / 1e6

    @property
    def latency_ms(self) -> float:
        return (self.completed_at - self.issued_at) / 1e6

    @property
    def tpot_ms(self) -> float | None:
        """Mean inter-token interval after the first token; None for <2 tokens."""
        if self.first_token_at is None or self.output_tokens < 2:
            return None
        return (self.completed_at - self.first_token_at) / 1e6 / (self.output_tokens - 1)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "scheduled_at": self.scheduled_at,
            "issued_at": self.issued_at,
            "first_token_at": self.first_token_at,
            "completed_at": self.completed_at,
            "output_tokens": self.output_tokens,
            "output_text": self.output_text,
            "error": self.error,
        }


@dataclass
class RunSummary:
    """Aggregates a run: throughput, latency tails, and the validity verdict."""

    scenario: Scenario
    completed_queries: int
    total_output_tokens: int
    wall_time: float
    throughput_tokens_per_s: float
    achieved_qps: float
    latency_p50: float
    latency_p90: float
    latency_p99: float
    ttft_p50: float
    ttft_p90: float
    ttft_p99: float
    tpot_mean: float | None
    tokens_per_sample_mean: float
    valid: bool
    reasons: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["scenario"] = self.scenario.value
        return out


# ---------------------------------------------------------------------------
# Arrival scheduling


def schedule_arrivals(config: ScenarioConfig, n: int) -> list[int]:
    """Arrival offsets in ns from run start for ``n`` queries.

    Offline issues everything at once (all offsets 0). Server draws i.i.d.
    exponential inter-arrival gaps with mean 1/target_qps via inverse-CDF on
    a seeded generator, so schedules are reproducible per seed.
    """
    if n < 1:
        raise ConfigError("cannot schedule fewer than one query")
    if config.scenario is Scenario.OFFLINE:
        return [0] * n
    if config.target_qps <= 0:
        raise ConfigError("Server scenario requires target_qps > 0")
    rng = np.random.default_rng(config.rng_seed)
    gaps_s = -np.log1p(-rng.random(n)) / config.target_qps
    offsets_ns = np.cumsum(gaps_s) * 1e9
    return [int(x) for x in offsets_ns]


def cycle_samples(samples: Sequence[QuerySample], min_count: int) -> list[QuerySample]:
    """Repeat the sample pool (with fresh ids) until it covers ``min_count``."""
    if not samples:
        raise ConfigError("at least one query sample is required")
    pool = list(samples)
    next_id = max(s.id for s in pool) + 1
    i = 0
    while len(pool) < min_count:
        pool.append(replace(samples[i % len(samples)], id=next_id))
        next_id += 1
        i += 1
    return pool


# ---------------------------------------------------------------------------
# Run loop


async def run_scenario(
    config: ScenarioConfig,
    samples: Sequence[QuerySample],
    client: "CompletionClient",
) -> list[QueryMeasurement]:
    """Drive one scenario against ``client`` and collect every measurement.

    The sample pool is cycled up to ``min_query_count`` if shorter. Aborts
    with TransportError when the endpoint is unreachable; individual query
    failures are tagged on their measurement and do not stop the run.

    Server mode issues each query at its scheduled arrival unless
    ``max_concurrency`` throttles it (lateness shows up as issued_at -
    scheduled_at; nothing is dropped). Offline mode keeps up to
    ``max_concurrency`` queries in flight until the pool drains.
    """
    pool = cycle_samples(samples, config.min_query_count)
    await client.probe()  # unreachable endpoint -> TransportError before any load
    offsets = schedule_arrivals(config, len(pool))

    gate = asyncio.Semaphore(config.max_concurrency)

    async def issue(sample: QuerySample, scheduled_at: int) -> QueryMeasurement:
        async with gate:
            return await client.send_query(sample, scheduled_at=scheduled_at)

    # Single-threaded dispatcher: sleep gap-to-gap and spawn each query task
    # at its arrival instant, so pending work never piles timers on the loop.
    tasks: list[asyncio.Task[QueryMeasurement]] = []
    start_ns = time.perf_counter_ns()
    for sample, offset_ns in zip(pool, offsets):
        scheduled_at = start_ns + offset_ns
        if offset_ns > 0:
            delay = (scheduled_at - time.perf_counter_ns()) / 1e9
            if delay > 0:
                await asyncio.sleep(delay)
        tasks.append(asyncio.create_task(issue(sample, scheduled_at)))
    return list(await asyncio.gather(*tasks))


# ---------------------------------------------------------------------------
# Aggregation


def nearest_rank(values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile: sorted 1-based index ceil(p/100*N).

    Always returns a member of ``values`` (no interpolation).
    """
    if not values:
        raise ValueError("percentile of empty sequence")
    if not 0.0 < p <= 100.0:
        raise ValueError(f"percentile must be in (0, 100], got {p}")
    ordered = sorted(values)
    rank = math.ceil(p / 100.0 * len(ordered))
    return ordered[rank - 1]


def summarize(measurements: Sequence[QueryMeasurement], config: ScenarioConfig) -> RunSummary:
    """Aggregate measurements into a RunSummary with a validity verdict.

    Wall time spans first issue to last completion of successful queries, so
    throughput is recomputable from the raw measurement file. Latency
    constraints apply in Server mode only, and only when limits are set.
    """
    successes = [m for m in measurements if m.ok]
    if not successes:
        kinds = sorted({m.error or "no-token" for m in measurements})
        raise SummaryError(f"no successful measurements (errors: {', '.join(kinds) or 'none'})")

    wall_time = (max(m.completed_at for m in successes) - min(m.issued_at for m in successes)) / 1e9
    wall_time = max(wall_time, 1e-9)
    total_tokens = sum(m.output_tokens for m in successes)
    latencies = [m.latency_ms for m in successes]
    ttfts = [m.ttft_ms for m in successes if m.ttft_ms is not None]
    tpots = [m.tpot_ms for m in successes if m.tpot_ms is not None]
    tpot_mean = sum(tpots) / len(tpots) if tpots else None

    ttft_p99 = nearest_rank(ttfts, 99)
    reasons: list[str] = []
    if len(successes) < config.min_query_count:
        reasons.append("min_query_count")
    if wall_time < config.min_duration:
        reasons.append("min_duration")
    if config.scenario is Scenario.SERVER:
        if config.ttft_limit is not None and ttft_p99 > config.ttft_limit:
            reasons.append("ttft_p99")
        if config.tpot_limit is not None and tpot_mean is not None and tpot_mean > config.tpot_limit:
            reasons.append("tpot_mean")

    return RunSummary(
        scenario=config.scenario,
        completed_queries=len(successes),
        total_output_tokens=total_tokens,
        wall_time=wall_time,
        throughput_tokens_per_s=total_tokens / wall_time,
        achieved_qps=len(successes) / wall_time,
        latency_p50=nearest_rank(latencies, 50),
        latency_p90=nearest_rank(latencies, 90),
        latency_p99=nearest_rank(latencies, 99),
        ttft_p50=nearest_rank(ttfts, 50),
        ttft_p90=nearest_rank(ttfts, 90),
        ttft_p99=ttft_p99,
        tpot_mean=tpot_mean,
        tokens_per_sample_mean=total_tokens / len(successes),
        valid=not reasons,
        reasons=reasons,
    )


# ---------------------------------------------------------------------------
# File export


def write_measurements(path: str | Path, measurements: Iterable[QueryMeasurement]) -> None:
    """One measurement per line, field names as in QueryMeasurement."""
    with open(path, "w", encoding="utf-8") as f:
        for m in measurements:
            f.write(json.dumps(m.to_dict(), sort_keys=True) + "\n")


def write_summary(path: str | Path, summary: RunSummary) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
