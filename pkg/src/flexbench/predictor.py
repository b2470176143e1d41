"""Throughput prediction and cost-efficiency ranking over the result dataset.

Per (accelerator, scenario) group the model fits a log-linear regression
log(per-accelerator throughput) = a + b*log(params_b) + c*bytes_per_param
when the group spans at least three distinct model sizes; sparser groups fall
back to inverse-distance-weighted nearest neighbors in (log params_b,
bytes_per_param) space. Support counts ride along everywhere so callers can
flag low-confidence estimates.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from flexbench.dataset import Record, bytes_per_param, featurize
from flexbench.errors import ConfigError, FeaturizeError, FitError, NoDataError
from flexbench.scenario import Scenario

# Runtime/KV overhead above raw weight bytes; a documented heuristic, not a
# measured constant. Overridable wherever ranking is exposed.
DEFAULT_OVERHEAD_FACTOR = 1.2

MIN_SIZES_FOR_REGRESSION = 3


@dataclass(frozen=True)
class PredictionQuery:
    """What-if query: a model configuration plus deployment constraints."""

    params_b: float
    weight_data_type: str
    scenario: Scenario
    min_throughput: float | None = None
    max_ttft: float | None = None
    must_fit_memory: bool = False
    candidates: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.params_b <= 0:
            raise ConfigError("params_b must be > 0")


@dataclass(frozen=True)
class ThroughputEstimate:
    per_accel_throughput: float
    support: int
    extrapolated: bool
    method: str


@dataclass(frozen=True)
class CostedPrediction:
    """One ranked configuration; empty constraint_tags means feasible."""

    accelerator_key: str
    predicted_per_accel_throughput: float | None
    accelerators_needed: int
    tokens_per_dollar: float | None
    fits_memory: bool
    support: int
    constraint_tags: tuple[str, ...] = ()
    extrapolated: bool = False

    @property
    def feasible(self) -> bool:
        return not self.constraint_tags

    def to_dict(self) -> dict[str, Any]:
        return {
            "accelerator_key": self.accelerator_key,
            "predicted_per_accel_throughput": self.predicted_per_accel_throughput,
            "accelerators_needed": self.accelerators_needed,
            "tokens_per_dollar": self.tokens_per_dollar,
            "fits_memory": self.fits_memory,
            "support": self.support,
            "constraint_tags": list(self.constraint_tags),
            "extrapolated": self.extrapolated,
            "feasible": self.feasible,
        }


@dataclass
class _Group:
    """Training points for one (accelerator, scenario) pair."""

    points: list[tuple[float, float, float]] = field(default_factory=list)  # (params_b, bpp, y)
    ttft_p99_ms: list[float] = field(default_factory=list)
    coeffs: np.ndarray | None = None

    @property
    def support(self) -> int:
        return len(self.points)

    @property
    def params_range(self) -> tuple[float, float]:
        sizes = [p for p, _, _ in self.points]
        return min(sizes), max(sizes)

    def fit_if_possible(self) -> None:
        if len({p for p, _, _ in self.points}) < MIN_SIZES_FOR_REGRESSION:
            return
        rows = np.array([[1.0, math.log(p), w] for p, w, _ in self.points])
        target = np.log([y for _, _, y in self.points])
        self.coeffs, *_ = np.linalg.lstsq(rows, target, rcond=None)

    def estimate(self, params_b: float, width: float) -> float:
        if self.coeffs is not None:
            a, b, c = self.coeffs
            return float(math.exp(a + b * math.log(params_b) + c * width))
        # Inverse-distance weighting; exact matches short-circuit.
        lp = math.log(params_b)
        exact = [y for p, w, y in self.points if math.isclose(math.log(p), lp) and w == width]
        if exact:
            return sum(exact) / len(exact)
        total_w = 0.0
        total = 0.0
        for p, w, y in self.points:
            dist = math.hypot(math.log(p) - lp, w - width)
            total_w += 1.0 / dist
            total += y / dist
        return total / total_w


class ThroughputModel:
    """Immutable fitted state; safe to share across concurrent predictions."""

    def __init__(self, groups: dict[tuple[str, str], _Group], skipped: int):
        self._groups = groups
        self.skipped_records = skipped

    @classmethod
    def fit(cls, records: Sequence[Record]) -> "ThroughputModel":
        """Fit from normalized records; non-throughput records are skipped.

        Raises FitError when nothing usable remains (e.g. a store holding
        only Queries/s results).
        """
        groups: dict[tuple[str, str], _Group] = {}
        skipped = 0
        for record in records:
            try:
                fv = featurize(record)
            except FeaturizeError:
                skipped += 1
                continue
            if fv.per_accel_throughput is None or fv.per_accel_throughput <= 0:
                skipped += 1
                continue
            group = groups.setdefault((fv.accelerator_key, fv.scenario.value), _Group())
            group.points.append((fv.params_b, fv.bytes_per_param, fv.per_accel_throughput))
            ttft = record.get("metrics.ttft_p99_ms")
            if isinstance(ttft, (int, float)):
                group.ttft_p99_ms.append(float(ttft))
        if not groups:
            raise FitError("no records with per-accelerator Tokens/s throughput")
        for group in groups.values():
            group.fit_if_possible()
        return cls(groups, skipped)

    def accelerators(self, scenario: Scenario | None = None) -> list[str]:
        keys = {
            accel
            for accel, scen in self._groups
            if scenario is None or scen == scenario.value
        }
        return sorted(keys)

    def predict(self, query: PredictionQuery, accelerator_key: str) -> ThroughputEstimate:
        """Per-accelerator throughput estimate for one candidate accelerator."""
        group = self._groups.get((accelerator_key, query.scenario.value))
        if group is None:
            raise NoDataError(
                f"no {query.scenario.value} records for accelerator {accelerator_key!r}"
            )
        width = bytes_per_param(query.weight_data_type)
        lo, hi = group.params_range
        return ThroughputEstimate(
            per_accel_throughput=group.estimate(query.params_b, width),
            support=group.support,
            extrapolated=not lo <= query.params_b <= hi,
            method="regression" if group.coeffs is not None else "nearest-neighbor",
        )

    def _observed_ttft_p99(self, accelerator_key: str, scenario: Scenario) -> float | None:
        group = self._groups.get((accelerator_key, scenario.value))
        if group is None or not group.ttft_p99_ms:
            return None
        return sum(group.ttft_p99_ms) / len(group.ttft_p99_ms)

    def rank(
        self,
        query: PredictionQuery,
        costs: Mapping[str, float],
        memory_gb: Mapping[str, float] | None = None,
        overhead_factor: float = DEFAULT_OVERHEAD_FACTOR,
    ) -> list[CostedPrediction]:
        """Rank candidate accelerators by tokens per dollar under constraints.

        Infeasible candidates sort last, tagged with each violated
        constraint; candidates without a cost or without data are reported
        but never ranked above priced, predicted ones.
        """
        memory_gb = memory_gb or {}
        if query.candidates is not None:
            candidates = list(query.candidates)
        else:
            candidates = sorted({*self.accelerators(query.scenario), *costs})

        need_gb = query.params_b * bytes_per_param(query.weight_data_type) * overhead_factor
        out: list[CostedPrediction] = []
        for accel in candidates:
            tags: list[str] = []
            estimate: ThroughputEstimate | None = None
            try:
                estimate = self.predict(query, accel)
            except NoDataError:
                tags.append("no-data")

            mem = memory_gb.get(accel)
            needed = 1
            if query.must_fit_memory:
                if mem is None or mem <= 0:
                    tags.append("no-memory-data")
                    fits = False
                else:
                    needed = max(1, math.ceil(need_gb / mem))
                    fits = True
            else:
                fits = need_gb <= mem if mem is not None and mem > 0 else True

            if (
                query.min_throughput is not None
                and estimate is not None
                and estimate.per_accel_throughput * needed < query.min_throughput
            ):
                tags.append("min_throughput")

            if query.max_ttft is not None:
                observed = self._observed_ttft_p99(accel, query.scenario)
                if observed is not None and observed > query.max_ttft:
                    tags.append("max_ttft")

            cost = costs.get(accel)
            if cost is None:
                tags.append("no-cost")
            elif cost <= 0:
                raise ConfigError(f"cost for {accel!r} must be > 0")

            tokens_per_dollar = None
            if estimate is not None and cost:
                tokens_per_dollar = estimate.per_accel_throughput * 3600.0 / cost

            out.append(
                CostedPrediction(
                    accelerator_key=accel,
                    predicted_per_accel_throughput=(
                        estimate.per_accel_throughput if estimate else None
                    ),
                    accelerators_needed=needed,
                    tokens_per_dollar=tokens_per_dollar,
                    fits_memory=fits,
                    support=estimate.support if estimate else 0,
                    constraint_tags=tuple(tags),
                    extrapolated=estimate.extrapolated if estimate else False,
                )
            )

        out.sort(
            key=lambda p: (
                not p.feasible,
                p.tokens_per_dollar is None,
                -(p.tokens_per_dollar or 0.0),
                p.accelerator_key,
            )
        )
        return out


# ---------------------------------------------------------------------------
# Config files


def load_cost_book(path: str | Path) -> dict[str, float]:
    """Accelerator -> currency/hour map; every cost must be positive."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    book = {str(k): float(v) for k, v in data.items()}
    bad = [k for k, v in book.items() if v <= 0]
    if bad:
        raise ConfigError(f"non-positive costs for: {', '.join(sorted(bad))}")
    return book


def load_memory_book(path: str | Path) -> dict[str, float]:
    """Accelerator -> memory GB map."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {str(k): float(v) for k, v in data.items()}
