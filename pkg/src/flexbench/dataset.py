"""Flat dot-keyed benchmark result records: ingest, features, storage.

Records are flat maps with dot-delimited keys ("metrics.result",
"system.accelerator.name", ...). Ingest normalizes heterogeneous inputs
(nested maps, escaped keys, stringly-typed numbers, unit spellings) into
that shape while preserving unknown keys verbatim, so externally curated
result dumps and harness-produced records live in one store.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from flexbench.accuracy import AccuracyReport
from flexbench.errors import FeaturizeError, IngestError, InvalidRunError, QueryError
from flexbench.scenario import RunSummary, Scenario

Record = dict[str, Any]

MANDATORY_KEYS = ("metrics.result", "metrics.units", "system.accelerator.total_count")

_FLOAT_KEYS = frozenset(
    {
        "metrics.result",
        "metrics.result_per_accelerator",
        "model.number_of_parameters",
    }
)
_INT_KEYS = frozenset(
    {
        "system.accelerator.count_per_node",
        "system.accelerator.total_count",
        "system.cpu.core_count",
        "system.cpu.count_per_node",
        "system.number_of_nodes",
    }
)

# Keys of the published record schema; filters on these never error even if
# the current store happens not to contain them yet.
CANONICAL_KEYS = frozenset(
    {
        "metrics.accuracy",
        "metrics.result",
        "metrics.result_per_accelerator",
        "metrics.units",
        "model.architecture",
        "model.mlperf_name",
        "model.name",
        "model.number_of_parameters",
        "model.weight_data_types",
        "software.framework",
        "software.operating_system",
        "submission.availability",
        "submission.division",
        "submission.organization",
        "submission.scenario",
        "system.accelerator.count_per_node",
        "system.accelerator.name",
        "system.accelerator.total_count",
        "system.accelerator.vendor",
        "system.cpu.caches",
        "system.cpu.core_count",
        "system.cpu.count_per_node",
        "system.cpu.model",
        "system.interconnect.accelerator",
        "system.interconnect.accelerator_host",
        "system.name",
        "system.number_of_nodes",
        "system.type",
    }
)

_UNIT_ALIASES = {
    "tokens/s": "Tokens/s",
    "tokens/sec": "Tokens/s",
    "tokens per second": "Tokens/s",
    "tok/s": "Tokens/s",
    "queries/s": "Queries/s",
    "queries/sec": "Queries/s",
    "qps": "Queries/s",
    "samples/s": "Samples/s",
    "samples/sec": "Samples/s",
}

_BYTES_PER_PARAM = {
    "fp32": 4.0,
    "float32": 4.0,
    "fp16": 2.0,
    "float16": 2.0,
    "half": 2.0,
    "bfloat16": 2.0,
    "bf16": 2.0,
    "fp8": 1.0,
    "float8": 1.0,
    "int8": 1.0,
    "int4": 0.5,
    "uint4": 0.5,
}


@dataclass(frozen=True)
class FeatureVector:
    """Engineered features for one record."""

    params_b: float
    bytes_per_param: float
    est_weights_gb: float
    scenario: Scenario
    accelerator_key: str
    per_accel_throughput: float | None


# ---------------------------------------------------------------------------
# Normalization


def flatten(raw: Mapping[str, Any], prefix: str = "") -> Record:
    """Flatten nested maps into dot-joined keys; flat input passes through."""
    out: Record = {}
    for key, value in raw.items():
        full = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, Mapping):
            out.update(flatten(value, full))
        else:
            out[full] = value
    return out


def _canonical_key(key: str) -> str:
    # "metrics.result\_per\_accelerator" style typesetting escapes.
    return key.replace("\\_", "_")


def _coerce_number(key: str, value: Any, to_int: bool) -> int | float:
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise IngestError(f"{key}: cannot coerce {value!r} to a number") from None
    if not math.isfinite(number):
        raise IngestError(f"{key}: {value!r} is not finite")
    if to_int:
        if number != int(number):
            raise IngestError(f"{key}: expected an integer, got {value!r}")
        return int(number)
    return number


def canonical_units(units: str) -> str:
    return _UNIT_ALIASES.get(str(units).strip().lower(), str(units).strip())


def ingest(raw: Mapping[str, Any]) -> Record:
    """Normalize one raw record map into the canonical flat schema.

    Numeric fields are coerced from text, unit strings canonicalized, and
    metrics.result_per_accelerator derived when absent. Unknown keys are
    preserved verbatim. Idempotent.
    """
    record: Record = {}
    for key, value in flatten(raw).items():
        record[_canonical_key(key)] = value

    missing = [key for key in MANDATORY_KEYS if key not in record]
    if missing:
        raise IngestError(f"missing mandatory keys: {', '.join(missing)}")

    for key in list(record):
        if key in _FLOAT_KEYS:
            record[key] = _coerce_number(key, record[key], to_int=False)
        elif key in _INT_KEYS:
            record[key] = _coerce_number(key, record[key], to_int=True)

    record["metrics.units"] = canonical_units(record["metrics.units"])

    if "metrics.result_per_accelerator" not in record:
        total = record["system.accelerator.total_count"]
        if total >= 1:
            record["metrics.result_per_accelerator"] = record["metrics.result"] / total

    return record


def validate_record(record: Mapping[str, Any]) -> list[str]:
    """Invariant violations for one normalized record (empty when clean)."""
    violations: list[str] = []
    if record.get("metrics.result", 0) < 0:
        violations.append("metrics.result")
    if record.get("system.accelerator.total_count", 0) < 1:
        violations.append("system.accelerator.total_count")
    params = record.get("model.number_of_parameters")
    if params is not None and params <= 0:
        violations.append("model.number_of_parameters")
    per_accel = record.get("metrics.result_per_accelerator")
    total = record.get("system.accelerator.total_count")
    result = record.get("metrics.result")
    if per_accel is not None and total and result:
        if not math.isclose(per_accel * total, result, rel_tol=1e-3):
            violations.append("metrics.result_per_accelerator")
    return violations


# ---------------------------------------------------------------------------
# Feature engineering


def accelerator_key(vendor: str | None, name: str) -> str:
    """Canonical accelerator identity: vendor-qualified, whitespace-collapsed.

    The memory suffix is preserved ("H100 80GB HBM3" is distinct from
    "H100 94GB") because memory capacity matters for fit checks.
    """
    name = " ".join(str(name).split())
    if not vendor:
        return name
    vendor = " ".join(str(vendor).split())
    if name.lower().startswith(vendor.lower()):
        return name
    return f"{vendor} {name}"


def bytes_per_param(data_type: str) -> float:
    key = str(data_type).strip().lower()
    if key not in _BYTES_PER_PARAM:
        raise FeaturizeError(f"unknown weight data type: {data_type!r}")
    return _BYTES_PER_PARAM[key]


def featurize(record: Mapping[str, Any]) -> FeatureVector:
    """Engineer model-size and data-type features from a normalized record."""
    missing = [
        key
        for key in ("model.number_of_parameters", "model.weight_data_types",
                    "submission.scenario", "system.accelerator.name")
        if key not in record
    ]
    if missing:
        raise FeaturizeError(f"missing fields for featurization: {', '.join(missing)}")

    params_b = float(record["model.number_of_parameters"])
    width = bytes_per_param(record["model.weight_data_types"])

    scenario_text = str(record["submission.scenario"]).strip().lower()
    try:
        scenario = {"offline": Scenario.OFFLINE, "server": Scenario.SERVER}[scenario_text]
    except KeyError:
        raise FeaturizeError(f"unknown scenario: {record['submission.scenario']!r}") from None

    per_accel = None
    if record.get("metrics.units") == "Tokens/s":
        per_accel = record.get("metrics.result_per_accelerator")

    return FeatureVector(
        params_b=params_b,
        bytes_per_param=width,
        est_weights_gb=params_b * width,
        scenario=scenario,
        accelerator_key=accelerator_key(
            record.get("system.accelerator.vendor"), record["system.accelerator.name"]
        ),
        per_accel_throughput=per_accel,
    )


# ---------------------------------------------------------------------------
# Harness output -> record


def from_run(
    summary: RunSummary,
    accuracy: AccuracyReport | None,
    system: Mapping[str, Any] | None = None,
    submission: Mapping[str, Any] | None = None,
) -> Record:
    """Build a normalized record from a completed run.

    Descriptor keys carrying a dot pass through as-is; bare keys are
    prefixed "system." / "submission.". Refuses invalid runs.
    """
    if not summary.valid:
        raise InvalidRunError(f"run failed validity checks: {', '.join(summary.reasons)}")

    record: Record = {
        "metrics.result": summary.throughput_tokens_per_s,
        "metrics.units": "Tokens/s",
        "metrics.ttft_p99_ms": summary.ttft_p99,
        "metrics.latency_p99_ms": summary.latency_p99,
        "metrics.achieved_qps": summary.achieved_qps,
        "submission.scenario": summary.scenario.value,
    }
    if summary.tpot_mean is not None:
        record["metrics.tpot_mean_ms"] = summary.tpot_mean
    if accuracy is not None:
        record["metrics.accuracy"] = accuracy.as_text()

    top_level = {"metrics", "model", "software", "submission", "system"}
    for prefix, descriptor in (("system", system), ("submission", submission)):
        for key, value in (descriptor or {}).items():
            if value is None:
                continue
            full = key if key.split(".", 1)[0] in top_level else f"{prefix}.{key}"
            record[full] = value

    record.setdefault("system.accelerator.total_count", 1)
    record.setdefault("system.accelerator.name", "unknown")
    return ingest(record)


# ---------------------------------------------------------------------------
# Store and queries

Filter = Mapping[str, Any]


def _matches(record: Record, key: str, expected: Any) -> bool:
    if key not in record:
        return False
    actual = record[key]
    if callable(expected):
        return bool(expected(actual))
    if isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        return math.isclose(float(actual), float(expected), rel_tol=1e-12)
    if isinstance(actual, (int, float)) and isinstance(expected, str):
        try:
            return math.isclose(float(actual), float(expected), rel_tol=1e-12)
        except ValueError:
            return False
    return actual == expected


def query(records: Sequence[Record], filters: Filter | None = None) -> list[Record]:
    """Conjunctive filtering over flat keys, stable-ordered for display.

    Filter values may be plain values (equality, numeric-aware) or callables.
    Filtering on a key absent from both the store and the canonical schema is
    an error rather than silently matching nothing.
    """
    filters = filters or {}
    known = CANONICAL_KEYS.union(*(r.keys() for r in records)) if records else CANONICAL_KEYS
    unknown = [key for key in filters if key not in known]
    if unknown:
        raise QueryError(f"unknown filter keys: {', '.join(sorted(unknown))}")

    hits = [
        r for r in records if all(_matches(r, key, value) for key, value in filters.items())
    ]
    hits.sort(
        key=lambda r: (str(r.get("model.name", "")), str(r.get("system.accelerator.name", "")))
    )
    return hits


class DatasetStore:
    """Append-only line-delimited record file.

    Single-writer appends; readers always parse a full snapshot of the file,
    so concurrent reads see a consistent prefix of the log.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def __len__(self) -> int:
        return len(self.load())

    def append(self, record: Record) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(json.dumps(record, sort_keys=True) + "\n")
            f.flush()

    def load(self) -> list[Record]:
        if not self.path.exists():
            return []
        records: list[Record] = []
        with open(self.path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records

    def query(self, filters: Filter | None = None) -> list[Record]:
        return query(self.load(), filters)

    def mtime_ns(self) -> int:
        return self.path.stat().st_mtime_ns if self.path.exists() else 0


def load_records_file(path: str | Path) -> list[Record]:
    """Raw records from a JSON array, a single JSON object, or JSON lines."""
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        return []
    if text.startswith("["):
        data = json.loads(text)
        return [dict(entry) for entry in data]
    try:
        single = json.loads(text)
        if isinstance(single, dict):
            return [single]
    except json.JSONDecodeError:
        pass
    return [json.loads(line) for line in text.splitlines() if line.strip()]
