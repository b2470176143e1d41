"""Command-line entry point: bench runs, the simulator, dataset curation,
what-if predictions, and the API server.

Exit codes: 0 ok, 1 invalid result, 2 usage error, 3 I/O or transport
failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import platform
import sys
from pathlib import Path

import uvicorn

from flexbench import __version__
from flexbench.accuracy import AccuracyReport, evaluate_run
from flexbench.api import create_app
from flexbench.client import CompletionClient, EndpointConfig
from flexbench.dataset import DatasetStore, featurize, from_run, ingest, load_records_file, validate_record
from flexbench.errors import (
    ConfigError,
    FeaturizeError,
    FitError,
    FlexBenchError,
    IngestError,
    InvalidRunError,
    QueryError,
    TransportError,
)
from flexbench.predictor import (
    DEFAULT_OVERHEAD_FACTOR,
    PredictionQuery,
    ThroughputModel,
    load_cost_book,
    load_memory_book,
)
from flexbench.scenario import (
    LATENCY_PRESETS,
    QuerySample,
    Scenario,
    ScenarioConfig,
    run_scenario,
    summarize,
    write_measurements,
    write_summary,
)
from flexbench.simserver import SimProfile, run_server

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_IO = 3

_PROMPT_WORDS = (
    "measure stream decode latency ledger tensor shard batch cache prompt "
    "kernel vector branch packet beacon metric window sample router filter"
).split()


# ---------------------------------------------------------------------------
# Sample loading


def synthetic_samples(n: int, max_output_tokens: int, seed: int, words: int = 24) -> list[QuerySample]:
    """Deterministic filler prompts for runs without a sample file."""
    samples = []
    for i in range(n):
        text = " ".join(
            _PROMPT_WORDS[(seed + i * 7 + k) % len(_PROMPT_WORDS)] for k in range(words)
        )
        samples.append(
            QuerySample(
                id=i,
                prompt_tokens=words,
                requested_output_tokens=max_output_tokens,
                prompt_text=f"request {i}: {text}",
            )
        )
    return samples


def load_samples(path: str | Path, max_output_tokens: int) -> list[QuerySample]:
    """One sample per line: either plain prompt text or a JSON object with
    "prompt" plus optional "id" and "max_tokens"."""
    samples: list[QuerySample] = []
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            prompt = line
            out_tokens = max_output_tokens
            sample_id = len(samples)
            if line.startswith("{"):
                try:
                    obj = json.loads(line)
                    prompt = str(obj.get("prompt", line))
                    out_tokens = int(obj.get("max_tokens", max_output_tokens))
                    sample_id = int(obj.get("id", sample_id))
                except (json.JSONDecodeError, TypeError, ValueError):
                    pass  # treat the raw line as prose
            samples.append(
                QuerySample(
                    id=sample_id,
                    prompt_tokens=max(1, len(prompt.split())),
                    requested_output_tokens=out_tokens,
                    prompt_text=prompt,
                )
            )
    if not samples:
        raise ConfigError(f"sample file {path} is empty")
    return samples


def load_references(path: str | Path) -> dict[int, str]:
    """Line-delimited references keyed by sample id."""
    refs: dict[int, str] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            refs[int(obj["id"])] = str(obj["reference"])
    return refs


# ---------------------------------------------------------------------------
# bench run


def _build_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> ScenarioConfig:
    scenario = Scenario.SERVER if args.scenario == "server" else Scenario.OFFLINE
    ttft_limit = args.ttft_limit
    tpot_limit = args.tpot_limit
    if args.latency_preset:
        preset = LATENCY_PRESETS[args.latency_preset]
        ttft_limit = ttft_limit if ttft_limit is not None else preset.ttft_limit_ms
        tpot_limit = tpot_limit if tpot_limit is not None else preset.tpot_limit_ms
    if scenario is Scenario.SERVER and (args.target_qps is None or args.target_qps <= 0):
        parser.error("--scenario server requires --target-qps > 0")
    return ScenarioConfig(
        scenario=scenario,
        target_qps=args.target_qps or 0.0,
        min_query_count=args.min_query_count,
        min_duration=args.min_duration,
        max_concurrency=args.max_concurrency,
        ttft_limit=ttft_limit,
        tpot_limit=tpot_limit,
        rng_seed=args.seed,
    )


async def _run_async(args: argparse.Namespace, config: ScenarioConfig) -> int:
    if args.samples:
        samples = load_samples(args.samples, args.max_output_tokens)
    else:
        samples = synthetic_samples(config.min_query_count, args.max_output_tokens, args.seed)

    endpoint = EndpointConfig(
        base_url=args.endpoint,
        model_name=args.model,
        request_timeout=args.timeout,
        api_key=os.environ.get("FLEXBENCH_API_KEY"),
    )
    async with CompletionClient(endpoint) as client:
        framework = await client.probe()
        print(f"endpoint {args.endpoint} ({framework}), scenario {config.scenario.value}, "
              f"{max(len(samples), config.min_query_count)} queries")
        measurements = await run_scenario(config, samples, client)

    summary = summarize(measurements, config)
    write_measurements(args.measurements_out, measurements)
    write_summary(args.summary_out, summary)

    failed = sum(1 for m in measurements if not m.ok)
    print(f"completed {summary.completed_queries} queries "
          f"({failed} failed) in {summary.wall_time:.2f} s")
    print(f"throughput {summary.throughput_tokens_per_s:.2f} Tokens/s, "
          f"achieved {summary.achieved_qps:.2f} qps")
    print(f"latency p50/p90/p99 {summary.latency_p50:.1f}/{summary.latency_p90:.1f}/"
          f"{summary.latency_p99:.1f} ms, ttft p99 {summary.ttft_p99:.1f} ms")

    accuracy: AccuracyReport | None = None
    if args.references:
        refs = load_references(args.references)
        paired = [(m.output_text, refs[m.id], m.output_tokens)
                  for m in measurements if m.ok and m.id in refs]
        if paired:
            accuracy = evaluate_run(
                [p[0] for p in paired], [p[1] for p in paired], [p[2] for p in paired]
            )
            print(f"accuracy {accuracy.as_text()}")

    if not summary.valid:
        print(f"run INVALID: {', '.join(summary.reasons)}", file=sys.stderr)
        return EXIT_INVALID

    system = {
        "name": args.system_name,
        "accelerator.name": args.accelerator_name,
        "accelerator.vendor": args.accelerator_vendor,
        "accelerator.total_count": args.accelerator_count,
        "accelerator.count_per_node": args.accelerator_count,
        "number_of_nodes": 1,
        "type": "desk",
        "software.framework": framework,
        "software.operating_system": f"{platform.system()} {platform.release()}",
    }
    submission = {
        "division": args.division,
        "organization": args.organization,
        "availability": "available",
    }
    if args.model_params_b:
        system["model.number_of_parameters"] = args.model_params_b
    if args.model_dtype:
        system["model.weight_data_types"] = args.model_dtype
    system["model.name"] = args.model

    record = from_run(summary, accuracy, system, submission)
    store = DatasetStore(args.store)
    store.append(record)
    print(f"record appended to {store.path}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _build_config(args, parser)
    try:
        return asyncio.run(_run_async(args, config))
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return EXIT_IO
    except (json.JSONDecodeError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FlexBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


# ---------------------------------------------------------------------------
# sim


def cmd_sim(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        profile = SimProfile(
            prefill_base=args.prefill_base,
            prefill_per_token=args.prefill_per_token,
            decode_per_token=args.decode_per_token,
            max_concurrency=args.max_concurrency,
            jitter_pct=args.jitter_pct,
            seed=args.seed,
        )
    except ConfigError as exc:
        parser.error(str(exc))
    try:
        run_server(profile, port=args.port, host=args.host)
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


# ---------------------------------------------------------------------------
# dataset


def cmd_dataset(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    store = DatasetStore(args.store)
    try:
        if args.dataset_cmd == "ingest":
            return _dataset_ingest(store, args.files)
        if args.dataset_cmd == "validate":
            return _dataset_validate(store)
        if args.dataset_cmd == "featurize":
            return _dataset_featurize(store, args.out)
        if args.dataset_cmd == "export":
            return _dataset_export(store, args.out)
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"malformed record file: {exc}", file=sys.stderr)
        return EXIT_INVALID
    parser.error("unknown dataset subcommand")


def _dataset_ingest(store: DatasetStore, files: list[str]) -> int:
    ingested = 0
    errors = 0
    for path in files:
        for raw in load_records_file(path):
            try:
                store.append(ingest(raw))
                ingested += 1
            except IngestError as exc:
                errors += 1
                print(f"{path}: {exc}", file=sys.stderr)
    print(f"ingested {ingested} records, {errors} errors")
    return EXIT_OK if errors == 0 else EXIT_INVALID


def _dataset_validate(store: DatasetStore) -> int:
    failures = 0
    for i, record in enumerate(store.load()):
        violations = validate_record(record)
        if violations:
            failures += 1
            name = record.get("model.name", f"record[{i}]")
            print(f"{name}: violates {', '.join(violations)}")
    print(f"validated {len(store)} records, {failures} with violations")
    return EXIT_OK if failures == 0 else EXIT_INVALID


def _dataset_featurize(store: DatasetStore, out: str | None) -> int:
    rows = []
    errors = 0
    for record in store.load():
        try:
            fv = featurize(record)
        except FeaturizeError as exc:
            errors += 1
            print(f"skipped: {exc}", file=sys.stderr)
            continue
        rows.append(
            {
                "params_b": fv.params_b,
                "bytes_per_param": fv.bytes_per_param,
                "est_weights_gb": fv.est_weights_gb,
                "scenario": fv.scenario.value,
                "accelerator_key": fv.accelerator_key,
                "per_accel_throughput": fv.per_accel_throughput,
            }
        )
    text = "\n".join(json.dumps(r, sort_keys=True) for r in rows)
    if out:
        Path(out).write_text(text + ("\n" if text else ""), encoding="utf-8")
    else:
        print(text)
    print(f"featurized {len(rows)} records, {errors} skipped", file=sys.stderr)
    return EXIT_OK


def _dataset_export(store: DatasetStore, out: str | None) -> int:
    records = store.load()
    snapshot = json.dumps({"records": records, "count": len(records)}, sort_keys=True, indent=2)
    if out:
        Path(out).write_text(snapshot + "\n", encoding="utf-8")
        print(f"exported {len(records)} records to {out}")
    else:
        print(snapshot)
    return EXIT_OK


# ---------------------------------------------------------------------------
# predict


def cmd_predict(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    store = DatasetStore(args.store)
    try:
        costs = load_cost_book(args.costs) if args.costs else {}
        memory = load_memory_book(args.memory_book) if args.memory_book else {}
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return EXIT_IO
    except (json.JSONDecodeError, ValueError) as exc:
        print(f"bad config file: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        model = ThroughputModel.fit(store.load())
        query = PredictionQuery(
            params_b=args.params_b,
            weight_data_type=args.dtype,
            scenario=Scenario.SERVER if args.scenario == "server" else Scenario.OFFLINE,
            min_throughput=args.min_throughput,
            max_ttft=args.max_ttft,
            must_fit_memory=args.must_fit_memory,
            candidates=tuple(args.candidates.split(",")) if args.candidates else None,
        )
        ranked = model.rank(query, costs, memory, overhead_factor=args.overhead_factor)
    except (FitError, ConfigError, FeaturizeError, QueryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if args.json:
        print(json.dumps({"results": [p.to_dict() for p in ranked]}, indent=2))
        return EXIT_OK

    header = (
        f"{'accelerator':40} {'tok/s/accel':>12} {'count':>5} "
        f"{'tokens/$':>14} {'support':>7}  flags"
    )
    print(header)
    print("-" * len(header))
    for p in ranked:
        throughput = f"{p.predicted_per_accel_throughput:.1f}" if p.predicted_per_accel_throughput else "-"
        tpd = f"{p.tokens_per_dollar:.0f}" if p.tokens_per_dollar is not None else "-"
        flags = ",".join(p.constraint_tags) or ("extrapolated" if p.extrapolated else "ok")
        print(f"{p.accelerator_key:40} {throughput:>12} {p.accelerators_needed:>5} "
              f"{tpd:>14} {p.support:>7}  {flags}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve


def cmd_serve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        costs = load_cost_book(args.costs) if args.costs else {}
        memory = load_memory_book(args.memory_book) if args.memory_book else {}
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return EXIT_IO
    except (json.JSONDecodeError, ValueError) as exc:
        print(f"bad config file: {exc}", file=sys.stderr)
        return EXIT_IO
    ui_dir = args.ui_dir
    if ui_dir is None:
        default_ui = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = default_ui if default_ui.is_dir() else None
    app = create_app(
        args.store,
        cost_book=costs,
        memory_book=memory,
        ui_dir=ui_dir,
        overhead_factor=args.overhead_factor,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flexbench",
        description="LLM inference benchmarking: load generation, result dataset, "
        "and cost-efficiency prediction.",
    )
    parser.add_argument("--version", action="version", version=f"flexbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark scenario against an endpoint")
    run.add_argument("--scenario", choices=["offline", "server"], required=True)
    run.add_argument("--target-qps", type=float, default=None,
                     help="Poisson arrival rate (server scenario)")
    run.add_argument("--endpoint", required=True, help="base URL of the inference server")
    run.add_argument("--model", default="default", help="model name sent with each request")
    run.add_argument("--samples", default=None, help="sample file (text or JSON lines)")
    run.add_argument("--references", default=None,
                     help="JSON-lines reference file keyed by sample id, enables accuracy")
    run.add_argument("--max-output-tokens", type=int, default=32)
    run.add_argument("--min-query-count", type=int, default=100)
    run.add_argument("--min-duration", type=float, default=10.0, help="seconds")
    run.add_argument("--max-concurrency", type=int, default=8)
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--ttft-limit", type=float, default=None, help="ms, server validity bound")
    run.add_argument("--tpot-limit", type=float, default=None, help="ms, server validity bound")
    run.add_argument("--latency-preset", choices=sorted(LATENCY_PRESETS), default=None)
    run.add_argument("--timeout", type=float, default=120.0, help="per-request timeout, seconds")
    run.add_argument("--store", default="records.jsonl")
    run.add_argument("--measurements-out", default="measurements.jsonl")
    run.add_argument("--summary-out", default="summary.json")
    run.add_argument("--system-name", default=platform.node() or "desk")
    run.add_argument("--accelerator-name", default="unknown")
    run.add_argument("--accelerator-vendor", default=None)
    run.add_argument("--accelerator-count", type=int, default=1)
    run.add_argument("--organization", default="local")
    run.add_argument("--division", default="open")
    run.add_argument("--model-params-b", type=float, default=None)
    run.add_argument("--model-dtype", default=None)
    run.set_defaults(func=cmd_run)

    sim = sub.add_parser("sim", help="run the simulated inference server")
    sim.add_argument("--port", type=int, default=8008)
    sim.add_argument("--host", default="127.0.0.1")
    sim.add_argument("--prefill-base", type=float, default=50.0, help="ms")
    sim.add_argument("--prefill-per-token", type=float, default=0.0, help="ms/token")
    sim.add_argument("--decode-per-token", type=float, default=10.0, help="ms/token")
    sim.add_argument("--max-concurrency", type=int, default=4)
    sim.add_argument("--jitter-pct", type=float, default=0.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.set_defaults(func=cmd_sim)

    dataset = sub.add_parser("dataset", help="curate the result dataset")
    dataset.add_argument("--store", default="records.jsonl")
    dsub = dataset.add_subparsers(dest="dataset_cmd", required=True)
    d_ingest = dsub.add_parser("ingest", help="normalize and append raw records")
    d_ingest.add_argument("files", nargs="+")
    dsub.add_parser("validate", help="report per-record invariant violations")
    d_feat = dsub.add_parser("featurize", help="emit engineered features per record")
    d_feat.add_argument("--out", default=None)
    d_export = dsub.add_parser("export", help="write the UI-facing snapshot")
    d_export.add_argument("--out", default=None)
    dataset.set_defaults(func=cmd_dataset)

    predict = sub.add_parser("predict", help="rank accelerators by tokens per dollar")
    predict.add_argument("--store", default="records.jsonl")
    predict.add_argument("--params-b", type=float, required=True)
    predict.add_argument("--dtype", required=True)
    predict.add_argument("--scenario", choices=["offline", "server"], required=True)
    predict.add_argument("--min-throughput", type=float, default=None)
    predict.add_argument("--max-ttft", type=float, default=None)
    predict.add_argument("--must-fit-memory", action="store_true")
    predict.add_argument("--candidates", default=None, help="comma-separated accelerator keys")
    predict.add_argument("--costs", default=None, help="JSON cost book (accelerator -> $/h)")
    predict.add_argument("--memory-book", default=None, help="JSON memory book (accelerator -> GB)")
    predict.add_argument("--overhead-factor", type=float, default=DEFAULT_OVERHEAD_FACTOR)
    predict.add_argument("--json", action="store_true")
    predict.set_defaults(func=cmd_predict)

    serve = sub.add_parser("serve", help="serve the dataset, predictor, and dashboard")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--store", default="records.jsonl")
    serve.add_argument("--costs", default=None)
    serve.add_argument("--memory-book", default=None)
    serve.add_argument("--ui-dir", default=None)
    serve.add_argument("--overhead-factor", type=float, default=DEFAULT_OVERHEAD_FACTOR)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
