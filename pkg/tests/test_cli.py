import json
import subprocess
import sys
from pathlib import Path

import pytest

from flexbench.simserver import SimProfile, completion_text

DATA_DIR = Path(__file__).parent / "data"


def flexbench(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "flexbench.cli", *args],
        capture_output=True, text=True, cwd=cwd, timeout=120,
    )


def run_args(tmp_path, endpoint, *extra):
    return [
        "run", "--scenario", "offline", "--endpoint", endpoint,
        "--samples", str(tmp_path / "samples.txt"),
        "--max-output-tokens", "8", "--min-query-count", "20",
        "--min-duration", "0.01", "--max-concurrency", "8",
        "--store", str(tmp_path / "records.jsonl"),
        "--measurements-out", str(tmp_path / "measurements.jsonl"),
        "--summary-out", str(tmp_path / "summary.json"),
        *extra,
    ]


@pytest.fixture
def fast_sim(sim_factory):
    return sim_factory(SimProfile(prefill_base=0.0, decode_per_token=2.0, max_concurrency=8))


@pytest.fixture
def sample_file(tmp_path):
    path = tmp_path / "samples.txt"
    path.write_text("".join(f"sample prompt number {i}\n" for i in range(5)))
    return path


def test_usage_error_server_without_qps(tmp_path):
    proc = flexbench("run", "--scenario", "server", "--endpoint", "http://127.0.0.1:1")
    assert proc.returncode == 2
    assert "target-qps" in proc.stderr


def test_unreachable_endpoint_exits_3(tmp_path, sample_file):
    proc = flexbench(*run_args(tmp_path, "http://127.0.0.1:9"))
    assert proc.returncode == 3
    assert "transport" in proc.stderr.lower()


def test_offline_run_writes_all_artifacts(tmp_path, fast_sim, sample_file):
    proc = flexbench(*run_args(tmp_path, fast_sim.base_url))
    assert proc.returncode == 0, proc.stderr

    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["scenario"] == "Offline"
    assert summary["completed_queries"] == 20
    assert summary["valid"] is True
    assert summary["throughput_tokens_per_s"] > 0

    lines = (tmp_path / "measurements.jsonl").read_text().splitlines()
    assert len(lines) == 20
    first = json.loads(lines[0])
    assert {"id", "scheduled_at", "issued_at", "first_token_at", "completed_at",
            "output_tokens", "output_text", "error"} <= set(first)

    records = [json.loads(l) for l in (tmp_path / "records.jsonl").read_text().splitlines()]
    assert len(records) == 1
    assert records[0]["metrics.units"] == "Tokens/s"
    assert records[0]["submission.scenario"] == "Offline"
    assert records[0]["software.framework"].startswith("flexsim")


def test_repeat_run_reproduces_token_metrics(tmp_path, fast_sim, sample_file):
    assert flexbench(*run_args(tmp_path, fast_sim.base_url)).returncode == 0
    first = json.loads((tmp_path / "summary.json").read_text())
    assert flexbench(*run_args(tmp_path, fast_sim.base_url)).returncode == 0
    second = json.loads((tmp_path / "summary.json").read_text())
    for key in ("completed_queries", "total_output_tokens", "tokens_per_sample_mean"):
        assert first[key] == second[key]


def test_invalid_run_exits_1_with_reason(tmp_path, fast_sim, sample_file):
    proc = flexbench(*run_args(tmp_path, fast_sim.base_url), "--min-duration", "9999")
    assert proc.returncode == 1
    assert "min_duration" in proc.stderr
    assert not (tmp_path / "records.jsonl").exists()  # invalid runs are not stored


def test_run_with_references_records_accuracy(tmp_path, fast_sim, sample_file):
    prompts = [f"sample prompt number {i}" for i in range(5)]
    refs = tmp_path / "refs.jsonl"
    with open(refs, "w") as f:
        for i in range(20):
            text = completion_text(prompts[i % 5], 8)
            f.write(json.dumps({"id": i, "reference": text}) + "\n")
    proc = flexbench(*run_args(tmp_path, fast_sim.base_url), "--references", str(refs))
    assert proc.returncode == 0, proc.stderr
    record = json.loads((tmp_path / "records.jsonl").read_text().splitlines()[0])
    assert record["metrics.accuracy"].startswith("ROUGE1: 100.0000  ROUGE2: 100.0000")
    assert "TOKENS_PER_SAMPLE: 8.0" in record["metrics.accuracy"]


def test_dataset_ingest_reference_entry(tmp_path):
    store = tmp_path / "store.jsonl"
    proc = flexbench("dataset", "--store", str(store), "ingest",
                     str(DATA_DIR / "openmlperf_sample.json"))
    assert proc.returncode == 0
    assert "ingested 1 records, 0 errors" in proc.stdout
    record = json.loads(store.read_text())
    assert record["metrics.result"] == 2631.93


def test_dataset_ingest_missing_file_exits_3(tmp_path):
    proc = flexbench("dataset", "--store", str(tmp_path / "s.jsonl"), "ingest",
                     str(tmp_path / "nope.json"))
    assert proc.returncode == 3
    assert "not found" in proc.stderr


def test_dataset_validate_flags_bad_total_count(tmp_path):
    store = tmp_path / "store.jsonl"
    record = {"metrics.result": 10.0, "metrics.units": "Tokens/s",
              "system.accelerator.total_count": 0, "model.name": "broken"}
    store.write_text(json.dumps(record) + "\n")
    proc = flexbench("dataset", "--store", str(store), "validate")
    assert proc.returncode == 1
    assert "system.accelerator.total_count" in proc.stdout


def test_dataset_export_empty_store(tmp_path):
    out = tmp_path / "snapshot.json"
    proc = flexbench("dataset", "--store", str(tmp_path / "missing.jsonl"),
                     "export", "--out", str(out))
    assert proc.returncode == 0
    assert json.loads(out.read_text()) == {"records": [], "count": 0}


def test_dataset_featurize_emits_features(tmp_path):
    store = tmp_path / "store.jsonl"
    flexbench("dataset", "--store", str(store), "ingest",
              str(DATA_DIR / "openmlperf_sample.json"))
    out = tmp_path / "features.jsonl"
    proc = flexbench("dataset", "--store", str(store), "featurize", "--out", str(out))
    assert proc.returncode == 0
    feature = json.loads(out.read_text().splitlines()[0])
    assert feature["params_b"] == 8.0
    assert feature["est_weights_gb"] == 16.0
    assert feature["accelerator_key"] == "NVIDIA H100 80GB HBM3"


def test_predict_outputs_ranked_json(tmp_path):
    store = tmp_path / "store.jsonl"
    flexbench("dataset", "--store", str(store), "ingest",
              str(DATA_DIR / "openmlperf_sample.json"))
    costs = tmp_path / "costs.json"
    costs.write_text(json.dumps({"NVIDIA H100 80GB HBM3": 2.0}))
    proc = flexbench("predict", "--store", str(store), "--params-b", "8",
                     "--dtype", "bfloat16", "--scenario", "server",
                     "--costs", str(costs), "--json")
    assert proc.returncode == 0, proc.stderr
    results = json.loads(proc.stdout)["results"]
    assert results[0]["accelerator_key"] == "NVIDIA H100 80GB HBM3"
    assert results[0]["predicted_per_accel_throughput"] == pytest.approx(2631.93)
    assert results[0]["support"] == 1


def test_predict_on_empty_store_fails_cleanly(tmp_path):
    proc = flexbench("predict", "--store", str(tmp_path / "none.jsonl"),
                     "--params-b", "8", "--dtype", "fp16", "--scenario", "server")
    assert proc.returncode == 1
    assert "error" in proc.stderr


def test_version_flag():
    proc = flexbench("--version")
    assert proc.returncode == 0
    assert "flexbench" in proc.stdout


def test_dataset_ingest_malformed_file_exits_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[{not json")
    proc = flexbench("dataset", "--store", str(tmp_path / "s.jsonl"), "ingest", str(bad))
    assert proc.returncode == 1
    assert "malformed" in proc.stderr


def test_latency_preset_fills_unset_limits():
    from flexbench.cli import _build_config, build_parser

    parser = build_parser()
    args = parser.parse_args([
        "run", "--scenario", "server", "--target-qps", "5",
        "--endpoint", "http://x", "--latency-preset", "datacenter-llm",
    ])
    config = _build_config(args, parser)
    assert config.ttft_limit == 2000.0
    assert config.tpot_limit == 200.0


def test_explicit_limits_beat_the_preset():
    from flexbench.cli import _build_config, build_parser

    parser = build_parser()
    args = parser.parse_args([
        "run", "--scenario", "server", "--target-qps", "5",
        "--endpoint", "http://x", "--latency-preset", "datacenter-llm",
        "--ttft-limit", "150",
    ])
    config = _build_config(args, parser)
    assert config.ttft_limit == 150.0
    assert config.tpot_limit == 200.0


def test_synthetic_samples_are_deterministic():
    from flexbench.cli import synthetic_samples

    a = synthetic_samples(5, 16, seed=3)
    b = synthetic_samples(5, 16, seed=3)
    assert [s.prompt_text for s in a] == [s.prompt_text for s in b]
    assert all(s.requested_output_tokens == 16 for s in a)
    assert len({s.id for s in a}) == 5


def test_load_samples_accepts_json_lines(tmp_path):
    from flexbench.cli import load_samples

    path = tmp_path / "mixed.txt"
    path.write_text(
        'plain prose prompt\n{"id": 7, "prompt": "structured one", "max_tokens": 4}\n'
    )
    samples = load_samples(path, max_output_tokens=32)
    assert samples[0].prompt_text == "plain prose prompt"
    assert samples[0].requested_output_tokens == 32
    assert samples[1].id == 7
    assert samples[1].requested_output_tokens == 4
