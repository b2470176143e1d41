import json

import pytest
from fastapi.testclient import TestClient

from flexbench.api import create_app
from flexbench.dataset import DatasetStore, ingest
from flexbench.predictor import PredictionQuery, ThroughputModel
from flexbench.scenario import Scenario


def seed_store(tmp_path, records):
    store = DatasetStore(tmp_path / "records.jsonl")
    for r in records:
        store.append(r)
    return store


def throughput_record(accel="A100", params_b=8.0, throughput=500.0, division="open"):
    return ingest({
        "metrics.result": throughput,
        "metrics.units": "Tokens/s",
        "model.name": f"model-{params_b}b",
        "model.number_of_parameters": params_b,
        "model.weight_data_types": "bfloat16",
        "submission.division": division,
        "submission.scenario": "Server",
        "system.accelerator.name": accel,
        "system.accelerator.vendor": "NVIDIA",
        "system.accelerator.total_count": 1,
    })


@pytest.fixture
def client(tmp_path, sample_record_raw):
    store = seed_store(tmp_path, [ingest(sample_record_raw),
                                  throughput_record(accel="A100", division="closed")])
    app = create_app(store.path, cost_book={"NVIDIA A100": 2.0})
    return TestClient(app)


def test_health_reports_record_count(client):
    resp = client.get("/api/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["records"] == 2


def test_records_filter_by_division(client):
    resp = client.get("/api/records", params={"submission.division": "open"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["count"] == 1
    assert body["records"][0]["model.name"] == "DeepSeek-R1-Distill-Llama-8B"


def test_records_unknown_filter_key_is_400(client):
    resp = client.get("/api/records", params={"bogus.key": "x"})
    assert resp.status_code == 400
    assert "bogus.key" in resp.json()["detail"]


def test_records_round_trip_byte_identically(client, tmp_path):
    records = client.get("/api/records").json()["records"]
    for record in records:
        exported = json.dumps(record, sort_keys=True)
        re_ingested = json.dumps(ingest(json.loads(exported)), sort_keys=True)
        assert exported == re_ingested


def test_meta_lists_distinct_values(client):
    body = client.get("/api/meta").json()
    assert body["accelerators"] == ["NVIDIA A100", "NVIDIA H100 80GB HBM3"]
    assert body["models"] == ["DeepSeek-R1-Distill-Llama-8B", "model-8.0b"]
    assert body["scenarios"] == ["Server"]
    assert "bfloat16" in body["data_types"]
    assert body["divisions"] == ["closed", "open"]
    assert body["vendors"] == ["NVIDIA"]


def test_predict_ranks_by_cost_efficiency(tmp_path):
    store = seed_store(tmp_path, [throughput_record(accel="A", throughput=1000.0),
                                  throughput_record(accel="B", throughput=1000.0)])
    client = TestClient(create_app(store.path))
    resp = client.post("/api/predict", json={
        "params_b": 8.0, "weight_data_type": "bfloat16", "scenario": "Server",
        "costs": {"NVIDIA A": 2.0, "NVIDIA B": 4.0},
    })
    assert resp.status_code == 200
    results = resp.json()["results"]
    assert [r["accelerator_key"] for r in results] == ["NVIDIA A", "NVIDIA B"]
    assert results[0]["tokens_per_dollar"] == pytest.approx(2 * results[1]["tokens_per_dollar"])


def test_predict_matches_library_ranking(client, tmp_path, sample_record_raw):
    body = {
        "params_b": 8.0, "weight_data_type": "bfloat16", "scenario": "Server",
        "costs": {"NVIDIA H100 80GB HBM3": 4.0, "NVIDIA A100": 2.0},
    }
    api_results = client.post("/api/predict", json=body).json()["results"]

    store_records = [ingest(sample_record_raw), throughput_record(accel="A100",
                                                                  division="closed")]
    model = ThroughputModel.fit(store_records)
    query = PredictionQuery(params_b=8.0, weight_data_type="bfloat16",
                            scenario=Scenario.SERVER)
    direct = model.rank(query, costs=body["costs"])
    assert [r["accelerator_key"] for r in api_results] == [p.accelerator_key for p in direct]
    assert [r["tokens_per_dollar"] for r in api_results] == [
        p.tokens_per_dollar for p in direct
    ]


def test_predict_cost_book_merges_with_overrides(client):
    # Server-side book prices A100; the request prices only the H100.
    resp = client.post("/api/predict", json={
        "params_b": 8.0, "weight_data_type": "bfloat16", "scenario": "Server",
        "costs": {"NVIDIA H100 80GB HBM3": 10.0},
    })
    results = resp.json()["results"]
    priced = {r["accelerator_key"]: r["tokens_per_dollar"] for r in results}
    assert priced["NVIDIA A100"] is not None
    assert priced["NVIDIA H100 80GB HBM3"] is not None


def test_predict_rejects_malformed_bodies(client):
    assert client.post("/api/predict", json={"scenario": "Server"}).status_code == 400
    assert client.post("/api/predict", json={
        "params_b": -1, "weight_data_type": "fp16", "scenario": "Server"
    }).status_code == 400
    assert client.post("/api/predict", json={
        "params_b": 8, "weight_data_type": "fp16", "scenario": "SingleStream"
    }).status_code == 400
    assert client.post("/api/predict", json={
        "params_b": 8, "weight_data_type": "mystery4", "scenario": "Server"
    }).status_code == 400


def test_predict_on_empty_store_is_503(tmp_path):
    client = TestClient(create_app(tmp_path / "empty.jsonl"))
    resp = client.post("/api/predict", json={
        "params_b": 8.0, "weight_data_type": "bfloat16", "scenario": "Server",
    })
    assert resp.status_code == 503
    assert "no usable data" in resp.json()["detail"]


def test_store_reload_swaps_state(tmp_path):
    store = seed_store(tmp_path, [throughput_record(accel="A")])
    client = TestClient(create_app(store.path))
    assert client.get("/api/health").json()["records"] == 1
    store.append(throughput_record(accel="B"))
    assert client.get("/api/health").json()["records"] == 2
    meta = client.get("/api/meta").json()
    assert "NVIDIA B" in meta["accelerators"]


def test_root_serves_placeholder_without_ui(client):
    resp = client.get("/")
    assert resp.status_code == 200
    assert "flexbench" in resp.text


def test_root_serves_ui_bundle_when_present(tmp_path):
    ui = tmp_path / "dist"
    ui.mkdir()
    (ui / "index.html").write_text("<html><body>dashboard shell</body></html>")
    store = seed_store(tmp_path, [throughput_record()])
    client = TestClient(create_app(store.path, ui_dir=ui))
    resp = client.get("/")
    assert resp.status_code == 200
    assert "dashboard shell" in resp.text
