import math
import random

import pytest

from flexbench.dataset import ingest
from flexbench.errors import ConfigError, FitError, NoDataError
from flexbench.predictor import PredictionQuery, ThroughputModel
from flexbench.scenario import Scenario


def record(params_b, throughput, accel="A100", dtype="bfloat16", scenario="Server",
           count=1, units="Tokens/s", ttft_p99=None):
    raw = {
        "metrics.result": throughput * count,
        "metrics.result_per_accelerator": throughput,
        "metrics.units": units,
        "model.name": f"model-{params_b}b",
        "model.number_of_parameters": params_b,
        "model.weight_data_types": dtype,
        "submission.scenario": scenario,
        "system.accelerator.name": accel,
        "system.accelerator.total_count": count,
    }
    if ttft_p99 is not None:
        raw["metrics.ttft_p99_ms"] = ttft_p99
    return ingest(raw)


def law_records(accel="A100", sizes=(1, 2, 4, 8, 16, 32, 70), scale=1000.0):
    return [record(p, scale / p, accel=accel) for p in sizes]


def server_query(params_b=8.0, dtype="bfloat16", **kw):
    return PredictionQuery(params_b=params_b, weight_data_type=dtype,
                           scenario=Scenario.SERVER, **kw)


# ---------------------------------------------------------------------------
# Fitting and prediction


def test_recovers_known_power_law_exponent():
    model = ThroughputModel.fit(law_records())
    group = model._groups[("A100", "Server")]
    assert group.coeffs is not None
    b = group.coeffs[1]
    assert abs(b - (-1.0)) < 0.01


def test_training_points_reproduced_by_regression():
    model = ThroughputModel.fit(law_records())
    for p in (1, 2, 4, 8, 16, 32, 70):
        est = model.predict(server_query(params_b=p), "A100")
        assert est.per_accel_throughput == pytest.approx(1000.0 / p, rel=1e-3)
        assert est.method == "regression"


def test_interpolates_the_law_between_training_sizes():
    model = ThroughputModel.fit(law_records())
    est = model.predict(server_query(params_b=5.0), "A100")
    assert est.per_accel_throughput == pytest.approx(200.0, rel=0.01)


def test_single_record_group_uses_nearest_neighbor():
    model = ThroughputModel.fit([record(8.0, 2631.93, accel="H100 80GB HBM3")])
    est = model.predict(server_query(params_b=8.0, dtype="bfloat16"), "H100 80GB HBM3")
    assert est.per_accel_throughput == pytest.approx(2631.93)
    assert est.support == 1
    assert est.method == "nearest-neighbor"


def test_exact_training_point_in_sparse_group():
    records = [record(8.0, 500.0), record(8.0, 700.0)]  # one distinct size -> NN
    model = ThroughputModel.fit(records)
    est = model.predict(server_query(params_b=8.0), "A100")
    assert est.method == "nearest-neighbor"
    assert est.per_accel_throughput == pytest.approx(600.0)  # mean of exact matches


def test_nearest_neighbor_weights_by_inverse_distance():
    records = [record(4.0, 400.0), record(16.0, 100.0)]
    model = ThroughputModel.fit(records)
    est = model.predict(server_query(params_b=8.0), "A100")
    # log-equidistant between the two points -> plain average.
    assert est.per_accel_throughput == pytest.approx(250.0)


def test_fit_rejects_dataset_without_token_throughput():
    with pytest.raises(FitError):
        ThroughputModel.fit([record(8.0, 100.0, units="Queries/s")])


def test_recovers_data_type_coefficient():
    # throughput = 1000 * exp(-0.5 * bytes_per_param) / params_b
    records = []
    for dtype, width in (("fp32", 4.0), ("fp16", 2.0), ("int8", 1.0)):
        for p in (2.0, 8.0, 32.0):
            records.append(record(p, 1000.0 * math.exp(-0.5 * width) / p, dtype=dtype))
    model = ThroughputModel.fit(records)
    coeffs = model._groups[("A100", "Server")].coeffs
    assert coeffs is not None
    assert coeffs[1] == pytest.approx(-1.0, abs=1e-6)
    assert coeffs[2] == pytest.approx(-0.5, abs=1e-6)
    est = model.predict(server_query(params_b=4.0, dtype="fp16"), "A100")
    assert est.per_accel_throughput == pytest.approx(1000.0 * math.exp(-1.0) / 4.0, rel=1e-6)


def test_predict_flags_extrapolation():
    model = ThroughputModel.fit(law_records(sizes=(4, 8, 16)))
    assert not model.predict(server_query(params_b=8.0), "A100").extrapolated
    assert model.predict(server_query(params_b=100.0), "A100").extrapolated


def test_predict_unknown_group_raises_no_data():
    model = ThroughputModel.fit(law_records())
    with pytest.raises(NoDataError):
        model.predict(server_query(), "TPU v5e")
    with pytest.raises(NoDataError):  # right accelerator, missing scenario
        model.predict(
            PredictionQuery(params_b=8, weight_data_type="bfloat16",
                            scenario=Scenario.OFFLINE),
            "A100",
        )


def test_predictions_nonincreasing_when_b_negative():
    model = ThroughputModel.fit(law_records())
    group = model._groups[("A100", "Server")]
    assert group.coeffs[1] < 0
    estimates = [
        model.predict(server_query(params_b=p), "A100").per_accel_throughput
        for p in (1, 2, 3, 5, 8, 13, 21, 34, 55)
    ]
    assert all(b <= a for a, b in zip(estimates, estimates[1:]))


def test_scenarios_fit_separately():
    records = [record(8.0, 100.0, scenario="Server"), record(8.0, 900.0, scenario="Offline")]
    model = ThroughputModel.fit(records)
    assert model.predict(server_query(), "A100").per_accel_throughput == pytest.approx(100.0)
    offline = PredictionQuery(params_b=8, weight_data_type="bfloat16",
                              scenario=Scenario.OFFLINE)
    assert model.predict(offline, "A100").per_accel_throughput == pytest.approx(900.0)


# ---------------------------------------------------------------------------
# Ranking


def test_cheaper_accelerator_ranks_first_with_double_efficiency():
    records = [record(8.0, 1000.0, accel="A"), record(8.0, 1000.0, accel="B")]
    model = ThroughputModel.fit(records)
    ranked = model.rank(server_query(), costs={"A": 2.0, "B": 4.0})
    assert [p.accelerator_key for p in ranked] == ["A", "B"]
    assert ranked[0].tokens_per_dollar == pytest.approx(2 * ranked[1].tokens_per_dollar)
    assert ranked[0].tokens_per_dollar == pytest.approx(1000.0 * 3600.0 / 2.0)


def test_memory_fit_determines_accelerator_count():
    # 70 B fp16 = 140 GB; x1.2 overhead = 168 GB; ceil(168/80) = 3 cards.
    model = ThroughputModel.fit([record(70.0, 300.0, dtype="fp16", accel="H100 80GB")])
    query = server_query(params_b=70.0, dtype="fp16", must_fit_memory=True)
    ranked = model.rank(query, costs={"H100 80GB": 2.0}, memory_gb={"H100 80GB": 80.0})
    assert ranked[0].accelerators_needed == 3
    assert ranked[0].fits_memory
    assert ranked[0].feasible


def test_min_throughput_above_everything_tags_all_infeasible():
    records = [record(8.0, 100.0, accel="A"), record(8.0, 200.0, accel="B")]
    model = ThroughputModel.fit(records)
    ranked = model.rank(server_query(min_throughput=10_000.0), costs={"A": 1.0, "B": 1.0})
    assert all("min_throughput" in p.constraint_tags for p in ranked)
    assert not any(p.feasible for p in ranked)


def test_throughput_constraint_counts_all_needed_accelerators():
    # 2 cards needed for memory; 2 x 300 = 600 clears a 500 floor.
    model = ThroughputModel.fit([record(70.0, 300.0, dtype="fp16", accel="X 100GB")])
    query = server_query(params_b=70.0, dtype="fp16", min_throughput=500.0,
                         must_fit_memory=True)
    ranked = model.rank(query, costs={"X 100GB": 1.0}, memory_gb={"X 100GB": 100.0})
    assert ranked[0].accelerators_needed == 2
    assert ranked[0].feasible


def test_missing_cost_is_reported_but_not_ranked():
    records = [record(8.0, 500.0, accel="A"), record(8.0, 9999.0, accel="B")]
    model = ThroughputModel.fit(records)
    ranked = model.rank(server_query(), costs={"A": 1.0})
    assert ranked[0].accelerator_key == "A"
    assert ranked[-1].accelerator_key == "B"
    assert "no-cost" in ranked[-1].constraint_tags
    assert ranked[-1].tokens_per_dollar is None


def test_costed_candidate_without_data_is_tagged():
    model = ThroughputModel.fit([record(8.0, 500.0, accel="A")])
    ranked = model.rank(server_query(), costs={"A": 1.0, "Mystery": 1.0})
    mystery = next(p for p in ranked if p.accelerator_key == "Mystery")
    assert "no-data" in mystery.constraint_tags
    assert mystery.predicted_per_accel_throughput is None
    assert mystery.support == 0


def test_must_fit_memory_without_memory_data_is_infeasible():
    model = ThroughputModel.fit([record(8.0, 500.0, accel="A")])
    ranked = model.rank(server_query(must_fit_memory=True), costs={"A": 1.0})
    assert "no-memory-data" in ranked[0].constraint_tags


def test_max_ttft_checked_against_observed_evidence():
    records = [record(8.0, 500.0, accel="A", ttft_p99=900.0),
               record(8.0, 500.0, accel="B", ttft_p99=80.0)]
    model = ThroughputModel.fit(records)
    ranked = model.rank(server_query(max_ttft=100.0), costs={"A": 1.0, "B": 1.0})
    by_key = {p.accelerator_key: p for p in ranked}
    assert "max_ttft" in by_key["A"].constraint_tags
    assert by_key["B"].feasible
    assert ranked[0].accelerator_key == "B"


def test_rank_scale_invariance_under_uniform_cost_scaling():
    rng = random.Random(17)
    accels = [f"ACC{i}" for i in range(6)]
    records = []
    for i, accel in enumerate(accels):
        for p in (4, 8, 30):
            records.append(record(p, 5000.0 / p * (1 + 0.2 * i), accel=accel))
    model = ThroughputModel.fit(records)
    query = server_query(params_b=12.0)
    for _ in range(20):
        costs = {a: rng.uniform(0.5, 9.0) for a in accels}
        base = [p.accelerator_key for p in model.rank(query, costs)]
        k = rng.uniform(0.01, 50.0)
        scaled = [p.accelerator_key for p in
                  model.rank(query, {a: c * k for a, c in costs.items()})]
        assert base == scaled


def test_rank_rejects_non_positive_cost():
    model = ThroughputModel.fit([record(8.0, 500.0, accel="A")])
    with pytest.raises(ConfigError):
        model.rank(server_query(), costs={"A": 0.0})


def test_query_validation():
    with pytest.raises(ConfigError):
        PredictionQuery(params_b=0.0, weight_data_type="fp16", scenario=Scenario.SERVER)


def test_candidate_subset_respected():
    records = [record(8.0, 500.0, accel="A"), record(8.0, 600.0, accel="B")]
    model = ThroughputModel.fit(records)
    ranked = model.rank(server_query(candidates=("B",)), costs={"A": 1.0, "B": 1.0})
    assert [p.accelerator_key for p in ranked] == ["B"]


def test_tokens_per_dollar_formula():
    model = ThroughputModel.fit([record(8.0, 432.0, accel="A")])
    ranked = model.rank(server_query(), costs={"A": 3.0})
    assert ranked[0].tokens_per_dollar == pytest.approx(432.0 * 3600.0 / 3.0)
    assert math.isclose(ranked[0].tokens_per_dollar, 518400.0)
