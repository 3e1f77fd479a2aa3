"""
Tests for evaluation: source pools, generalizability metrics, suites and the
written reports.
"""
import json
import os
import shutil

import pandas as pd
import pytest

from model.corpus import load_case
from model.evaluation import (
    developer_suite,
    evaluate_case,
    generalizable_at,
    generalized_suite,
    metric_direct_followups,
    metric_generalizable,
    metric_valid_followups,
    pair_suite,
    prepare_source_pool,
    write_evaluation,
)
from model.pipeline import AssessmentReport, PipelineConfig, run_adopt


@pytest.fixture(scope="module")
def adopted(corpus_dir):
    case = load_case(os.path.join(corpus_dir, "session_expiry"))
    return case, run_adopt(case, PipelineConfig())


# Metrics

@pytest.mark.parametrize("count,size,expected", [
    (6, 6, {0: True, 75: True, 100: True}),
    (5, 6, {0: True, 75: True, 100: False}),
    (4, 6, {0: True, 75: False, 100: False}),
    (1, 6, {0: True, 75: False, 100: False}),
    (0, 6, {0: False, 75: False, 100: False}),
    (0, 0, {0: False, 75: False, 100: False}),
    (3, 4, {0: True, 75: True, 100: False}),
])
def test_generalizable_at(count, size, expected):
    assert generalizable_at(count, size) == expected


def test_metric_generalizable(adopted):
    _, result = adopted
    assert metric_generalizable(result.report) == {0: True, 75: True, 100: True}
    empty = AssessmentReport(result.report.candidates, result.report.pool, None)
    assert metric_generalizable(empty) == {0: False, 75: False, 100: False}


def test_followup_metrics(adopted):
    case, result = adopted
    assert metric_valid_followups(result.chosen, result.measured_pool, result.model, case.registry) == (6, 6)
    assert metric_valid_followups(None, result.measured_pool, result.model, case.registry) == (0, 6)
    assert metric_direct_followups(result.preparation) == (2, 2)


# Pools

def test_pool_is_filtered_by_ground_truth(adopted):
    case, _ = adopted
    pool = prepare_source_pool(case, PipelineConfig())
    assert pool.filtered
    assert pool.inputs[0] == {"ttl": 30}
    assert len(pool.inputs) == 6
    assert pool.read()["size"] == 6


def test_pool_without_ground_truth(tmp_path, corpus_dir):
    target = tmp_path / "session_expiry"
    shutil.copytree(os.path.join(corpus_dir, "session_expiry"), target)
    os.remove(target / "ground_truth.mtl")
    case = load_case(str(target))
    pool = prepare_source_pool(case, PipelineConfig())
    assert not pool.filtered
    assert pool.inputs[0] == {"ttl": 30}

    result = run_adopt(case, PipelineConfig())
    assert result.measurement["over"] == "assessment-pool"
    assert result.measurement["pool"] is None


# Suites

def test_suites(adopted):
    case, result = adopted
    developer = developer_suite(case, result.model)
    assert [t.name for t in developer] == ["test_longer_ttl_expires_later", "test_expires_in_future"]
    assert len(pair_suite(result.model, result.preparation)) == 2
    generalized = generalized_suite(result.model, result.chosen, result.measured_pool, case.registry)
    assert len(generalized) == 6
    assert generalized[0].name == "test_longer_ttl_expires_later_generalized_0"
    assert all(t.run(case.registry).ok for t in developer + generalized)
    assert generalized_suite(result.model, None, result.measured_pool, case.registry) == []


def test_evaluate_case(adopted):
    case, result = adopted
    evaluation = evaluate_case(case, PipelineConfig(), result)
    assert evaluation.generalizable == {0: True, 75: True, 100: True}
    assert evaluation.measured_over == "evaluation-pool"
    adequacy = evaluation.adequacy
    assert list(adequacy.mutation_score) == ["D", "D+M", "D+L", "D+L+M"]
    assert [m.description for m in adequacy.mutants] == ["+ -> -", "+ -> *", "+ -> /"]
    assert adequacy.equivalent == frozenset()
    assert set(adequacy.mutation_score.values()) == {0.666667}
    assert adequacy.line_coverage["D"] == 1.0


def test_write_evaluation(adopted, tmp_path):
    case, result = adopted
    evaluation = evaluate_case(case, PipelineConfig(), result)
    write_evaluation([evaluation], str(tmp_path))
    with open(tmp_path / "session_expiry" / "eval.json") as f:
        data = json.load(f)
    assert data["generalizable"] == {"0": True, "75": True, "100": True}
    assert data["valid_followups"] == [6, 6]
    with open(tmp_path / "summary.json") as f:
        summary = json.load(f)
    assert summary["cases"] == ["session_expiry"]
    assert summary["generalizable_counts"] == {"0": 1, "75": 1, "100": 1}
    assert summary["adequacy"]["D"]["killed"] == 2
    frame = pd.read_csv(tmp_path / "adequacy.csv")
    assert list(frame["case"]) == ["session_expiry"] * 4 + ["ALL"] * 4
