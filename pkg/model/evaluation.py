"""
Evaluation of adopted MRs

Source pools for measuring generalizability, the n%-generalizable and
valid-follow-up metrics, and the adequacy comparison between the developer
suite (D), tests from generated pairs (L) and the generalized MR (M).
"""
import math
import os
from dataclasses import dataclass, field, replace

import pandas as pd

from __init__ import app
from model.corpus import _write_json_file
from model.inputs import generate_source_inputs
from model.mtc import (
    Applicability, check_applicability, hardcoded_pair, instantiate_with_transformation, substitute_inputs,
    transformation_functions,
)
from model.mutation import SuiteTest, flag_equivalent, mutate_sut, ratio, run_mutation_testing


THRESHOLDS = (0, 75, 100)


@dataclass
class SourcePool:
    case: str
    inputs: list
    raw_count: int = 0
    dedup_removed: int = 0
    invalid_removed: int = 0
    filtered: bool = True

    def read(self):
        return {
            "case": self.case,
            "size": len(self.inputs),
            "raw_count": self.raw_count,
            "dedup_removed": self.dedup_removed,
            "invalid_removed": self.invalid_removed,
            "filtered": self.filtered,
        }


def prepare_source_pool(case, cfg, backend=None, model=None, registry=None, hardcoded=None):
    """Evaluation pool: the hard-coded source plus generated, deduped, valid sources.

    Args:
        case: corpus Case.
        cfg: PipelineConfig; pool_examples x pool_repetitions inputs are requested.
        backend: optional backend instance.
        model, registry, hardcoded: reuse what the caller already extracted.

    Returns:
        SourcePool; validity filtering needs the case's ground truth and is
        skipped with a warning without one.
    """
    model = model or case.model()
    registry = registry or case.registry
    hard = hardcoded or hardcoded_pair(model, registry, cfg.limits)
    gen = replace(cfg.gen, examples_per_request=cfg.pool_examples, repetitions=cfg.pool_repetitions,
                  fixture_dir=cfg.gen.fixture_dir or case.fixture_dir)
    batch = generate_source_inputs(model, registry, gen, cfg.limits, purpose="pool", backend=backend,
                                   exclude=(hard.source,))
    pool = SourcePool(case.name, [hard.source], batch.raw_count, batch.dedup_removed, len(batch.rejected))
    if case.ground_truth is None:
        app.logger.warning(f"'{case.name}' has no ground truth; source pool is not filtered for validity")
        pool.inputs += batch.inputs
        pool.filtered = False
        return pool
    for source in batch.inputs:
        verdict, _ = check_applicability(model, case.ground_truth, source, registry, cfg.limits,
                                         case.ground_truth_helpers)
        if verdict is Applicability.APPLICABLE:
            pool.inputs.append(source)
        else:
            pool.invalid_removed += 1
    app.logger.info(f"Source pool for '{case.name}': {len(pool.inputs)} input(s) from {pool.raw_count} generated")
    return pool


def generalizable_at(count, size, thresholds=THRESHOLDS):
    """threshold -> whether count reaches it; 0 means at least one input."""
    result = {}
    for n in thresholds:
        needed = 1 if n == 0 else math.ceil(n * size / 100)
        result[n] = size > 0 and count >= max(needed, 1)
    return result


def metric_generalizable(report, thresholds=THRESHOLDS):
    chosen = report.chosen_candidate
    if chosen is None:
        return {n: False for n in thresholds}
    return generalizable_at(chosen.applicable_count, chosen.pool_size, thresholds)


def metric_valid_followups(candidate, pool, model, registry, limits=None):
    """(valid, total): follow-ups the transformation produces that pass the test."""
    if candidate is None or not candidate.compilable:
        return 0, len(pool)
    valid = sum(1 for source in pool
                if check_applicability(model, candidate.fn, source, registry, limits,
                                       candidate.linked_helpers)[0] is Applicability.APPLICABLE)
    return valid, len(pool)


def metric_direct_followups(preparation):
    """(valid, total) of the pairs the generator wrote directly in Phase 1."""
    return len(preparation.valid_generated), len(preparation.generated)


# test suites and adequacy

def developer_suite(case, model):
    tests = [SuiteTest(model.test_name, model.full_body, tuple(model.helpers))]
    if case.tests is not None:
        functions = tuple(case.tests.functions) + tuple(model.helpers)
        tests += [SuiteTest(test.name, test.body, functions) for test in case.tests.tests]
    return tests


def pair_suite(model, preparation):
    return [SuiteTest(f"{model.test_name}_pair_{index}", substitute_inputs(model, pair), tuple(model.helpers))
            for index, pair in enumerate(preparation.valid_generated)]


def generalized_suite(model, candidate, pool, registry, limits=None):
    """The MR instantiated with the chosen transformation, one test per passing pool input."""
    if candidate is None:
        return []
    functions = transformation_functions(model, candidate.fn, candidate.linked_helpers)
    tests = []
    for index, source in enumerate(pool):
        test = SuiteTest(f"{model.test_name}_generalized_{index}",
                         instantiate_with_transformation(model, candidate.fn, source), functions)
        if test.run(registry, limits).ok:
            tests.append(test)
    return tests


@dataclass
class CaseEvaluation:
    case: str
    generalizable: dict
    valid_followups: tuple
    direct_followups: tuple
    adequacy: object
    measured_over: str = ""
    pool: dict = field(default_factory=dict)

    def read(self):
        return {
            "case": self.case,
            "generalizable": {str(n): ok for n, ok in self.generalizable.items()},
            "valid_followups": list(self.valid_followups),
            "direct_followups": list(self.direct_followups),
            "measured_over": self.measured_over,
            "pool": self.pool,
            "adequacy": self.adequacy.read(),
        }


def evaluate_case(case, cfg, adopted):
    """Metrics and adequacy comparison for one adopted case.

    Args:
        case: corpus Case.
        cfg: PipelineConfig used for the adoption.
        adopted: AdoptResult from run_adopt.

    Returns:
        CaseEvaluation; raises EvaluationError when a suite fails on the
        unmutated SUT.
    """
    model, registry = adopted.model, case.registry
    chosen = adopted.chosen
    pool = adopted.measured_pool
    measurement = adopted.measurement
    generalizable = generalizable_at(measurement["applicable_count"], measurement["pool_size"])
    suites = {
        "D": developer_suite(case, model),
        "L": pair_suite(model, adopted.preparation),
        "M": generalized_suite(model, chosen, pool, registry, cfg.limits),
    }
    mutants = mutate_sut(registry, seed=cfg.gen.seed, faults=case.faults)
    every_test = [test for tests in suites.values() for test in tests]
    equivalent = flag_equivalent(mutants, every_test, registry, cfg.limits)
    adequacy = run_mutation_testing(suites, mutants, registry, cfg.limits, cfg.gen.parallelism, equivalent)
    app.logger.info(f"Evaluated '{case.name}': {len(mutants)} mutant(s), {len(equivalent)} equivalent on the pool")
    return CaseEvaluation(
        case=case.name,
        generalizable=generalizable,
        valid_followups=metric_valid_followups(chosen, pool, model, registry, cfg.limits),
        direct_followups=metric_direct_followups(adopted.preparation),
        adequacy=adequacy,
        measured_over=measurement["over"],
        pool=measurement.get("pool") or {},
    )


def aggregate(evaluations):
    """Corpus-level sums: killed over scored mutants, covered over SUT statements, per combo."""
    totals = {}
    for evaluation in evaluations:
        adequacy = evaluation.adequacy
        for combo in adequacy.line_coverage:
            entry = totals.setdefault(combo, {"killed": 0, "scored_mutants": 0, "covered": 0, "statements": 0})
            entry["killed"] += len(adequacy.killed[combo])
            entry["scored_mutants"] += adequacy.scored_mutants
            entry["covered"] += len(adequacy.covered[combo])
            entry["statements"] += adequacy.statements
    for entry in totals.values():
        entry["mutation_score"] = ratio(entry["killed"], entry["scored_mutants"])
        entry["line_coverage"] = ratio(entry["covered"], entry["statements"])
    return totals


def summary_frame(evaluations):
    rows = []
    for evaluation in evaluations:
        frame = evaluation.adequacy.frame()
        frame.insert(0, "case", evaluation.case)
        rows.append(frame)
    totals = aggregate(evaluations)
    corpus = pd.DataFrame([{"case": "ALL", "suite": combo, "line_coverage": entry["line_coverage"],
                            "mutation_score": entry["mutation_score"], "killed": entry["killed"],
                            "scored_mutants": entry["scored_mutants"]} for combo, entry in totals.items()])
    return pd.concat(rows + [corpus], ignore_index=True) if rows else corpus


def write_evaluation(evaluations, out_dir):
    """eval.json per case, plus summary.json and adequacy.csv for the run."""
    for evaluation in evaluations:
        _write_json_file(os.path.join(out_dir, evaluation.case, "eval.json"), evaluation.read())
    counts = {str(n): sum(1 for e in evaluations if e.generalizable.get(n)) for n in THRESHOLDS}
    _write_json_file(os.path.join(out_dir, "summary.json"), {
        "cases": [e.case for e in evaluations],
        "generalizable_counts": counts,
        "adequacy": aggregate(evaluations),
    })
    os.makedirs(out_dir, exist_ok=True)
    summary_frame(evaluations).to_csv(os.path.join(out_dir, "adequacy.csv"), index=False, float_format="%.6f")
