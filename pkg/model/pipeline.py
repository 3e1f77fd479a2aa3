"""
Two-phase adoption pipeline

Phase 1 prepares input pairs: generate source inputs, generate follow-ups
for them with the hard-coded pair as the sample, refine each snippet down to
its input declarations, run it, dedup, and keep the pairs that pass the
test's own asserts.

Phase 2 generates transformations from the valid pairs, refines each
candidate to what its return values depend on, links the helpers it calls,
checks it, then runs every compilable candidate on every pool input and
keeps the one that applies to the most inputs (first generated wins ties).

Ablations switch components off: v1 shows only the hard-coded pair, v2
skips refinement, v3 skips assessment, direct does all three.
"""
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

from __init__ import app
from api.generator import GenConfig, GenContext, Task, extract_code_blocks, generate
from model.analysis import function_effects, refine_function, resolve_dependencies
from model.checker import check_program
from model.corpus import Case, _write_json_file, _write_text_file, load_case
from model.errors import ConfigError, MtlError, ResolutionError
from model.evaluation import generalizable_at, prepare_source_pool
from model.inputs import bind_snippets, generate_source_inputs, mtc_code, mut_code, source_snippet
from model.mtc import (
    Applicability, InputPair, PairVerdict, check_applicability, derive_skeleton, hardcoded_pair,
    substitute_inputs,
)
from model.parser import parse_program
from model.printer import print_program
from model.runtime import Limits, execute
from model.syntax import Origin, Program
from model.values import bindings_key, to_json


ABLATIONS = {
    "v1": {"ablate_extra_pairs": True},
    "v2": {"ablate_refinement": True},
    "v3": {"ablate_assessment": True},
    "direct": {"ablate_extra_pairs": True, "ablate_refinement": True, "ablate_assessment": True},
}


@dataclass(frozen=True)
class PipelineConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    ablate_extra_pairs: bool = False
    ablate_refinement: bool = False
    ablate_assessment: bool = False
    dedup: bool = True
    limits: Limits = field(default_factory=Limits)
    select_seed: object = None
    pool_examples: int = 5
    pool_repetitions: int = 10
    report_timings: bool = False
    ablation: object = None

    @classmethod
    def for_ablation(cls, name, **kwargs):
        if name is None:
            return cls(**kwargs)
        if name not in ABLATIONS:
            raise ConfigError(f"unknown ablation '{name}' (expected one of {', '.join(ABLATIONS)})")
        return cls(ablation=name, **ABLATIONS[name], **kwargs)

    def read(self):
        return {
            "gen": self.gen.read(),
            "ablation": self.ablation,
            "ablate_extra_pairs": self.ablate_extra_pairs,
            "ablate_refinement": self.ablate_refinement,
            "ablate_assessment": self.ablate_assessment,
            "dedup": self.dedup,
            "max_steps": self.limits.max_steps,
            "select_seed": self.select_seed,
            "pool_examples": self.pool_examples,
            "pool_repetitions": self.pool_repetitions,
        }


# Phase 1

@dataclass
class PairPreparation:
    pairs: list
    sources: list = field(default_factory=list)
    generated: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    dedup_removed: int = 0

    @property
    def valid_generated(self):
        return [pair for pair in self.generated if pair.verdict is PairVerdict.VALID]

    def read(self):
        return {
            "valid_pairs": len(self.pairs),
            "generated_pairs": len(self.generated),
            "invalid_pairs": len(self.generated) - len(self.valid_generated),
            "unusable_snippets": len(self.rejected),
            "dedup_removed": self.dedup_removed,
            "source_inputs": len(self.sources),
            "pairs": [pair.read() for pair in self.pairs],
        }


def validate_pair(model, pair, registry, limits=None):
    """(PairVerdict, reason) for a pair: VALID iff the test passes on it."""
    outcome = execute(substitute_inputs(model, pair), model.environment(), registry, limits)
    if outcome.ok:
        return PairVerdict.VALID, None
    return PairVerdict.INVALID, outcome.status.value


def prepare_pairs(model, registry, cfg, backend=None, hardcoded=None):
    """Phase 1 with its bookkeeping; see phase1_prepare_pairs."""
    hard = hardcoded or hardcoded_pair(model, registry, cfg.limits)
    refine = not cfg.ablate_refinement
    app.logger.info(f"Phase 1 for '{model.test_name}': generating source inputs")
    batch = generate_source_inputs(model, registry, cfg.gen, cfg.limits, backend=backend, refine=refine,
                                   exclude=(hard.source,) if cfg.dedup else ())
    preparation = PairPreparation(pairs=[hard], sources=batch.inputs, rejected=list(batch.rejected),
                                  dedup_removed=batch.dedup_removed)
    if cfg.ablate_extra_pairs:
        return preparation

    shown = tuple(source_snippet(model, s) for s in batch.inputs[:cfg.gen.examples_per_request])
    ctx = GenContext(Task.INPUT_PAIRS, mut_code(registry), mtc_code(model), source_vars=model.source_vars,
                     example_pairs=(hard.snippet(model),), source_examples=shown)
    raws = generate(ctx, cfg.gen, backend)
    names = model.source_vars + model.followup_vars
    bound, rejected = bind_snippets(model, raws, names, registry, cfg.limits, refine)
    preparation.rejected += rejected

    seen = {hard.key(model)}
    for item in bound:
        pair = InputPair(
            source={name: item.bindings[name] for name in model.source_vars},
            followup={name: item.bindings[name] for name in model.followup_vars},
            backend=item.backend,
            repetition=item.repetition,
        )
        if cfg.dedup:
            if pair.key(model) in seen:
                preparation.dedup_removed += 1
                continue
            seen.add(pair.key(model))
        verdict, reason = validate_pair(model, pair, registry, cfg.limits)
        pair = pair.with_verdict(verdict, reason)
        preparation.generated.append(pair)
        if verdict is PairVerdict.VALID:
            preparation.pairs.append(pair)
        else:
            app.logger.debug(f"Pair from repetition {item.repetition} is invalid: {reason}")
    app.logger.info(f"Phase 1 for '{model.test_name}': {len(preparation.pairs) - 1} valid generated pair(s), "
                    f"{len(preparation.generated) - len(preparation.valid_generated)} invalid")
    return preparation


def phase1_prepare_pairs(model, registry, cfg, backend=None):
    """Valid input pairs for the test, the hard-coded pair first.

    Args:
        model: the MTC.
        registry: SUT registry.
        cfg: PipelineConfig (generation settings, ablations, limits).
        backend: optional backend instance.

    Returns:
        list of InputPair, every one VALID; raises BackendError on transport
        failures.
    """
    return prepare_pairs(model, registry, cfg, backend).pairs


# Phase 2

class CandidateStatus(Enum):
    UNCHECKED = "UNCHECKED"
    UNCOMPILABLE = "UNCOMPILABLE"
    COMPILABLE = "COMPILABLE"


@dataclass(frozen=True)
class CandidateTransformation:
    index: int
    fn: object
    linked_helpers: tuple = ()
    status: CandidateStatus = CandidateStatus.UNCHECKED
    diagnostics: tuple = ()
    repetition: int = 0
    local_helpers: tuple = ()
    applicable_count: object = None
    pool_size: object = None
    verdicts: tuple = ()

    @property
    def compilable(self):
        return self.status is CandidateStatus.COMPILABLE

    def text(self):
        """The transformation with the candidate-local helpers it links."""
        local = tuple(fn for fn in self.linked_helpers if fn in self.local_helpers)
        return print_program(Program((self.fn,) + local))

    def read(self):
        return {
            "index": self.index,
            "repetition": self.repetition,
            "status": self.status.value,
            "diagnostics": list(self.diagnostics),
            "linked_helpers": [fn.name for fn in self.linked_helpers],
            "applicable_count": self.applicable_count,
            "pool_size": self.pool_size,
            "verdicts": [v.value for v in self.verdicts],
        }


def compile_candidate(model, registry, index, text, cfg, repetition=0):
    """Turn one extracted code block into a checked CandidateTransformation."""
    skeleton = derive_skeleton(model)
    try:
        program = parse_program(text, Origin.HELPER)
    except MtlError as e:
        return CandidateTransformation(index, None, status=CandidateStatus.UNCOMPILABLE, diagnostics=(str(e),),
                                       repetition=repetition)
    fn = replace(program.function(skeleton.fn_name), origin=Origin.TRANSFORMATION)
    local = tuple(other for other in program.functions if other.name != skeleton.fn_name)
    base = CandidateTransformation(index, fn, repetition=repetition, local_helpers=local)

    if cfg.ablate_refinement:
        linked = local + tuple(h for h in model.helpers if h.name not in {f.name for f in local})
    else:
        effects = function_effects(local + tuple(model.helpers) + tuple(registry.entries.values()))
        fn = refine_function(fn, effects)
        try:
            fn, linked = resolve_dependencies(fn, local + tuple(model.helpers), registry.names())
        except ResolutionError as e:
            return replace(base, fn=fn, status=CandidateStatus.UNCOMPILABLE, diagnostics=(str(e),))
        linked = tuple(linked)

    own = tuple(h for h in linked if h in local)
    shared = tuple(h for h in linked if h not in local)
    report = check_program(Program((fn,) + own), registry.signatures, shared)
    if not report.ok:
        return replace(base, fn=fn, linked_helpers=linked, status=CandidateStatus.UNCOMPILABLE,
                       diagnostics=tuple(str(d) for d in report.errors))
    return replace(base, fn=fn, linked_helpers=linked, status=CandidateStatus.COMPILABLE)


def phase2_generate(model, pairs, registry, cfg, backend=None):
    """Generate, refine, link and check candidate transformations.

    Args:
        model: the MTC.
        pairs: valid pairs, the hard-coded one first.
        registry: SUT registry.
        cfg: PipelineConfig.
        backend: optional backend instance.

    Returns:
        list of CandidateTransformation in generation order.
    """
    skeleton = derive_skeleton(model)
    shown = pairs[:1] if cfg.ablate_extra_pairs else pairs[:cfg.gen.examples_per_request]
    ctx = GenContext(Task.TRANSFORMATION, mut_code(registry), mtc_code(model), source_vars=model.source_vars,
                     example_pairs=tuple(pair.snippet(model) for pair in shown), skeleton=skeleton)
    candidates = []
    for raw in generate(ctx, cfg.gen, backend):
        blocks = extract_code_blocks(raw.text, skeleton)
        if not blocks:
            app.logger.debug(f"Repetition {raw.repetition_index} holds no block matching {skeleton.header()}")
            continue
        candidates.append(compile_candidate(model, registry, len(candidates), blocks[0], cfg, raw.repetition_index))
    compilable = sum(1 for c in candidates if c.compilable)
    app.logger.info(f"Phase 2 for '{model.test_name}': {len(candidates)} candidate(s), {compilable} compilable")
    return candidates


@dataclass(frozen=True)
class AssessmentReport:
    candidates: tuple
    pool: tuple
    chosen: object = None
    tie_broken: bool = False
    selection: str = "most-applicable"

    @property
    def chosen_candidate(self):
        return None if self.chosen is None else self.candidates[self.chosen]

    def read(self):
        return {
            "candidates": [c.read() for c in self.candidates],
            "pool_size": len(self.pool),
            "pool": [{name: to_json(value) for name, value in source.items()} for source in self.pool],
            "chosen": self.chosen,
            "tie_broken": self.tie_broken,
            "selection": self.selection,
        }


def assessment_pool(model, hard, preparation):
    """The hard-coded source first, then generated sources, deduped."""
    items = [hard.source] + list(preparation.sources) + [pair.source for pair in preparation.pairs[1:]]
    pool, seen = [], set()
    for source in items:
        key = bindings_key(source, model.source_vars)
        if key not in seen:
            seen.add(key)
            pool.append(source)
    return pool


def run_cells(model, candidates, pool, registry, limits, parallelism=1):
    """Applicability verdicts for every compilable candidate on every input, in (candidate, input) order."""
    cells = [(c, source) for c in candidates if c.compilable for source in pool]

    def one(cell):
        candidate, source = cell
        return check_applicability(model, candidate.fn, source, registry, limits, candidate.linked_helpers)[0]

    if parallelism > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as executor:
            verdicts = list(executor.map(one, cells))
    else:
        verdicts = [one(cell) for cell in cells]

    results, position = [], 0
    for candidate in candidates:
        if not candidate.compilable:
            results.append(candidate)
            continue
        row = tuple(verdicts[position:position + len(pool)])
        position += len(pool)
        count = sum(1 for v in row if v is Applicability.APPLICABLE)
        results.append(replace(candidate, applicable_count=count, pool_size=len(pool), verdicts=row))
    return results


def select_best(candidates):
    """(chosen index, tie broken): most applicable, smallest index on ties."""
    scored = [c for c in candidates if c.compilable and c.applicable_count is not None]
    if not scored:
        return None, False
    best = max(c.applicable_count for c in scored)
    leaders = [c for c in scored if c.applicable_count == best]
    return min(c.index for c in leaders), len(leaders) > 1


def assess_candidates(model, candidates, pool, registry, cfg):
    """Run every compilable candidate over the pool and choose one.

    Args:
        model: the MTC.
        candidates: output of phase2_generate.
        pool: source bindings, the hard-coded source first.
        registry: SUT registry.
        cfg: PipelineConfig; ablate_assessment switches to first-compilable
            (or seeded) choice.

    Returns:
        AssessmentReport.
    """
    assessed = run_cells(model, candidates, pool, registry, cfg.limits, cfg.gen.parallelism)
    if cfg.ablate_assessment:
        compilable = [c.index for c in assessed if c.compilable]
        if not compilable:
            return AssessmentReport(tuple(assessed), tuple(pool), None, False, "first-compilable")
        if cfg.select_seed is None:
            return AssessmentReport(tuple(assessed), tuple(pool), compilable[0], False, "first-compilable")
        return AssessmentReport(tuple(assessed), tuple(pool), random.Random(cfg.select_seed).choice(compilable),
                                False, "seeded")
    chosen, tie_broken = select_best(assessed)
    return AssessmentReport(tuple(assessed), tuple(pool), chosen, tie_broken)


# end to end

@dataclass
class AdoptResult:
    case: object
    model: object
    cfg: PipelineConfig
    preparation: PairPreparation
    report: AssessmentReport
    measurement: dict
    measured_pool: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def chosen(self):
        return self.report.chosen_candidate

    @property
    def transformation_text(self):
        return self.chosen.text() if self.chosen else None

    def read(self, timings=False):
        data = {
            "case": self.case.name,
            "config": self.cfg.read(),
            "mtc": self.model.read(),
            "skeleton": derive_skeleton(self.model).read(),
            "phase1": self.preparation.read(),
            "assessment": self.report.read(),
            "chosen": self.report.chosen,
            "tie_broken": self.report.tie_broken,
            "generalizability": self.measurement,
        }
        if timings:
            data["timings"] = dict(self.timings)
        return data


def measure_chosen(case, model, registry, report, cfg, backend=None, hard=None):
    """(measurement, inputs): applicability of the chosen candidate on the evaluation pool
    (ground truth present) or on the assessment pool."""
    chosen = report.chosen_candidate
    if case.ground_truth is not None:
        pool = prepare_source_pool(case, cfg, backend, model=model, registry=registry, hardcoded=hard)
        inputs, over = pool.inputs, "evaluation-pool"
    else:
        pool, inputs, over = None, list(report.pool), "assessment-pool"
    if chosen is None:
        count = 0
    else:
        count = sum(1 for source in inputs
                    if check_applicability(model, chosen.fn, source, registry, cfg.limits,
                                           chosen.linked_helpers)[0] is Applicability.APPLICABLE)
    return {
        "over": over,
        "applicable_count": count,
        "pool_size": len(inputs),
        "generalizable": {str(n): ok for n, ok in generalizable_at(count, len(inputs)).items()},
        "pool": pool.read() if pool is not None else None,
    }, inputs


def _fixture_config(cfg, case):
    if cfg.gen.fixture_dir is None:
        return replace(cfg, gen=replace(cfg.gen, fixture_dir=case.fixture_dir))
    return cfg


def run_adopt(case_dir, cfg, out_dir=None, backend=None):
    """Adopt the MR of one corpus case.

    Args:
        case_dir: case directory (or an already loaded Case).
        cfg: PipelineConfig.
        out_dir: when given, adopt.json, transform.mtl and timings.json are
            written under out_dir/<case>/.
        backend: optional backend instance shared by all requests.

    Returns:
        AdoptResult; raises ExtractionError or BackendError.
    """
    case = case_dir if isinstance(case_dir, Case) else load_case(case_dir)
    cfg = _fixture_config(cfg, case)
    timings = {}
    started = time.perf_counter()

    def lap(stage):
        nonlocal started
        now = time.perf_counter()
        timings[stage] = round(now - started, 6)
        started = now

    app.logger.info(f"Adopting '{case.name}' (ablation: {cfg.ablation or 'none'})")
    model = case.model()
    registry = case.registry
    hard = hardcoded_pair(model, registry, cfg.limits)
    lap("extract")
    preparation = prepare_pairs(model, registry, cfg, backend, hard)
    lap("phase1")
    candidates = phase2_generate(model, preparation.pairs, registry, cfg, backend)
    lap("phase2_generate")
    report = assess_candidates(model, candidates, assessment_pool(model, hard, preparation), registry, cfg)
    lap("phase2_assess")
    measurement, measured_pool = measure_chosen(case, model, registry, report, cfg, backend, hard)
    lap("measure")

    result = AdoptResult(case, model, cfg, preparation, report, measurement, measured_pool, timings)
    if report.chosen is None:
        app.logger.warning(f"No compilable transformation for '{case.name}'")
    if out_dir:
        write_adopt_result(result, out_dir)
    return result


def write_adopt_result(result, out_dir):
    target = os.path.join(out_dir, result.case.name)
    _write_json_file(os.path.join(target, "adopt.json"), result.read(timings=result.cfg.report_timings))
    _write_json_file(os.path.join(target, "timings.json"), result.timings)
    transform_path = os.path.join(target, "transform.mtl")
    if result.transformation_text:
        _write_text_file(transform_path, result.transformation_text)
    elif os.path.exists(transform_path):
        os.remove(transform_path)
    return target
