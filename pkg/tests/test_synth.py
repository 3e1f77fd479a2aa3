""" Offline synthesizer: hypotheses, candidate kinds and profiles """
import pytest

from api.generator import GenConfig, GenContext, Task, extract_code_blocks, fenced_blocks, generate
from api.synth import SynthBackend, hypotheses, profile_named
from model.errors import BackendError, ConfigError
from model.inputs import mtc_code, mut_code
from model.mtc import derive_skeleton, hardcoded_pair
from model.printer import print_expr
from model.syntax import Name


@pytest.fixture
def expiry(load):
    case = load("session_expiry")
    model = case.model()
    pair = hardcoded_pair(model, case.registry)
    return case, model, pair


def _ctx(expiry, task, **kwargs):
    case, model, pair = expiry
    if task is not Task.SOURCE_INPUTS:
        kwargs.setdefault("example_pairs", (pair.snippet(model),))
    if task is Task.TRANSFORMATION:
        kwargs["skeleton"] = derive_skeleton(model)
    return GenContext(task, mut_code(case.registry), mtc_code(model), source_vars=model.source_vars, **kwargs)


def _cfg(**kwargs):
    kwargs.setdefault("temperature", 0.0)
    return GenConfig(backend="synth", **kwargs)


# Hypotheses

@pytest.mark.parametrize("source,followup,labels", [
    (3, 5, ["identity", "delta 2"]),
    (4, 12, ["identity", "delta 8", "ratio 3"]),
    (5, -5, ["identity", "delta -10", "ratio -1", "negate"]),
    ("ab", "abc", ["identity", "suffix 'c'", "upper", "lower", "trim", "reverse"]),
    ((1, 2), (1, 2, 3), ["identity", "reverse", "sort", "append"]),
    (True, False, ["identity", "negate"]),
    ("2024-01-01", "2024-01-03", ["identity", "upper", "lower", "trim", "reverse",
                                  "date plus_days 2 'yyyy-MM-dd'"]),
])
def test_hypothesis_labels(source, followup, labels):
    assert [label for label, _ in hypotheses(source, followup)] == labels


def test_hypotheses_build_mtl():
    built = {label: print_expr(build(Name("s"))) for label, build in hypotheses("ab", "xab")}
    assert built["prefix 'x'"] == '"x" + s'
    built = {label: print_expr(build(Name("n"))) for label, build in hypotheses(10, 4)}
    assert built["delta -6"] == "n - 6"


# Transformations

def test_default_schedule(expiry):
    ctx = _ctx(expiry, Task.TRANSFORMATION)
    texts = [c.text for c in generate(ctx, _cfg(), SynthBackend())]
    assert len(texts) == 5
    assert "return ttl + 60;" in texts[0]
    assert "let draft = legacy_adjust(ttl);" in texts[1]
    assert "if ttl == 30 {" in texts[2] and "return 90;" in texts[2]
    assert "return ttl + 60;" in texts[3]
    assert "return legacy_adjust(ttl + 60);" in texts[4]
    assert len(extract_code_blocks(texts[0], ctx.skeleton)) == 1


def test_clean_profile_only_answers_correctly(expiry):
    ctx = _ctx(expiry, Task.TRANSFORMATION)
    texts = [c.text for c in generate(ctx, _cfg(synth_profile="clean", repetitions=3), SynthBackend())]
    assert all("return ttl + 60;" in text for text in texts)


def test_output_is_a_function_of_context_seed_and_index(expiry):
    backend = SynthBackend()
    ctx = _ctx(expiry, Task.SOURCE_INPUTS)
    cfg = _cfg(seed=4)
    assert backend.complete(ctx, cfg, "", 1) == backend.complete(ctx, cfg, "", 1)


# Inputs

def test_source_inputs_with_duplicates(expiry):
    text = SynthBackend().complete(_ctx(expiry, Task.SOURCE_INPUTS), _cfg(examples_per_request=3), "", 0)
    blocks = fenced_blocks(text)
    assert len(blocks) == 3
    assert all(block.startswith("#[source] let ttl = ") for block in blocks)
    assert blocks[2] == blocks[0]


def test_adversarial_sources_include_a_domain_breaker(expiry):
    cfg = _cfg(examples_per_request=3, synth_profile="adversarial")
    blocks = fenced_blocks(SynthBackend().complete(_ctx(expiry, Task.SOURCE_INPUTS), cfg, "", 0))
    assert blocks[1] == "#[source] let ttl = 9223372036854775807;\n"


def test_clean_pairs_follow_the_learned_rule(expiry):
    cfg = _cfg(examples_per_request=2, synth_profile="clean")
    blocks = fenced_blocks(SynthBackend().complete(_ctx(expiry, Task.INPUT_PAIRS), cfg, "", 0))
    assert blocks == ["#[source] let ttl = 30;\n#[followup] let longer = 90;\n"] * 2


def test_default_pairs_carry_noise(expiry):
    cfg = _cfg(examples_per_request=3)
    blocks = fenced_blocks(SynthBackend().complete(_ctx(expiry, Task.INPUT_PAIRS), cfg, "", 0))
    assert "assert ttl != 30;" in blocks[1]
    assert "#[followup] let longer = 90;" not in blocks[2]


# Errors

def test_unknown_profile():
    with pytest.raises(ConfigError, match="unknown synth profile 'chaotic'"):
        profile_named("chaotic")


def test_prompt_without_test_is_rejected():
    ctx = GenContext(Task.SOURCE_INPUTS, "fn f(x: int) -> int {\n    return x;\n}", "fn helper() -> int { return 1; }")
    with pytest.raises(BackendError, match="found no test"):
        SynthBackend().count(ctx, _cfg(), "")


def test_unmodelled_test_is_rejected():
    ctx = GenContext(Task.SOURCE_INPUTS, "fn f(x: int) -> int {\n    return x;\n}", "test t { assert true; }")
    with pytest.raises(BackendError, match="cannot model the test"):
        SynthBackend().count(ctx, _cfg(), "")
