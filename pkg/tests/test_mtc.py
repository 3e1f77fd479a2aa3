""" MR-encoded test extraction, skeletons and applicability """
import pytest

from model.errors import ExtractionError, SkeletonMismatchError
from model.mtc import (
    Applicability, InputPair, Invocation, PairVerdict, Provenance, ReturnShape, bindings_from_block,
    check_applicability, check_skeleton, derive_skeleton, extract_mtc, hardcoded_pair,
    instantiate_with_transformation, matches_skeleton, substitute_inputs,
)
from model.parser import parse_block, parse_program
from model.runtime import Status, execute
from model.syntax import Origin, TypeRef


def _transformation(body, ret="str", name="transform_test_shout_keeps_prefix"):
    return parse_program(f"fn {name}(word: str) -> {ret} {{ {body} }}", Origin.TRANSFORMATION).functions[0]


# Extraction

def test_model_locates_inputs_invocations_and_relation(shout_model):
    assert shout_model.source_vars == ("word",)
    assert shout_model.followup_vars == ("longer",)
    assert shout_model.mut_invocations == (Invocation("shout", 2), Invocation("shout", 3))
    assert shout_model.relation_asserts == (4,)
    assert [fn.name for fn in shout_model.helpers] == ["stem"]
    assert shout_model.read()["mut_invocations"][0] == {"callee": "shout", "stmt_id": 2}


def test_invocations_are_ordered_source_first(shout_registry):
    program = parse_program("""
        test t {
            #[source] let x: str = "a";
            #[followup] let y: str = "ab";
            let fy = sut.shout(y);
            let fx = sut.shout(x);
            assert starts_with(fy, substr(fx, 0, 1));
        }
    """)
    model = extract_mtc(program, "t", shout_registry)
    assert [inv.stmt_id for inv in model.mut_invocations] == [3, 2]


def test_inputs_may_flow_through_context_statements(shout_registry):
    program = parse_program("""
        test t {
            let base = "ab";
            #[source] let x: str = base;
            #[followup] let y: str = base + "c";
            let shown = x;
            let fx = sut.shout(shown);
            let fy = sut.shout(y);
            assert len(fy) == len(fx) + 1;
        }
    """)
    model = extract_mtc(program, "t", shout_registry)
    assert model.source_invocation.stmt_id == 4
    assert hardcoded_pair(model, shout_registry).followup == {"y": "abc"}


@pytest.mark.parametrize("body,message", [
    ('let a = sut.shout("x"); let b = sut.shout("y"); assert a != b;', "has no #\\[source\\] input"),
    ('#[source] let w = "x"; let a = sut.shout(w); assert a != "";', "has no #\\[followup\\] input"),
    ('#[followup] let v = "y"; #[source] let w = "x";', "source inputs must be declared before follow-up"),
    ('#[source] assert true;', "must mark a single let statement"),
    ('if true { #[source] let w = "x"; }', "must be declared at the top level"),
    ('#[source] let w = "x"; #[followup] let v = "y"; let a = sut.shout(w); let b = sut.shout(v); '
     'let c = sut.shout(w); assert a == b;', "expected exactly two MUT invocations, found 3"),
    ('#[source] let w = "x"; #[followup] let v = "y"; let a = sut.shout(w + v); let b = sut.shout(v); '
     'assert a == b;', "mixes source and follow-up inputs"),
    ('#[source] let w = "x"; #[followup] let v = "y"; let a = sut.shout(w); let b = sut.shout("z"); '
     'assert a == b;', "consumes no marked input"),
    ('#[source] let w = "x"; #[followup] let v = "y"; let a = sut.shout(w); let b = sut.shout(v); '
     'assert a != ""; assert b != "";', "no assert relates the outputs of both MUT invocations"),
])
def test_extraction_errors(shout_registry, body, message):
    program = parse_program(f"test t {{ {body} }}")
    with pytest.raises(ExtractionError, match=message):
        extract_mtc(program, "t", shout_registry)


def test_unknown_test_name(shout_registry):
    with pytest.raises(ExtractionError, match="test 'missing' not found"):
        extract_mtc(parse_program("test t { }"), "missing", shout_registry)


# Skeletons

def test_single_skeleton(shout_model):
    skeleton = derive_skeleton(shout_model)
    assert skeleton.return_shape is ReturnShape.SINGLE
    assert skeleton.header() == "fn transform_test_shout_keeps_prefix(word: str) -> str"
    assert skeleton.text().startswith("#[transformation] fn transform_test_shout_keeps_prefix(word: str) -> str {")


def test_list_skeleton(load):
    skeleton = derive_skeleton(load("gcd_swap").model())
    assert skeleton.return_shape is ReturnShape.LIST
    assert skeleton.arity_out == 2
    assert skeleton.return_type == TypeRef("list")
    assert skeleton.read()["params"] == ["a", "b"]


@pytest.mark.parametrize("source,reason", [
    ("fn other(word: str) -> str { return word; }", "expected function 'transform_test_shout_keeps_prefix'"),
    ("fn transform_test_shout_keeps_prefix() -> str { return \"x\"; }", "must take 1 parameter(s), takes 0"),
    ("fn transform_test_shout_keeps_prefix(word: str) -> int { return 1; }", "must return str, declares int"),
])
def test_skeleton_mismatches(shout_model, source, reason):
    fn = parse_program(source).functions[0]
    ok, message = matches_skeleton(fn, derive_skeleton(shout_model))
    assert not ok
    assert reason in message
    with pytest.raises(SkeletonMismatchError):
        check_skeleton(fn, derive_skeleton(shout_model))


def test_list_length_must_match(load):
    model = load("gcd_swap").model()
    fn = parse_program("fn transform_test_gcd_symmetric(a: int, b: int) -> list { return [b, a, 0]; }").functions[0]
    ok, reason = matches_skeleton(fn, derive_skeleton(model))
    assert not ok
    assert reason == "'transform_test_gcd_symmetric' returns 3 values, expected 2"


# Pairs

def test_hardcoded_pair(shout_model, shout_registry):
    pair = hardcoded_pair(shout_model, shout_registry)
    assert pair.source == {"word": "hi"}
    assert pair.followup == {"longer": "hi there"}
    assert pair.provenance is Provenance.HARDCODED
    assert pair.verdict is PairVerdict.VALID
    assert pair.snippet(shout_model) == '#[source] let word = "hi";\n#[followup] let longer = "hi there";'
    assert pair.key(shout_model) == 'word="hi" | longer="hi there"'


def test_hardcoded_pair_requires_a_passing_test(shout_registry):
    program = parse_program("""
        test t {
            #[source] let w = "a";
            #[followup] let v = "b";
            let x = sut.shout(w);
            let y = sut.shout(v);
            assert x == y;
        }
    """)
    model = extract_mtc(program, "t", shout_registry)
    with pytest.raises(ExtractionError, match="does not pass on the unmutated SUT"):
        hardcoded_pair(model, shout_registry)


@pytest.mark.parametrize("followup,status", [("go on", Status.OK), ("stop", Status.ASSERT_FAIL)])
def test_substitute_inputs(shout_model, shout_registry, followup, status):
    pair = InputPair({"word": "go"}, {"longer": followup})
    outcome = execute(substitute_inputs(shout_model, pair), shout_model.environment(), shout_registry)
    assert outcome.status is status


def test_bindings_from_block(shout_model):
    assert bindings_from_block(shout_model, parse_block('let word = "x";'), ["word"]) == ({"word": "x"}, None)
    assert bindings_from_block(shout_model, parse_block("let other = 1;"), ["word"]) == \
        (None, "snippet does not define word")
    assert bindings_from_block(shout_model, parse_block("let word = 1 / 0;"), ["word"]) == \
        (None, "RUNTIME_ERROR: division by zero")


def test_pair_verdicts_are_immutable_updates():
    pair = InputPair({"a": 1}, {"b": 2})
    judged = pair.with_verdict(PairVerdict.INVALID, "assert 4 failed")
    assert pair.verdict is PairVerdict.UNVALIDATED
    assert judged.read()["verdict"] == "INVALID"
    assert judged.read()["reason"] == "assert 4 failed"


# Applicability

@pytest.mark.parametrize("body,source,verdict", [
    ('return word + " more";', "abc", Applicability.APPLICABLE),
    ('return "zzz";', "abc", Applicability.ASSERT_FAIL),
    ("return substr(word, 5, 6);", "ab", Applicability.TRANSFORM_ERROR),
])
def test_check_applicability(shout_model, shout_registry, body, source, verdict):
    result, _ = check_applicability(shout_model, _transformation(body), {"word": source}, shout_registry)
    assert result is verdict


def test_wrong_name_is_a_skeleton_mismatch(shout_model, shout_registry):
    fn = _transformation("return word;", name="transform_other")
    assert check_applicability(shout_model, fn, {"word": "a"}, shout_registry) == \
        (Applicability.SKELETON_MISMATCH, None)


def test_instantiation_computes_followups(shout_model, shout_registry):
    fn = _transformation('return word + "!";')
    block = instantiate_with_transformation(shout_model, fn, {"word": "ok"})
    env = shout_model.environment().with_functions((fn,) + shout_model.helpers)
    outcome = execute(block, env, shout_registry)
    assert outcome.ok
    assert outcome.bindings["longer"] == "ok!"


def test_list_transformations_unpack(load):
    case = load("gcd_swap")
    model = case.model()
    verdict, outcome = check_applicability(model, case.ground_truth, {"a": 7, "b": 5}, case.registry)
    assert verdict is Applicability.APPLICABLE
    assert (outcome.bindings["a2"], outcome.bindings["b2"]) == (5, 7)
