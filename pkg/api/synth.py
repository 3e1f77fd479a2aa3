"""
Offline synthesizer backend

SYNTH stands in for a language model. It re-parses the code shown in the
prompt, learns constants from the example pairs (deltas, ratios, affixes,
date offsets, list edits) and answers with MTL text shaped like a model
reply. Candidate kinds follow the profile's schedule, so every defense of
the pipeline sees its failure mode:

    correct       first hypothesis consistent with every example pair
    overfit       lookup on the hard-coded pair, identity elsewhere
    noisy         correct, plus a dead statement calling an undefined name
    uncompilable  correct value routed through an undefined name

Output is a pure function of (context, seed, repetition index).
"""
import random
import string
from dataclasses import dataclass
from functools import lru_cache

from api.generator import Task
from model.errors import BackendError, ConfigError, MtlError
from model.mtc import ReturnShape, bindings_from_block, derive_skeleton, extract_mtc, hardcoded_pair
from model.parser import parse_block, parse_program
from model.printer import print_function
from model.runtime import Limits, SutRegistry, call_function, execute
from model.syntax import (
    Assert, Assign, Binary, Block, Call, ExprStmt, For, FuncDef, If, Index, Let, ListExpr, Literal, LiteralKind,
    Name, Origin, Param, Program, Return, Stmt, TestDef, TypeRef, Unary,
)
from model.values import I64_MAX, literalize, render, type_name, value_eq


DATE_PATTERNS = ("yyyy-MM-dd HH:mm:ss", "yyyy-MM-dd", "dd/MM/yyyy", "MMM d, yyyy", "yyyyMMdd")
UNDEFINED_HELPER = "legacy_adjust"
PERTURB_SCALE = 0.25
RESULT_VAR = "result__"

_LIMITS = Limits(max_steps=20_000)
_MISSING = object()


@dataclass(frozen=True)
class SynthProfile:
    kinds: tuple
    invalid_pairs: bool = False
    stray_assert: bool = False
    duplicates: bool = False
    invalid_sources: bool = False


PROFILES = {
    "default": SynthProfile(("correct", "noisy", "overfit", "correct", "uncompilable"),
                            invalid_pairs=True, stray_assert=True, duplicates=True),
    "clean": SynthProfile(("correct",)),
    "overfit": SynthProfile(("overfit", "correct", "noisy", "uncompilable", "correct")),
    "adversarial": SynthProfile(("uncompilable", "overfit", "noisy", "correct", "correct"),
                                invalid_pairs=True, stray_assert=True, duplicates=True, invalid_sources=True),
}


def profile_named(name):
    if name not in PROFILES:
        raise ConfigError(f"unknown synth profile '{name}' (expected one of {', '.join(sorted(PROFILES))})")
    return PROFILES[name]


@dataclass(frozen=True)
class _Scenario:
    model: object
    registry: SutRegistry
    hardcoded: object
    skeleton: object


@lru_cache(maxsize=64)
def _scenario(mut_code, mtc_code):
    try:
        sut = parse_program(mut_code, Origin.SUT)
        program = parse_program(mtc_code, Origin.HELPER)
        if not program.tests:
            raise BackendError("synth backend found no test in the prompt")
        registry = SutRegistry.from_program(sut)
        model = extract_mtc(program, program.tests[0].name, registry)
        return _Scenario(model, registry, hardcoded_pair(model, registry, _LIMITS), derive_skeleton(model))
    except MtlError as e:
        if isinstance(e, BackendError):
            raise
        raise BackendError(f"synth backend cannot model the test: {e}")


def _evaluate(expr, registry=None):
    block = Block.of([Stmt.make(Let(RESULT_VAR, None, expr))])
    outcome = execute(block, registry=registry, limits=_LIMITS)
    return outcome.bindings[RESULT_VAR] if outcome.ok else _MISSING


def _int_const(value):
    return Literal(LiteralKind.INT, value)


def _str_const(value):
    return Literal(LiteralKind.STR, value)


def _offset(arg, delta):
    if delta < 0:
        return Binary("-", arg, literalize(-delta))
    return Binary("+", arg, literalize(delta))


def _date_hypotheses(source, followup):
    found = []
    for pattern in DATE_PATTERNS:
        parsed = Call("parse_date", (_str_const(followup), _str_const(pattern)))
        diff = _evaluate(Binary("-", parsed, Call("parse_date", (_str_const(source), _str_const(pattern)))))
        if type(diff) is not int or diff == 0:
            continue
        if diff % 86400 == 0:
            step, amount = "plus_days", diff // 86400
        else:
            step, amount = "plus_seconds", diff
        found.append((f"date {step} {amount} '{pattern}'", lambda arg, p=pattern, s=step, n=amount: Call(
            "format_date", (Call(s, (Call("parse_date", (arg, _str_const(p))), _int_const(n))), _str_const(p)))))
    return found


def hypotheses(source, followup):
    """(label, build) pairs explaining followup from source; build maps an argument expression to MTL."""
    found = [("identity", lambda arg: arg)]
    kinds = (type_name(source), type_name(followup))
    if kinds in (("int", "int"), ("float", "float")):
        delta = followup - source
        if delta:
            found.append((f"delta {delta}", lambda arg, d=delta: _offset(arg, d)))
        if kinds == ("int", "int") and source not in (0, 1) and followup % source == 0 \
                and followup // source not in (0, 1):
            ratio = followup // source
            found.append((f"ratio {ratio}", lambda arg, r=ratio: Binary("*", arg, _int_const(r))))
        if kinds == ("float", "float") and source != 0.0 and followup / source not in (0.0, 1.0):
            ratio = followup / source
            found.append((f"ratio {ratio}", lambda arg, r=ratio: Binary("*", arg, literalize(r))))
        if followup == -source and source:
            found.append(("negate", lambda arg: Unary("-", arg)))
    elif kinds == ("str", "str"):
        if followup.startswith(source) and len(followup) > len(source):
            suffix = followup[len(source):]
            found.append((f"suffix {suffix!r}", lambda arg, s=suffix: Binary("+", arg, _str_const(s))))
        if followup.endswith(source) and len(followup) > len(source):
            prefix = followup[:len(followup) - len(source)]
            found.append((f"prefix {prefix!r}", lambda arg, p=prefix: Binary("+", _str_const(p), arg)))
        for builtin_name in ("upper", "lower", "trim", "reverse"):
            found.append((builtin_name, lambda arg, b=builtin_name: Call(b, (arg,))))
        found.extend(_date_hypotheses(source, followup))
    elif kinds == ("list", "list"):
        found.append(("reverse", lambda arg: Call("reverse", (arg,))))
        found.append(("sort", lambda arg: Call("sort", (arg,))))
        if followup and value_eq(followup[:-1], source):
            found.append(("append", lambda arg, e=followup[-1]: Call("append", (arg, literalize(e)))))
        if followup and value_eq(followup[1:], source):
            found.append(("prepend", lambda arg, e=followup[0]: Binary("+", ListExpr((literalize(e),)), arg)))
    elif kinds == ("bool", "bool"):
        found.append(("negate", lambda arg: Unary("!", arg)))
    return found


def _explains(build, source_value, followup_value, registry):
    result = _evaluate(build(literalize(source_value)), registry)
    return result is not _MISSING and value_eq(result, followup_value)


def learn(scenario, pairs):
    """Per follow-up variable: (source var, label, build, consistent with every pair)."""
    model = scenario.model
    hard = scenario.hardcoded
    learned = []
    for followup_var in model.followup_vars:
        fallback = None
        chosen = None
        for source_var in model.source_vars:
            for label, build in hypotheses(hard.source[source_var], hard.followup[followup_var]):
                if not _explains(build, hard.source[source_var], hard.followup[followup_var], scenario.registry):
                    continue
                if all(_explains(build, pair.source[source_var], pair.followup[followup_var], scenario.registry)
                       for pair in pairs):
                    chosen = (source_var, label, build, True)
                    break
                fallback = fallback or (source_var, label, build, False)
            if chosen:
                break
        learned.append(chosen or fallback)
    return learned


def _transformation(scenario, body_stmts):
    skeleton = scenario.skeleton
    params = tuple(Param(name, ann) for name, ann in skeleton.params)
    return FuncDef(skeleton.fn_name, params, skeleton.return_type, Block.of(body_stmts), Origin.TRANSFORMATION)


def _followup_exprs(scenario, learned):
    exprs = []
    for followup_var, entry in zip(scenario.model.followup_vars, learned):
        if entry is None:
            exprs.append(literalize(scenario.hardcoded.followup[followup_var]))
        else:
            source_var, _, build, _ = entry
            exprs.append(build(Name(source_var)))
    return exprs


def _returned(scenario, exprs):
    if scenario.skeleton.return_shape is ReturnShape.LIST:
        return ListExpr(tuple(exprs))
    return exprs[0]


def build_candidate(scenario, learned, kind):
    """FuncDef of the given candidate kind."""
    value = _returned(scenario, _followup_exprs(scenario, learned))
    first = Name(scenario.model.source_vars[0])
    if kind == "correct":
        return _transformation(scenario, [Stmt.make(Return(value))])
    if kind == "noisy":
        return _transformation(scenario, [
            Stmt.make(Let("draft", None, Call(UNDEFINED_HELPER, (first,)))),
            Stmt.make(Return(value)),
        ])
    if kind == "uncompilable":
        return _transformation(scenario, [Stmt.make(Return(Call(UNDEFINED_HELPER, (value,))))])
    if kind == "overfit":
        hard = scenario.hardcoded
        cond = None
        for name in scenario.model.source_vars:
            test = Binary("==", Name(name), literalize(hard.source[name]))
            cond = test if cond is None else Binary("&&", cond, test)
        fixed = _returned(scenario, [literalize(hard.followup[name]) for name in scenario.model.followup_vars])
        elsewhere = []
        for name in scenario.model.followup_vars:
            same = next((s for s in scenario.model.source_vars
                         if type_name(hard.source[s]) == type_name(hard.followup[name])), None)
            elsewhere.append(Name(same) if same else literalize(hard.followup[name]))
        return _transformation(scenario, [
            Stmt.make(If(cond, Block.of([Stmt.make(Return(fixed))]))),
            Stmt.make(Return(_returned(scenario, elsewhere))),
        ])
    raise ConfigError(f"unknown candidate kind '{kind}'")


def _vary(value, rng):
    kind = type_name(value)
    if kind == "bool":
        return rng.random() < 0.5
    if kind == "int":
        return value + rng.randint(-20, 20) if abs(value) < I64_MAX // 2 else value - rng.randint(1, 20)
    if kind == "float":
        return round(value + rng.uniform(-10.0, 10.0), 2)
    if kind == "str":
        for pattern in DATE_PATTERNS:
            stamp = _evaluate(Call("parse_date", (_str_const(value), _str_const(pattern))))
            if type(stamp) is int:
                moved = Call("plus_days", (_int_const(stamp), _int_const(rng.randint(-400, 400))))
                text = _evaluate(Call("format_date", (moved, _str_const(pattern))))
                if type(text) is str:
                    return text
        return "".join(_vary_char(char, rng) for char in value)
    if kind == "list":
        items = [_vary(item, rng) for item in value]
        if items and rng.random() < 0.3:
            items.append(_vary(items[rng.randrange(len(items))], rng))
        return tuple(items)
    return value


def _vary_char(char, rng):
    if char.isdigit():
        return rng.choice(string.digits)
    if char in string.ascii_lowercase:
        return rng.choice(string.ascii_lowercase)
    if char in string.ascii_uppercase:
        return rng.choice(string.ascii_uppercase)
    return char


def _breaking(value):
    """A value outside the usual domain of the hard-coded one."""
    kind = type_name(value)
    if kind == "int":
        return I64_MAX
    if kind == "float":
        return -1.0e9
    if kind == "str":
        return ""
    if kind == "list":
        return ()
    return value


def _corrupt(value, rng):
    varied = _vary(value, rng)
    return _breaking(value) if value_eq(varied, value) else varied


def _fenced(code):
    return f"```mtl\n{code.rstrip()}\n```"


def _source_lets(names, bindings):
    return [f"#[source] let {name} = {render(bindings[name])};" for name in names]


class SynthBackend:
    backend_id = "synth"

    def count(self, ctx, cfg, prompt):
        profile_named(cfg.synth_profile)
        _scenario(ctx.mut_code, ctx.mtc_code)
        return cfg.repetitions

    @staticmethod
    def _rng(ctx, cfg, index):
        return random.Random(f"{cfg.seed}:{ctx.request_key}:{index}")

    def complete(self, ctx, cfg, prompt, index):
        scenario = _scenario(ctx.mut_code, ctx.mtc_code)
        profile = profile_named(cfg.synth_profile)
        rng = self._rng(ctx, cfg, index)
        if ctx.task is Task.SOURCE_INPUTS:
            return self._sources(scenario, profile, cfg, rng)
        if ctx.task is Task.INPUT_PAIRS:
            return self._pairs(ctx, scenario, profile, cfg, rng, index)
        return self._transformation(ctx, scenario, profile, cfg, rng, index)

    def _sources(self, scenario, profile, cfg, rng):
        names = scenario.model.source_vars
        snippets = []
        for _ in range(cfg.examples_per_request):
            varied = {name: _vary(scenario.hardcoded.source[name], rng) for name in names}
            snippets.append("\n".join(_source_lets(names, varied)))
        if profile.duplicates and len(snippets) > 1:
            snippets[-1] = snippets[0]
        if profile.invalid_sources and len(snippets) > 2:
            broken = {name: _breaking(scenario.hardcoded.source[name]) for name in names}
            snippets[-2] = "\n".join(_source_lets(names, broken))
        return "Here are new source inputs.\n\n" + "\n\n".join(_fenced(s) for s in snippets) + "\n"

    def _known_sources(self, ctx, scenario):
        found = []
        for snippet in ctx.source_examples:
            try:
                bindings, _ = bindings_from_block(scenario.model, parse_block(snippet), scenario.model.source_vars,
                                                  scenario.registry, _LIMITS)
            except MtlError:
                bindings = None
            if bindings is not None:
                found.append(bindings)
        return found or [dict(scenario.hardcoded.source)]

    def _pairs(self, ctx, scenario, profile, cfg, rng, index):
        model = scenario.model
        learned = learn(scenario, ())
        rule = build_candidate(scenario, learned, "correct")
        sources = self._known_sources(ctx, scenario)
        snippets = []
        for j in range(cfg.examples_per_request):
            source = dict(sources[(index * cfg.examples_per_request + j) % len(sources)])
            if index > 0:
                source = {name: _vary(value, rng) for name, value in source.items()}
            value, failure = call_function(rule, [source[name] for name in model.source_vars],
                                           scenario.registry, _LIMITS, model.environment())
            if failure is not None:
                continue
            values = value if scenario.skeleton.return_shape is ReturnShape.LIST else (value,)
            followup = dict(zip(model.followup_vars, values))
            if profile.invalid_pairs and j == cfg.examples_per_request - 1:
                followup = {name: _corrupt(v, rng) for name, v in followup.items()}
            lines = _source_lets(model.source_vars, source)
            if profile.stray_assert and j == 1:
                name = model.source_vars[0]
                lines.append(f"assert {name} != {render(source[name])};")
            lines += [f"#[followup] let {name} = {render(followup[name])};" for name in model.followup_vars]
            snippets.append("\n".join(lines))
        return "Here are more input pairs.\n\n" + "\n\n".join(_fenced(s) for s in snippets) + "\n"

    def _transformation(self, ctx, scenario, profile, cfg, rng, index):
        pairs = []
        for snippet in ctx.example_pairs:
            try:
                block = parse_block(snippet)
            except MtlError:
                continue
            names = scenario.model.source_vars + scenario.model.followup_vars
            bindings, _ = bindings_from_block(scenario.model, block, names, scenario.registry, _LIMITS)
            if bindings is not None:
                pairs.append(_PairView(bindings, scenario.model))
        learned = learn(scenario, pairs)
        schedule = profile.kinds
        kind = schedule[index % len(schedule)]
        if rng.random() < cfg.temperature * PERTURB_SCALE:
            kind = schedule[(index + 1) % len(schedule)]
        fn = build_candidate(scenario, learned, kind)
        return f"The transformation derives the follow-up input.\n\n{_fenced(print_function(fn))}\n"


class _PairView:
    def __init__(self, bindings, model):
        self.source = {name: bindings[name] for name in model.source_vars}
        self.followup = {name: bindings[name] for name in model.followup_vars}


# seeded random programs for parser round-trip checks

_VARS = ("a", "b", "count", "text", "items", "total", "flag", "acc")
_CALLEES = ("len", "upper", "append", "max", "helper", "sut.encode")
_STRINGS = ("", "plain", 'he said "hi"', "tab\tstop", "line\nbreak", "back\\slash", "café", "bell\u0007")
_TYPES = (None, TypeRef("int"), TypeRef("str"), TypeRef("list", TypeRef("int")), TypeRef("float"))


def random_expr(rng, depth=3):
    if depth <= 0 or rng.random() < 0.3:
        choice = rng.randrange(6)
        if choice == 0:
            return Literal(LiteralKind.INT, rng.randint(-10_000, 1_000_000))
        if choice == 1:
            return Literal(LiteralKind.FLOAT, round(rng.uniform(-1000.0, 1000.0), 3))
        if choice == 2:
            return Literal(LiteralKind.STR, rng.choice(_STRINGS))
        if choice == 3:
            return Literal(LiteralKind.BOOL, rng.random() < 0.5)
        if choice == 4:
            return Literal(LiteralKind.UNIT, None)
        return Name(rng.choice(_VARS))
    choice = rng.randrange(5)
    if choice == 0:
        op = rng.choice(("+", "-", "*", "/", "%", "==", "!=", "<", "<=", ">", ">=", "&&", "||"))
        return Binary(op, random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if choice == 1:
        return Unary(rng.choice(("-", "!")), random_expr(rng, depth - 1))
    if choice == 2:
        args = tuple(random_expr(rng, depth - 1) for _ in range(rng.randrange(3)))
        return Call(rng.choice(_CALLEES), args)
    if choice == 3:
        return ListExpr(tuple(random_expr(rng, depth - 1) for _ in range(rng.randrange(4))))
    return Index(random_expr(rng, depth - 1), random_expr(rng, depth - 1))


def random_block(rng, depth=2, in_function=False, size=4):
    stmts = []
    for _ in range(rng.randrange(1, size + 1)):
        choice = rng.randrange(8 if depth > 0 else 5)
        if choice == 0:
            annotations = (rng.choice(("source", "followup")),) if rng.random() < 0.2 else ()
            stmts.append(Stmt.make(Let(rng.choice(_VARS), rng.choice(_TYPES), random_expr(rng)), annotations))
        elif choice == 1:
            stmts.append(Stmt.make(Assign(rng.choice(_VARS), random_expr(rng))))
        elif choice == 2:
            stmts.append(Stmt.make(ExprStmt(random_expr(rng))))
        elif choice == 3:
            stmts.append(Stmt.make(Assert(random_expr(rng))))
        elif choice == 4:
            if in_function:
                stmts.append(Stmt.make(Return(random_expr(rng) if rng.random() < 0.8 else None)))
            else:
                stmts.append(Stmt.make(ExprStmt(random_expr(rng))))
        elif choice in (5, 6):
            then = random_block(rng, depth - 1, in_function, size)
            roll = rng.random()
            if roll < 0.3:
                orelse = None
            elif roll < 0.5:
                nested = If(random_expr(rng), random_block(rng, depth - 1, in_function, size))
                orelse = Block.of([Stmt.make(nested)])
            else:
                orelse = random_block(rng, depth - 1, in_function, size)
            stmts.append(Stmt.make(If(random_expr(rng), then, orelse)))
        else:
            stmts.append(Stmt.make(For(rng.choice(_VARS), random_expr(rng),
                                       random_block(rng, depth - 1, in_function, size))))
    return Block.of(stmts)


def random_program(rng, max_functions=3, max_tests=2):
    """A syntactically valid (not necessarily well-typed) MTL program."""
    functions = []
    for number in range(rng.randrange(max_functions + 1)):
        params = tuple(Param(f"p{i}", rng.choice(_TYPES)) for i in range(rng.randrange(3)))
        functions.append(FuncDef(f"fn_{number}", params, rng.choice(_TYPES), random_block(rng, in_function=True),
                                 rng.choice(list(Origin)), ("pure",) if rng.random() < 0.2 else ()))
    tests = [TestDef(f"test_{number}", random_block(rng)) for number in range(rng.randrange(max_tests + 1))]
    return Program(tuple(functions), tuple(tests))
