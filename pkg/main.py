# imports from flask
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import click
from flask.cli import AppGroup

# import "objects" from "this" project
from __init__ import app  # Key Flask object
from api.generator import BACKENDS, make_backend
from api.replay import PinningBackend, RecordingBackend
from model.analysis import build_def_use_graph, dump_graph
from model.checker import check_program
from model.corpus import discover_cases, load_case, load_program, resolve_case
from model.errors import BackendError, ConfigError, MtlError
from model.evaluation import evaluate_case, write_evaluation
from model.inputs import snippet_effects
from model.mtc import SOURCE, extract_mtc, hardcoded_pair
from model.pipeline import ABLATIONS, run_adopt
from model.runtime import SutRegistry
from model.settings import load_config, pipeline_config
from model.syntax import Origin, Program


EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ENVIRONMENT = 2

FILE_ORIGINS = {"sut.mtl": Origin.SUT, "ground_truth.mtl": Origin.TRANSFORMATION}
OVERRIDE_SETTINGS = {"ignore_unknown_options": True}


def exit_code_for(error):
    """Environment problems (config, backend, I/O) are 2; anything wrong with a case is 1."""
    if isinstance(error, (ConfigError, BackendError, OSError)):
        return EXIT_ENVIRONMENT
    return EXIT_FAILED


def _fail(message, code):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def run_options(f):
    """Global flags shared by adopt, eval and record."""
    options = (
        click.option('--config', 'config_path', default=None, help='Config file with key = value lines'),
        click.option('--seed', type=int, default=None, help='Generation seed'),
        click.option('--backend', type=click.Choice(BACKENDS), default=None, help='Candidate generator'),
        click.option('--out', 'output_dir', default=None, help='Report directory'),
        click.option('--parallelism', type=int, default=None, help='Worker threads'),
        click.option('--ablate', type=click.Choice(tuple(ABLATIONS)), default=None, help='Switch components off'),
        click.option('--corpus', 'corpus_dir', default=None, help='Corpus directory'),
    )
    for option in reversed(options):
        f = option(f)
    return f


def split_args(args):
    """Leading case names, then trailing `--key value` overrides."""
    args = list(args)
    for index, token in enumerate(args):
        if token.startswith("--"):
            return args[:index], args[index:]
    return args, []


def _configure(config_path, flags, overrides):
    try:
        return load_config(config_path, flags, overrides)
    except ConfigError as e:
        _fail(str(e), EXIT_ENVIRONMENT)


def _case_paths(cfg, names, run_all):
    if run_all and names:
        _fail("pass case names or --all, not both", EXIT_ENVIRONMENT)
    if not run_all and not names:
        _fail("name at least one case or pass --all", EXIT_ENVIRONMENT)
    try:
        paths = discover_cases(cfg.corpus_dir) if run_all else [resolve_case(cfg.corpus_dir, n) for n in names]
    except OSError as e:
        _fail(str(e), EXIT_ENVIRONMENT)
    if not paths:
        _fail(f"no cases under {cfg.corpus_dir}", EXIT_FAILED)
    return paths


def for_each_case(paths, parallelism, action):
    """[(name, code, message, value)] in path order; one case failing never stops the others."""
    def one(path):
        name = os.path.basename(os.path.normpath(path))
        try:
            return action(path)
        except (MtlError, OSError) as e:
            app.logger.error(f"Case '{name}' failed: {e}")
            return name, exit_code_for(e), str(e), None

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        return list(pool.map(one, paths))


def _finish(outcomes):
    for name, code, message, _ in outcomes:
        click.echo(f"{name}: {message}", err=code != EXIT_OK)
    sys.exit(max((code for _, code, _, _ in outcomes), default=EXIT_OK))


def describe_adoption(result):
    measured = result.measurement
    if result.chosen is None:
        return "no compilable transformation"
    ties = ", tie broken" if result.report.tie_broken else ""
    return (f"chosen candidate {result.chosen.index}{ties}; applicable to "
            f"{measured['applicable_count']}/{measured['pool_size']} ({measured['over']})")


# Create an AppGroup for the adoption commands
mr_cli = AppGroup('mr', help='Adopt and evaluate the metamorphic relations of MTL test corpora')


@mr_cli.command('check')
@click.argument('paths', nargs=-1)
@click.option('--corpus', 'corpus_dir', default=None, help='Corpus checked when no path is given')
@click.option('--dump-defuse', is_flag=True, help='Print the def-use edges of every MR test body')
def check(paths, corpus_dir, dump_defuse):
    """Check MTL files or corpus cases: parse, name/arity checks, MTC extraction."""
    paths = list(paths) or [corpus_dir or app.config['CORPUS_DIR']]
    problems = 0
    for path in paths:
        if not os.path.exists(path):
            _fail(f"no such file or directory: {path}", EXIT_ENVIRONMENT)
        if os.path.isfile(path):
            targets, checker = [path], check_file
        elif os.path.exists(os.path.join(path, "mtc.mtl")):
            targets, checker = [path], check_case
        else:
            targets, checker = discover_cases(path), check_case
            if not targets:
                click.echo(f"{path}: no cases", err=True)
                problems += 1
        for target in targets:
            messages, graph = checker(target)
            problems += len(messages)
            for message in messages:
                click.echo(f"{target}: {message}", err=True)
            if not messages:
                click.echo(f"{target}: ok")
            if dump_defuse and graph is not None:
                click.echo(graph)
    sys.exit(EXIT_FAILED if problems else EXIT_OK)


def check_case(path):
    """(problems, def-use dump) for one case directory."""
    try:
        case = load_case(path)
    except MtlError as e:
        return [str(e)], None
    registry = case.registry
    sigs = registry.signatures
    reports = [("sut.mtl", check_program(case.sut, sigs)), ("mtc.mtl", check_program(case.mtc_program, sigs))]
    problems = []
    try:
        model = case.model()
        hardcoded_pair(model, registry)
    except MtlError as e:
        return [f"mtc.mtl: {e}"] + _report_problems(reports), None
    if case.ground_truth is not None:
        truth = Program((case.ground_truth,) + case.ground_truth_helpers)
        reports.append(("ground_truth.mtl", check_program(truth, sigs, model.helpers)))
    if case.tests is not None:
        reports.append(("tests.mtl", check_program(case.tests, sigs, model.helpers)))
    for name, functions in case.faults:
        reports.append((f"faults/{name}.mtl", check_program(Program(tuple(functions)), sigs)))
    problems += _report_problems(reports)
    graph = build_def_use_graph(model.full_body, snippet_effects(model, registry))
    return problems, f"# {case.name}/{model.test_name}\n{dump_graph(graph)}"


def check_file(path):
    """(problems, def-use dump) for a single .mtl file; a sibling sut.mtl supplies the SUT."""
    base = os.path.basename(path)
    sibling = os.path.join(os.path.dirname(path), "sut.mtl")
    try:
        program = load_program(path, FILE_ORIGINS.get(base, Origin.HELPER))
        if base != "sut.mtl" and os.path.exists(sibling):
            registry = SutRegistry.from_program(load_program(sibling, Origin.SUT))
        else:
            registry = SutRegistry.from_program(program)
    except MtlError as e:
        return [str(e)], None
    problems = _report_problems([(base, check_program(program, registry.signatures))])
    dumps = []
    for test in program.tests:
        if not any(stmt.has_annotation(SOURCE) for stmt in test.body):
            continue
        try:
            model = extract_mtc(program, test.name, registry)
        except MtlError as e:
            problems.append(f"{test.name}: {e}")
            continue
        graph = build_def_use_graph(model.full_body, snippet_effects(model, registry))
        dumps.append(f"# {test.name}\n{dump_graph(graph)}")
    return problems, "\n".join(dumps) or None


def _report_problems(reports):
    return [f"{name}: {diagnostic}" for name, report in reports for diagnostic in report.errors]


@mr_cli.command('adopt', context_settings=OVERRIDE_SETTINGS)
@click.argument('args', nargs=-1, type=click.UNPROCESSED)
@click.option('--all', 'run_all', is_flag=True, help='Adopt every case of the corpus')
@run_options
def adopt(args, run_all, config_path, **flags):
    """Adopt the MR of each named case (or --all) into a generalized transformation."""
    names, overrides = split_args(args)
    cfg = _configure(config_path, flags, overrides)
    paths = _case_paths(cfg, names, run_all)
    pipeline = pipeline_config(cfg)

    def one(path):
        result = run_adopt(path, pipeline, cfg.output_dir)
        return result.case.name, EXIT_OK if result.chosen else EXIT_FAILED, describe_adoption(result), result

    _finish(for_each_case(paths, cfg.parallelism, one))


@mr_cli.command('eval', context_settings=OVERRIDE_SETTINGS)
@click.argument('args', nargs=-1, type=click.UNPROCESSED)
@click.option('--all', 'run_all', is_flag=True, help='Evaluate every case of the corpus')
@run_options
def evaluate(args, run_all, config_path, **flags):
    """Adopt, then measure generalizability and compare suite adequacy (D, L, M)."""
    names, overrides = split_args(args)
    cfg = _configure(config_path, flags, overrides)
    paths = _case_paths(cfg, names, run_all)
    pipeline = pipeline_config(cfg)

    def one(path):
        result = run_adopt(path, pipeline, cfg.output_dir)
        evaluation = evaluate_case(result.case, pipeline, result)
        scores = evaluation.adequacy.mutation_score
        summary = ", ".join(f"{combo} {score:.3f}" for combo, score in scores.items())
        message = f"{describe_adoption(result)}; mutation score {summary}"
        return result.case.name, EXIT_OK if result.chosen else EXIT_FAILED, message, evaluation

    outcomes = for_each_case(paths, cfg.parallelism, one)
    evaluations = [value for _, _, _, value in outcomes if value is not None]
    if evaluations:
        write_evaluation(evaluations, cfg.output_dir)
    _finish(outcomes)


@mr_cli.command('record', context_settings=OVERRIDE_SETTINGS)
@click.argument('args', nargs=-1, type=click.UNPROCESSED)
@click.option('--force', is_flag=True, help='Overwrite existing fixtures')
@run_options
def record(args, force, config_path, **flags):
    """Run adopt against a live backend and capture every exchange as replay fixtures."""
    names, overrides = split_args(args)
    flags['backend'] = flags.get('backend') or 'http'
    cfg = _configure(config_path, flags, overrides)
    if cfg.backend == 'replay':
        _fail("record needs a live backend (http or synth)", EXIT_ENVIRONMENT)
    paths = _case_paths(cfg, names, False)
    pipeline = pipeline_config(cfg)

    def one(path):
        case = load_case(path)
        target = cfg.fixture_dir or case.fixture_dir
        if not force and os.path.isdir(target) and os.listdir(target):
            raise ConfigError(f"fixtures already exist under {target} (pass --force to overwrite)")
        recorder = RecordingBackend(make_backend(pipeline.gen), target)
        result = run_adopt(case, pipeline, cfg.output_dir, backend=recorder)
        app.logger.info(f"Recorded fixtures for '{case.name}' under {target}")
        return case.name, EXIT_OK, f"recorded under {target}; {describe_adoption(result)}", result

    _finish(for_each_case(paths, cfg.parallelism, one))



@mr_cli.command('pin', context_settings=OVERRIDE_SETTINGS)
@click.argument('args', nargs=-1, type=click.UNPROCESSED)
@click.option('--all', 'run_all', is_flag=True, help='Pin every case of the corpus')
@run_options
def pin(args, run_all, config_path, **flags):
    """Replay the fixtures of each case and pin them to the prompts that request them."""
    names, overrides = split_args(args)
    flags['backend'] = 'replay'
    cfg = _configure(config_path, flags, overrides)
    paths = _case_paths(cfg, names, run_all)
    pipeline = pipeline_config(cfg)

    def one(path):
        pinner = PinningBackend()
        result = run_adopt(path, pipeline, cfg.output_dir, backend=pinner)
        keys = ", ".join(sorted(os.path.basename(p) for p in pinner.pinned)) or "nothing"
        return result.case.name, EXIT_OK, f"pinned {keys}", result

    _finish(for_each_case(paths, cfg.parallelism, one))


app.cli.add_command(mr_cli)


# this runs the flask CLI when the file is executed directly: python main.py mr adopt --all
if __name__ == "__main__":
    from flask.cli import FlaskGroup
    FlaskGroup(create_app=lambda: app)()
