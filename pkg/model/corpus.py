"""
Corpus cases on disk

    corpus/<case>/sut.mtl            SUT functions (origin SUT by default)
    corpus/<case>/mtc.mtl            the MR-encoded test plus its helpers
    corpus/<case>/ground_truth.mtl   optional reference transformation
    corpus/<case>/tests.mtl          optional non-MR developer tests
    corpus/<case>/faults/<name>.mtl  optional seeded faults (replacement SUT functions)
    corpus/<case>/meta.json          name, test, tags, expected verdicts
    corpus/<case>/fixtures/          replay fixtures
"""
import fcntl
import json
import os
from dataclasses import dataclass, field

from model.errors import ExtractionError, MtlError
from model.mtc import derive_skeleton, extract_mtc
from model.parser import parse_program
from model.runtime import SutRegistry
from model.syntax import Origin, Program


def _read_json_file(path, default=None):
    """Read a JSON file with a shared lock"""
    if not os.path.exists(path):
        return default
    with open(path, "r", encoding="utf-8") as f:
        fcntl.flock(f, fcntl.LOCK_SH)
        try:
            data = json.load(f)
        finally:
            fcntl.flock(f, fcntl.LOCK_UN)
    return data


def _write_json_file(path, data):
    """Write a JSON report with an exclusive lock; keys sorted so output is stable"""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        fcntl.flock(f, fcntl.LOCK_EX)
        try:
            json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
        finally:
            fcntl.flock(f, fcntl.LOCK_UN)


def _write_text_file(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        fcntl.flock(f, fcntl.LOCK_EX)
        try:
            f.write(text)
        finally:
            fcntl.flock(f, fcntl.LOCK_UN)


def read_source(path):
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def load_program(path, default_origin):
    return parse_program(read_source(path), default_origin)


@dataclass
class Case:
    name: str
    path: str
    sut: Program
    mtc_program: Program
    test_name: str
    meta: dict = field(default_factory=dict)
    ground_truth: object = None
    ground_truth_helpers: tuple = ()
    tests: object = None
    faults: list = field(default_factory=list)

    @property
    def registry(self):
        return SutRegistry.from_program(self.sut)

    @property
    def fixture_dir(self):
        return os.path.join(self.path, "fixtures")

    @property
    def expected(self):
        """Expected verdicts: fully_generalizable and the ablations that lose the case."""
        expected = self.meta.get("expected") or {}
        return {
            "fully_generalizable": bool(expected.get("fully_generalizable", False)),
            "lost_under": list(expected.get("lost_under", [])),
        }

    def model(self):
        return extract_mtc(self.mtc_program, self.test_name, self.registry)

    def read(self):
        return {
            "name": self.name,
            "test": self.test_name,
            "tags": list(self.meta.get("tags", [])),
            "expected": self.expected,
            "has_ground_truth": self.ground_truth is not None,
            "faults": [name for name, _ in self.faults],
        }


def load_case(path):
    """Load one corpus case directory.

    Args:
        path: directory holding at least sut.mtl and mtc.mtl.

    Returns:
        Case; raises OSError when required files are missing and MtlError
        subclasses when they do not parse.
    """
    path = os.path.normpath(path)
    meta = _read_json_file(os.path.join(path, "meta.json"), {}) or {}
    name = meta.get("name") or os.path.basename(path)
    sut = load_program(os.path.join(path, "sut.mtl"), Origin.SUT)
    mtc_program = load_program(os.path.join(path, "mtc.mtl"), Origin.HELPER)

    test_name = meta.get("test")
    if test_name is None:
        if len(mtc_program.tests) != 1:
            raise ExtractionError(f"case '{name}' must name its MR test in meta.json")
        test_name = mtc_program.tests[0].name

    case = Case(name=name, path=path, sut=sut, mtc_program=mtc_program, test_name=test_name, meta=meta)

    truth_path = os.path.join(path, "ground_truth.mtl")
    if os.path.exists(truth_path):
        truth = load_program(truth_path, Origin.TRANSFORMATION)
        wanted = derive_skeleton(case.model()).fn_name
        case.ground_truth = truth.function(wanted)
        if case.ground_truth is None:
            raise ExtractionError(f"ground truth of '{name}' does not define '{wanted}'")
        case.ground_truth_helpers = tuple(fn for fn in truth.functions if fn.name != wanted)

    tests_path = os.path.join(path, "tests.mtl")
    if os.path.exists(tests_path):
        case.tests = load_program(tests_path, Origin.HELPER)

    faults_dir = os.path.join(path, "faults")
    if os.path.isdir(faults_dir):
        for entry in sorted(os.listdir(faults_dir)):
            if entry.endswith(".mtl"):
                program = load_program(os.path.join(faults_dir, entry), Origin.SUT)
                for fn in program.functions:
                    if fn.name not in case.registry:
                        raise MtlError(f"fault '{entry}' replaces unknown SUT function '{fn.name}'")
                case.faults.append((entry[:-len(".mtl")], program.functions))
    return case


def discover_cases(corpus_dir):
    """Case directories under corpus_dir, sorted by name."""
    if not os.path.isdir(corpus_dir):
        raise FileNotFoundError(f"corpus directory not found: {corpus_dir}")
    found = []
    for entry in sorted(os.listdir(corpus_dir)):
        candidate = os.path.join(corpus_dir, entry)
        if os.path.isdir(candidate) and os.path.exists(os.path.join(candidate, "mtc.mtl")):
            found.append(candidate)
    return found


def resolve_case(corpus_dir, name_or_path):
    """Accept a case name inside the corpus or a path to a case directory."""
    if os.path.isdir(name_or_path):
        return name_or_path
    candidate = os.path.join(corpus_dir, name_or_path)
    if os.path.isdir(candidate):
        return candidate
    raise FileNotFoundError(f"no such case: {name_or_path}")
