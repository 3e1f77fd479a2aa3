""" Shared fixtures: the bundled corpus, a tiny SUT/MTC pair and pipeline configs """
import os

import pytest

from model.corpus import load_case
from model.mtc import extract_mtc
from model.parser import parse_program
from model.pipeline import PipelineConfig
from model.runtime import SutRegistry
from model.syntax import Origin


ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS_DIR = os.path.join(ROOT, "corpus")

SHOUT_SUT = """
fn shout(text: str) -> str {
    return upper(text) + "!";
}
"""

SHOUT_MTC = """
fn stem(text: str) -> str {
    return substr(text, 0, len(text) - 1);
}

test test_shout_keeps_prefix {
    #[source] let word: str = "hi";
    #[followup] let longer: str = "hi there";
    let a = sut.shout(word);
    let b = sut.shout(longer);
    assert starts_with(b, stem(a));
}
"""


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS_DIR


@pytest.fixture
def load():
    """Loader for bundled corpus cases by name."""
    return lambda name: load_case(os.path.join(CORPUS_DIR, name))


@pytest.fixture
def shout_registry():
    return SutRegistry.from_program(parse_program(SHOUT_SUT, Origin.SUT))


@pytest.fixture
def shout_model(shout_registry):
    return extract_mtc(parse_program(SHOUT_MTC), "test_shout_keeps_prefix", shout_registry)


@pytest.fixture
def replay_config():
    """Default pipeline; fixture_dir is filled in per case by run_adopt."""
    return PipelineConfig()


@pytest.fixture(autouse=True)
def _no_token(monkeypatch):
    monkeypatch.delenv("MRADOPT_API_TOKEN", raising=False)
