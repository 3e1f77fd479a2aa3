"""
Tests for the `flask mr` command group, run through Flask's CLI test runner.
"""
import json
import os
import shutil

import pytest

from api.prompts import SYSTEM_MESSAGES
from main import app


@pytest.fixture
def runner():
    return app.test_cli_runner()


@pytest.fixture
def case_copy(tmp_path, corpus_dir):
    """A private copy of session_expiry, so commands may write fixtures into it."""
    target = tmp_path / "corpus" / "session_expiry"
    shutil.copytree(os.path.join(corpus_dir, "session_expiry"), target)
    return target


# check

def test_check_case(runner, corpus_dir):
    path = os.path.join(corpus_dir, "session_expiry")
    result = runner.invoke(args=["mr", "check", path])
    assert result.exit_code == 0
    assert f"{path}: ok" in result.output


def test_check_whole_corpus(runner, corpus_dir):
    result = runner.invoke(args=["mr", "check", corpus_dir])
    assert result.exit_code == 0
    assert result.output.count(": ok") == len(os.listdir(corpus_dir))


def test_check_dumps_def_use_edges(runner, corpus_dir):
    result = runner.invoke(args=["mr", "check", os.path.join(corpus_dir, "session_expiry"), "--dump-defuse"])
    assert result.exit_code == 0
    assert "# session_expiry/test_longer_ttl_expires_later" in result.output
    assert " -> " in result.output


def test_check_single_file(runner, corpus_dir):
    path = os.path.join(os.path.dirname(corpus_dir), "docs", "date_format.mtl")
    result = runner.invoke(args=["mr", "check", path, "--dump-defuse"])
    assert result.exit_code == 0
    assert "# test_to_medium_date_next_day" in result.output


def test_check_reports_broken_files(runner, tmp_path):
    broken = tmp_path / "broken.mtl"
    broken.write_text("fn f( {\n")
    result = runner.invoke(args=["mr", "check", str(broken)])
    assert result.exit_code == 1
    assert "broken.mtl" in result.output


def test_check_reports_unresolved_names(runner, tmp_path):
    source = tmp_path / "helpers.mtl"
    source.write_text("fn f(x: int) -> int { return g(x); }\n")
    result = runner.invoke(args=["mr", "check", str(source)])
    assert result.exit_code == 1
    assert "'g'" in result.output


def test_check_missing_path(runner, tmp_path):
    result = runner.invoke(args=["mr", "check", str(tmp_path / "nowhere")])
    assert result.exit_code == 2
    assert "no such file or directory" in result.output


# adopt

def test_adopt_writes_reports(runner, corpus_dir, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(args=["mr", "adopt", "session_expiry", "--corpus", corpus_dir, "--out", str(out)])
    assert result.exit_code == 0
    assert "session_expiry: chosen candidate 1; applicable to 6/6 (evaluation-pool)" in result.output
    with open(out / "session_expiry" / "adopt.json") as f:
        assert json.load(f)["chosen"] == 1
    assert "ttl + 60" in (out / "session_expiry" / "transform.mtl").read_text()


def test_adopt_reports_ties(runner, corpus_dir, tmp_path):
    result = runner.invoke(args=["mr", "adopt", "leap_year", "--corpus", corpus_dir, "--out", str(tmp_path)])
    assert result.exit_code == 0
    assert "chosen candidate 0, tie broken" in result.output


def test_adopt_overrides_and_ablation(runner, corpus_dir, tmp_path):
    result = runner.invoke(args=["mr", "adopt", "discount_price", "--corpus", corpus_dir, "--out", str(tmp_path),
                                 "--ablate", "v1", "--report-timings", "true"])
    assert result.exit_code == 0
    with open(tmp_path / "discount_price" / "adopt.json") as f:
        data = json.load(f)
    assert data["config"]["ablation"] == "v1"
    assert "timings" in data


@pytest.mark.parametrize("args,message", [
    ([], "name at least one case or pass --all"),
    (["session_expiry", "--all"], "pass case names or --all, not both"),
    (["no_such_case"], "no such case: no_such_case"),
    (["session_expiry", "--colour", "red"], "unknown config key 'colour'"),
    (["session_expiry", "--repetitions", "0"], "invalid configuration: repetitions"),
])
def test_adopt_environment_errors(runner, corpus_dir, tmp_path, args, message):
    result = runner.invoke(args=["mr", "adopt", "--corpus", corpus_dir, "--out", str(tmp_path)] + args)
    assert result.exit_code == 2
    assert message in result.output


def test_adopt_all(runner, case_copy, tmp_path):
    corpus = str(case_copy.parent)
    result = runner.invoke(args=["mr", "adopt", "--all", "--corpus", corpus, "--out", str(tmp_path / "out")])
    assert result.exit_code == 0
    assert os.path.exists(tmp_path / "out" / "session_expiry" / "adopt.json")


def test_adopt_missing_fixtures_is_an_environment_error(runner, case_copy, tmp_path):
    shutil.rmtree(case_copy / "fixtures" / "transformation")
    result = runner.invoke(args=["mr", "adopt", str(case_copy), "--out", str(tmp_path / "out")])
    assert result.exit_code == 2
    assert "no replay fixtures for 'transformation'" in result.output


# eval

def test_eval_writes_summary(runner, corpus_dir, tmp_path):
    result = runner.invoke(args=["mr", "eval", "session_expiry", "--corpus", corpus_dir, "--out", str(tmp_path)])
    assert result.exit_code == 0
    assert "mutation score D 0.667" in result.output
    with open(tmp_path / "summary.json") as f:
        assert json.load(f)["generalizable_counts"]["100"] == 1
    assert os.path.exists(tmp_path / "adequacy.csv")
    assert os.path.exists(tmp_path / "session_expiry" / "eval.json")


# record

def test_record_needs_a_live_backend(runner, case_copy, tmp_path):
    result = runner.invoke(args=["mr", "record", str(case_copy), "--backend", "replay", "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "record needs a live backend" in result.output


def test_record_refuses_to_overwrite(runner, case_copy, tmp_path):
    result = runner.invoke(args=["mr", "record", str(case_copy), "--backend", "synth", "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "pass --force to overwrite" in result.output


def test_record_with_synth(runner, case_copy, tmp_path):
    result = runner.invoke(args=["mr", "record", str(case_copy), "--backend", "synth", "--force",
                                 "--out", str(tmp_path / "out")])
    assert result.exit_code == 0
    assert "recorded under" in result.output
    recorded = case_copy / "fixtures" / "transformation"
    assert (recorded / "prompt.txt").exists()
    assert (recorded / "digest.txt").exists()

    replayed = runner.invoke(args=["mr", "adopt", str(case_copy), "--out", str(tmp_path / "again")])
    assert replayed.exit_code == 0


# pin

def test_pin_then_replay_catches_template_drift(runner, case_copy, tmp_path, monkeypatch):
    result = runner.invoke(args=["mr", "pin", str(case_copy), "--out", str(tmp_path / "out")])
    assert result.exit_code == 0
    assert "session_expiry: pinned input_pairs, source_inputs, transformation" in result.output
    for key in ("input_pairs", "source_inputs", "transformation"):
        assert (case_copy / "fixtures" / key / "digest.txt").exists()

    replayed = runner.invoke(args=["mr", "adopt", str(case_copy), "--out", str(tmp_path / "again")])
    assert replayed.exit_code == 0
    assert "chosen candidate 1" in replayed.output

    edited = SYSTEM_MESSAGES["TRANSFORMATION"] + " Prefer short functions."
    monkeypatch.setitem(SYSTEM_MESSAGES, "TRANSFORMATION", edited)
    drifted = runner.invoke(args=["mr", "adopt", str(case_copy), "--out", str(tmp_path / "drifted")])
    assert drifted.exit_code == 2
    assert "prompt drift" in drifted.output
