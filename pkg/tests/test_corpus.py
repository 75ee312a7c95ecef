import itertools

import pytest

from imbes.utils import corpus as corpus_module
from imbes.utils.base import SearchBudget, parse_rule
from imbes.utils.corpus import FAIL, PASS, SKIP, Corpus, _guarded, report_table, row
from imbes.utils.custom_exceptions import ExceptionHandler, ParseError
from imbes.utils.support import Status, Verdict, Witness
from imbes.utils.syntax import ALL_CONDITIONS, Condition, parse_extended_sequent


def statuses(rows):
    return {result["id"]: result["status"] for result in rows}


def test_filtered_conditions_are_skipped():
    corpus = Corpus(frozenset(), SearchBudget(), 2, 0)
    assert set(statuses(corpus.axiom_rows()).values()) == {SKIP}


def test_single_axiom_row():
    corpus = Corpus(frozenset({Condition.T}), SearchBudget(), 2, 0)
    results = statuses(corpus.axiom_rows())
    assert results["1-axiom-T"] == PASS
    assert results["1-axiom-D"] == SKIP
    assert len(corpus.proved) == 1


def test_negative_rows_pass():
    corpus = Corpus(frozenset(ALL_CONDITIONS), SearchBudget(), 2, 0)
    assert set(statuses(corpus.negative_rows()).values()) == {PASS}


def test_metatheory_rows(monkeypatch):
    monkeypatch.setattr(corpus_module, "CORPUS_RANDOM_CASES", 40)
    corpus = Corpus(frozenset(ALL_CONDITIONS), SearchBudget(), 2, 3)
    results = statuses(corpus.metatheory_rows())
    assert results == {
        "4-weakening": PASS,
        "4-monotonicity": PASS,
        "4-budget": PASS,
        "4-basic-inference": PASS,
    }


def test_basic_inference_row_checks_hypotheses_against_axioms(monkeypatch):
    real = corpus_module.derives

    def ignores_hypotheses(base, gamma, context, goal, budget):
        return None if context else real(base, gamma, context, goal, budget)

    monkeypatch.setattr(corpus_module, "CORPUS_RANDOM_CASES", 200)
    monkeypatch.setattr(corpus_module, "derives", ignores_hypotheses)
    corpus = Corpus(frozenset(ALL_CONDITIONS), SearchBudget(), 2, 3)
    assert statuses(corpus.metatheory_rows())["4-basic-inference"] == FAIL


def test_soundness_rows_report_no_counterexample():
    corpus = Corpus(frozenset({Condition.T}), SearchBudget(), 2, 0)
    list(corpus.axiom_rows())
    (result,) = corpus.soundness_rows()
    assert result["status"] == PASS
    assert result["details"].endswith("no counterexample")


def test_soundness_rows_report_the_witness(monkeypatch):
    witness = Witness((parse_rule("=> q@x"),), parse_extended_sequent("|- p@x"), "p@x is not derivable")
    refuted = Verdict(Status.FALSIFIED, True, witness)
    monkeypatch.setattr(corpus_module, "spotcheck_verdict", lambda *args: refuted)
    corpus = Corpus(frozenset({Condition.T}), SearchBudget(), 2, 0)
    list(corpus.axiom_rows())
    (result,) = corpus.soundness_rows()
    assert result["status"] == FAIL
    assert "refuted at |- p@x" in result["details"]
    assert "=> q@x" in result["details"]


def test_flattening_rows(monkeypatch):
    monkeypatch.setattr(corpus_module, "CORPUS_FLATTEN_CASES", 200)
    corpus = Corpus(frozenset(), SearchBudget(), 2, 1)
    (result,) = corpus.flattening_rows()
    assert result["status"] == PASS
    assert result["details"] == "0 failures in 200 cases"


def test_falsifier_rows_replay():
    corpus = Corpus(frozenset(), SearchBudget(), 2, 0)
    results = list(itertools.islice(corpus.falsifier_rows(), 2))
    assert [r["id"] for r in results] == ["7-falsify-0", "7-falsify-1"]
    assert {r["status"] for r in results} == {PASS}


def test_guarded_reports_custom_exceptions():
    def broken():
        raise ParseError("boom")

    ExceptionHandler.initialize(False)
    result = _guarded("x-broken", broken)
    assert result["status"] == FAIL
    assert "boom" in result["details"]

    ExceptionHandler.initialize(True)
    with pytest.raises(ParseError):
        _guarded("x-broken", broken)


def test_report_table_numbers_rows():
    rows = [row("a", PASS), row("b", FAIL, "why")]
    assert report_table(rows) == [[1, "a", PASS, ""], [2, "b", FAIL, "why"]]
