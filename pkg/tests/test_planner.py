from __future__ import annotations

import pytest

from llada.corpus import KeywordSet, find_matching_paragraphs
from llada.llm import CountingBackend, QueueBackend, canonicalize
from llada.planner import (
    GuardrailCase,
    NewPlan,
    PlanEmpty,
    adapt_plan,
    build_plan_prompt,
    check_guardrail,
    iter_guardrail_queries,
    load_guardrail_cases,
    run_guardrail_suite,
)
from llada.tre import DriverQuery, TreResult, extract_rules

from conftest import FIXTURES, GUARDRAIL_CASES


def tre_for(store, jurisdiction, keywords):
    handbook = store.load(jurisdiction)
    excerpts = tuple(find_matching_paragraphs(handbook, KeywordSet(keywords)))
    return TreResult(
        keywords=KeywordSet(keywords), excerpts=excerpts, no_match=not excerpts
    )


class TestPlanPrompt:
    def test_interpolates_excerpts_with_indices(self, store):
        q = DriverQuery(target_jurisdiction="nyc", nominal_plan="Turn right on red")
        tre = tre_for(store, "nyc", ["red light", "right turn"])
        assert len(tre.excerpts) >= 2
        user = build_plan_prompt(q, tre, store.load("nyc")).messages[1].content
        for e in tre.excerpts:
            assert f"[nyc #{e.paragraph_index}]" in user
            assert e.text in user
        assert 'in language "en"' in user

    def test_no_match_block(self, store):
        q = DriverQuery(target_jurisdiction="nyc", nominal_plan="Turn right")
        tre = tre_for(store, "nyc", ["zeppelin"])
        assert tre.no_match
        user = build_plan_prompt(q, tre, store.load("nyc")).messages[1].content
        assert "No matching local rule was found" in user
        assert "[nyc #" not in user

    def test_output_language_requested(self, store):
        q = DriverQuery(
            target_jurisdiction="nyc", nominal_plan="Turn right", output_language="nl"
        )
        tre = tre_for(store, "nyc", ["red light"])
        user = build_plan_prompt(q, tre, store.load("nyc")).messages[1].content
        assert 'in language "nl"' in user

    def test_frozen_honk_prompt(self, store, golden_backend, settings):
        q = DriverQuery(
            target_jurisdiction="nyc",
            nominal_plan="Turn right",
            origin_jurisdiction="california",
            unexpected_situation="someone honks at me",
        )
        handbook = store.load("nyc")
        tre = extract_rules(q, handbook, golden_backend, settings)
        prompt = build_plan_prompt(q, tre, handbook)
        frozen = (FIXTURES / "golden" / "plan_prompt_honk.txt").read_text()
        assert canonicalize(prompt) + "\n" == frozen


class TestAdaptPlan:
    def test_happy_path_two_completions(self, store, settings):
        q = DriverQuery(target_jurisdiction="nyc", nominal_plan="Turn right on red")
        backend = CountingBackend(
            QueueBackend(["red light", "Do not turn right on red."])
        )
        plan = adapt_plan(q, store, backend, settings)
        assert backend.count == 2
        assert plan.instruction == "Do not turn right on red."
        assert not plan.generic
        assert plan.cited_excerpts
        assert plan.query == q
        assert len(plan.trace_id) == 32

    def test_retry_path_three_completions(self, store, settings):
        q = DriverQuery(target_jurisdiction="nyc", nominal_plan="Turn right")
        backend = CountingBackend(
            QueueBackend(["zeppelin", "airship", "Proceed with general caution."])
        )
        plan = adapt_plan(q, store, backend, settings)
        assert backend.count == 3
        assert plan.generic
        assert plan.cited_excerpts == ()

    def test_blank_completion_raises(self, store, settings):
        q = DriverQuery(target_jurisdiction="nyc", nominal_plan="Turn right")
        backend = QueueBackend(["red light", "   "])
        with pytest.raises(PlanEmpty):
            adapt_plan(q, store, backend, settings)

    def test_generic_flag_tracks_no_match(self, store, settings):
        q = DriverQuery(target_jurisdiction="nyc", nominal_plan="Turn right")
        plan = adapt_plan(
            q, store, QueueBackend(["zeppelin", "airship", "Generic advice."]),
            settings,
        )
        assert plan.generic == (len(plan.cited_excerpts) == 0) == True  # noqa: E712


def test_new_plan_invariants():
    ks = KeywordSet(["stop"])
    q = DriverQuery(target_jurisdiction="nyc", nominal_plan="x")
    with pytest.raises(ValueError):
        NewPlan(
            instruction=" ",
            cited_excerpts=(),
            generic=True,
            keywords=ks,
            query=q,
            trace_id="t",
        )
    with pytest.raises(ValueError):
        NewPlan(
            instruction="ok",
            cited_excerpts=(),
            generic=False,
            keywords=ks,
            query=q,
            trace_id="t",
        )


@pytest.fixture(scope="module")
def cases():
    return {c.case_id: c for c in load_guardrail_cases(GUARDRAIL_CASES)}


class TestCheckGuardrail:

    def test_red_light_pass(self, cases):
        verdict = check_guardrail(
            "Come to a complete stop at the red light.", cases["red_light"]
        )
        assert verdict.passed

    def test_stop_sign_fail_missing_required(self, cases):
        verdict = check_guardrail(
            "Proceed through the intersection without slowing.", cases["stop_sign"]
        )
        assert not verdict.passed
        assert any("missing" in r for r in verdict.reasons)

    def test_rain_pass(self, cases):
        verdict = check_guardrail(
            "Reduce speed and turn on the headlight.", cases["heavy_rain"]
        )
        assert verdict.passed

    def test_forbidden_phrase_fails(self, cases):
        verdict = check_guardrail(
            "Stop briefly, then accelerate through the junction.",
            cases["stop_sign"],
        )
        assert not verdict.passed
        assert any("forbidden" in r for r in verdict.reasons)

    def test_whitespace_and_case_normalized(self, cases):
        verdict = check_guardrail(
            "WAIT  until\nit turns GREEN.", cases["red_light"]
        )
        assert verdict.passed

    def test_pure_function(self, cases):
        text = "Yield to the pedestrian."
        first = check_guardrail(text, cases["pedestrian"])
        assert all(
            check_guardrail(text, cases["pedestrian"]) == first for _ in range(3)
        )


class TestGuardrailSuite:
    def test_query_iteration_deterministic(self, store):
        cases = load_guardrail_cases(GUARDRAIL_CASES)
        ids = store.jurisdiction_ids()
        a = iter_guardrail_queries(cases, 5, ids, seed=0)
        b = iter_guardrail_queries(cases, 5, ids, seed=0)
        assert [(c.case_id, q) for c, q in a] == [(c.case_id, q) for c, q in b]
        case_order = [c.case_id for c, _ in a]
        assert case_order == sorted(case_order)

    def test_seed_rotates_targets(self, store):
        cases = load_guardrail_cases(GUARDRAIL_CASES)
        ids = store.jurisdiction_ids()
        t0 = [q.target_jurisdiction for _, q in iter_guardrail_queries(cases, 2, ids, 0)]
        t1 = [q.target_jurisdiction for _, q in iter_guardrail_queries(cases, 2, ids, 1)]
        assert t0 != t1

    def test_mixed_tally(self, store, settings):
        cases = [
            GuardrailCase(
                case_id="a_first",
                plan="Continue",
                situation="the light turns red",
                required_any=(("stop",),),
                forbidden=("accelerate",),
            ),
            GuardrailCase(
                case_id="b_second",
                plan="Continue",
                situation="the light turns red",
                required_any=(("stop",),),
                forbidden=(),
            ),
        ]
        # iteration order: a_first x2 then b_second x2; one bad answer in a_first
        backend = QueueBackend(
            [
                "red light", "Stop at the line.",
                "red light", "Accelerate and cruise on.",
                "red light", "Stop smoothly.",
                "red light", "Stop and wait.",
            ]
        )
        report = run_guardrail_suite(cases, 2, store, backend, settings, seed=0)
        assert report.per_case["a_first"].n == 2
        assert report.per_case["a_first"].errors == 1
        assert report.per_case["a_first"].error_rate == 0.5
        assert report.per_case["b_second"].errors == 0
        assert report.overall_error_rate == 0.25

    def test_pipeline_error_counts_not_aborts(self, store, settings):
        cases = [
            GuardrailCase(
                case_id="only",
                plan="Continue",
                situation="the light turns red",
                required_any=(("stop",),),
                forbidden=(),
            )
        ]
        # second example's backend queue is drained -> pipeline error
        backend = QueueBackend(["red light", "Stop at the line."])
        report = run_guardrail_suite(cases, 2, store, backend, settings, seed=0)
        assert report.per_case["only"].n == 2
        assert report.per_case["only"].errors == 1
        assert report.overall_error_rate == 0.5

    def test_case_validation(self):
        with pytest.raises(ValueError):
            GuardrailCase(
                case_id="x", plan="p", situation="s",
                required_any=(), forbidden=(),
            )
        with pytest.raises(ValueError):
            GuardrailCase(
                case_id="x", plan="p", situation="s",
                required_any=((" ",),), forbidden=(),
            )
