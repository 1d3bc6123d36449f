#!/usr/bin/env python3
"""Record the replay cassettes under fixtures/cassettes/ and freeze the
golden transcripts.

Each scenario is driven through the real pipeline against a scripted
backend wrapped in a recorder, so every cassette entry carries the exact
canonical prompt the pipeline produces. After recording, everything is
replayed from the file and compared byte-for-byte.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from llada.corpus import CorpusStore
from llada.llm import (
    CompletionSettings,
    QueueBackend,
    RecordBackend,
    ReplayBackend,
)
from llada.motion_eval import (
    ReplanResult,
    Trajectory,
    replan_trajectory,
    serialize_trajectory,
)
from llada.llm import canonicalize
from llada.planner import (
    adapt_plan,
    build_plan_prompt,
    iter_guardrail_queries,
    load_guardrail_cases,
    run_guardrail_suite,
)
from llada.tre import DriverQuery, extract_rules

CASSETTE_DIR = ROOT / "fixtures" / "cassettes"
GOLDEN_DIR = ROOT / "fixtures" / "golden"

SETTINGS = CompletionSettings()

# Golden adaptation scenarios. Each entry: scenario id, query fields,
# scripted completions (keyword stage, then plan stage; three entries mean
# the keyword stage retries), expected flags, and an anchor that must
# appear in one cited excerpt (None for generic answers).
SCENARIOS = [
    {
        "id": "table1_row1",
        "query": {
            "origin_jurisdiction": "san francisco",
            "target_jurisdiction": "nyc",
            "nominal_plan": "Turn right on red",
            "unexpected_situation": "normal status",
        },
        "completions": [
            "red light, right turn",
            "Do not turn right on red in NYC unless a sign permitting it is posted.",
        ],
        "generic": False,
        "excerpt_anchor": "unless a sign permitting the turn is posted",
    },
    {
        "id": "table1_row1b",
        "query": {
            "origin_jurisdiction": "nyc",
            "target_jurisdiction": "san_francisco",
            "nominal_plan": "Turn right on red",
            "unexpected_situation": "normal status",
        },
        "completions": [
            "red light, right turn",
            'Stop completely, yield for pedestrians and turn right if there\'s no "No Turn on Red" sign.',
        ],
        "generic": False,
        "excerpt_anchor": "you may turn right on red unless",
    },
    {
        "id": "table1_row2",
        "query": {
            "origin_jurisdiction": "california",
            "target_jurisdiction": "germany",
            "nominal_plan": "Drive straight on the highway",
            "unexpected_situation": "an emergency vehicle is approaching from behind",
        },
        "completions": [
            "emergency vehicle",
            "Move to the right and allow the emergency vehicle to pass.",
        ],
        "generic": False,
        "excerpt_anchor": "pull to the right and make room",
    },
    {
        "id": "table1_row3",
        "query": {
            "origin_jurisdiction": "nyc",
            "target_jurisdiction": "london",
            "nominal_plan": "Drive straight on the highway",
            "unexpected_situation": (
                "the car in front drives very slowly, we are in the middle "
                "lane of a 3 lane highway"
            ),
        },
        "completions": [
            "overtake",
            "Overtake the slow car safely from the right lane, as overtaking "
            "on the left is illegal in London.",
        ],
        "generic": False,
        "excerpt_anchor": "Overtaking on the left is not permitted",
    },
    {
        "id": "table1_row4",
        "query": {
            "origin_jurisdiction": "california",
            "target_jurisdiction": "singapore",
            "nominal_plan": "Unprotected right",
            "unexpected_situation": "normal status",
        },
        "completions": [
            "turning right",
            "Yield to all other traffic and pedestrians before making your right turn.",
        ],
        "generic": False,
        "excerpt_anchor": "yield to oncoming vehicles and give way",
    },
    {
        "id": "table1_row5",
        "query": {
            "origin_jurisdiction": "california",
            "target_jurisdiction": "germany",
            "nominal_plan": "Drive straight on the highway, in the leftmost lane",
            "unexpected_situation": "I keep getting honked at by cars behind me",
        },
        "completions": [
            "left lane",
            "Move to the right lane, the leftmost lane in Germany is for "
            "overtaking and faster vehicles.",
        ],
        "generic": False,
        "excerpt_anchor": "leftmost lane is for overtaking and faster vehicles",
    },
    {
        "id": "table1_row6",
        "query": {
            "origin_jurisdiction": "california",
            "target_jurisdiction": "ontario",
            "nominal_plan": "Driving on a rural two-lane road",
            "unexpected_situation": "there's a horse pulling a carriage",
        },
        "completions": [
            "horse",
            "The driver should slow down, pass the carriage cautiously, and "
            "give plenty of space to the horse.",
        ],
        "generic": False,
        "excerpt_anchor": "give the horse plenty of space",
    },
    {
        "id": "fig3_honk",
        "query": {
            "origin_jurisdiction": "california",
            "target_jurisdiction": "nyc",
            "nominal_plan": "Turn right",
            "unexpected_situation": "someone honks at me",
        },
        "completions": [
            "honking, right turn",
            "Stay stopped; in New York City you may not turn right on red, "
            "and honking behind you does not change that. Turn right only "
            "when the light is green and the way is clear.",
        ],
        "generic": False,
        "excerpt_anchor": "Honking is otherwise prohibited",
    },
    {
        "id": "dutch_uturn",
        "query": {
            "origin_jurisdiction": "california",
            "target_jurisdiction": "london",
            "nominal_plan": "Vertragen en omdraaien",
            "unexpected_situation": "normal status",
            "output_language": "en",
        },
        "completions": [
            "u-turn",
            "Slow down gradually and make the U-turn only where it is safe "
            "and you can see clearly in both directions.",
        ],
        "generic": False,
        "excerpt_anchor": "make a U-turn only when you can see clearly",
    },
    {
        "id": "no_match_zeppelin",
        "query": {
            "origin_jurisdiction": "california",
            "target_jurisdiction": "nyc",
            "nominal_plan": "Turn right",
            "unexpected_situation": "a zeppelin is mooring above the road",
        },
        "completions": [
            "zeppelin",
            "zeppelin mooring",
            "Stop at a safe distance and wait for instructions; no specific "
            "local rule covers this, so this advice follows general "
            "safe-driving principles.",
        ],
        "generic": True,
        "excerpt_anchor": None,
    },
]

GUARDRAIL_KEYWORDS = {
    "heavy_rain": "rain",
    "pedestrian": "pedestrian",
    "red_light": "red light",
    "stop_sign": "stop sign",
}

GUARDRAIL_ANSWERS = {
    "heavy_rain": "Slow down, turn on your headlights, and leave extra "
    "following distance until the rain eases.",
    "pedestrian": "Yield to the pedestrian and wait until the crossing is "
    "clear before completing your turn.",
    "red_light": "Come to a complete stop at the red light and wait until "
    "it turns green.",
    "stop_sign": "Come to a complete stop at the stop sign and wait until "
    "it is safe to proceed.",
}

POISONED_ANSWER = (
    "You can usually accelerate through a quiet intersection if nothing is "
    "coming; the stop sign rarely matters."
)

REPLAN_BASE = Trajectory(
    waypoints=((2.5, 0.0), (5.0, 0.0), (7.5, 0.0), (10.0, 0.0), (12.5, 0.0), (15.0, 0.0)),
    dt=0.5,
)

SHIFTED = Trajectory(
    waypoints=tuple((x, y - 0.5) for x, y in REPLAN_BASE.waypoints), dt=0.5
)

REPLAN_SCENARIOS = [
    {
        "id": "echo",
        "guideline": "Maintain the current plan.",
        "completions": [serialize_trajectory(REPLAN_BASE)],
        "expect": REPLAN_BASE,
        "fallback": False,
    },
    {
        "id": "shifted",
        "guideline": "Shift the path half a meter to the right.",
        "completions": [serialize_trajectory(SHIFTED)],
        "expect": SHIFTED,
        "fallback": False,
    },
    {
        "id": "garbage",
        "guideline": "Respond in prose, ignoring the format.",
        "completions": [
            "I would rather describe the maneuver in words.",
            "Still no trajectory, sorry.",
        ],
        "expect": REPLAN_BASE,
        "fallback": True,
    },
]


def fresh(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists():
        path.unlink()
    return path


def record_scenarios(store: CorpusStore, path: Path) -> list[dict]:
    transcripts = []
    for scenario in SCENARIOS:
        query = DriverQuery(**scenario["query"])
        queue = QueueBackend(scenario["completions"])
        recorder = RecordBackend(queue, path)
        plan = adapt_plan(query, store, recorder, SETTINGS)
        assert queue.drained, f"{scenario['id']}: unused completions"
        assert plan.instruction == scenario["completions"][-1]
        assert plan.generic == scenario["generic"], scenario["id"]
        anchor = scenario["excerpt_anchor"]
        if anchor is not None:
            flat = [" ".join(e.text.split()) for e in plan.cited_excerpts]
            assert any(anchor in t for t in flat), (
                f"{scenario['id']}: anchor {anchor!r} not in excerpts"
            )
        transcripts.append(
            {
                "id": scenario["id"],
                "query": scenario["query"],
                "instruction": plan.instruction,
                "generic": plan.generic,
                "keywords": list(plan.keywords.keywords),
                "excerpt_indices": [e.paragraph_index for e in plan.cited_excerpts],
                "excerpt_anchor": anchor,
            }
        )
    return transcripts


def verify_replay(store: CorpusStore, path: Path, transcripts: list[dict]) -> None:
    backend = ReplayBackend.from_path(path)
    for entry in transcripts:
        plan = adapt_plan(DriverQuery(**entry["query"]), store, backend, SETTINGS)
        assert plan.instruction == entry["instruction"], entry["id"]
        assert plan.generic == entry["generic"]
        assert [e.paragraph_index for e in plan.cited_excerpts] == entry["excerpt_indices"]
    print(f"replayed {len(transcripts)} transcripts byte-identically")


def record_guardrails(store: CorpusStore, cases, path: Path, poison: bool) -> None:
    pairs = iter_guardrail_queries(cases, 5, store.jurisdiction_ids(), seed=0)
    for i, (case, query) in enumerate(pairs):
        answer = GUARDRAIL_ANSWERS[case.case_id]
        # poison exactly one stop_sign example
        if poison and case.case_id == "stop_sign" and i == 15:
            answer = POISONED_ANSWER
        queue = QueueBackend([GUARDRAIL_KEYWORDS[case.case_id], answer])
        recorder = RecordBackend(queue, path)
        plan = adapt_plan(query, store, recorder, SETTINGS)
        assert queue.drained and not plan.generic, (case.case_id, query)


def record_replans(path: Path) -> None:
    for scenario in REPLAN_SCENARIOS:
        queue = QueueBackend(scenario["completions"])
        recorder = RecordBackend(queue, path)
        result = replan_trajectory(
            REPLAN_BASE, scenario["guideline"], recorder, SETTINGS
        )
        assert isinstance(result, ReplanResult)
        assert queue.drained, scenario["id"]
        assert result.fallback == scenario["fallback"], scenario["id"]
        assert result.trajectory == scenario["expect"], scenario["id"]


def main():
    store = CorpusStore(ROOT / "corpus")
    cases = load_guardrail_cases(ROOT / "guardrails" / "cases.json")

    golden = fresh(CASSETTE_DIR / "golden.jsonl")
    transcripts = record_scenarios(store, golden)
    record_guardrails(store, cases, golden, poison=False)
    verify_replay(store, golden, transcripts)

    report = run_guardrail_suite(
        cases, 5, store, ReplayBackend.from_path(golden), SETTINGS, seed=0
    )
    assert report.overall_error_rate == 0.0, report
    print("guardrail suite replays clean: overall error rate 0%")

    poisoned = fresh(CASSETTE_DIR / "poisoned.jsonl")
    record_guardrails(store, cases, poisoned, poison=True)
    report = run_guardrail_suite(
        cases, 5, store, ReplayBackend.from_path(poisoned), SETTINGS, seed=0
    )
    assert report.overall_error_rate > 0.0, report
    print(f"poisoned suite error rate: {report.overall_error_rate:.2%}")

    replan = fresh(CASSETTE_DIR / "replan.jsonl")
    record_replans(replan)
    print("replan cassette recorded")

    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    (GOLDEN_DIR / "transcripts.json").write_text(
        json.dumps(transcripts, indent=2) + "\n", encoding="utf-8"
    )
    print(f"froze {len(transcripts)} transcripts to {GOLDEN_DIR / 'transcripts.json'}")

    # freeze the canonicalized planner prompt for the honk scenario
    honk = next(s for s in SCENARIOS if s["id"] == "fig3_honk")
    query = DriverQuery(**honk["query"])
    handbook = store.load(query.target_jurisdiction)
    replay = ReplayBackend.from_path(golden)
    tre_result = extract_rules(query, handbook, replay, SETTINGS)
    prompt = build_plan_prompt(query, tre_result, handbook)
    (GOLDEN_DIR / "plan_prompt_honk.txt").write_text(
        canonicalize(prompt) + "\n", encoding="utf-8"
    )
    print("froze honk plan prompt")


if __name__ == "__main__":
    main()
