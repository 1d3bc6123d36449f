"""Plan adaptation and safety guardrails.

The planner stage interpolates the query and the retrieved handbook
excerpts into the plan template, obtains one completion, and wraps it in a
NewPlan that carries full provenance (keywords, excerpts, generic flag).
Guardrail cases encode safety-critical scenarios as required/forbidden
phrase sets that adapted plans are checked against.
"""

from __future__ import annotations

import json
import logging
import secrets
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import CorpusStore, Handbook, KeywordSet, RuleExcerpt
from .llm import Backend, ChatPrompt, CompletionSettings
from .tre import (
    DEFAULT_MAX_EXCERPTS,
    DriverQuery,
    TreResult,
    _scene_block,
    extract_rules,
    load_template,
)

log = logging.getLogger("llada.planner")

PLAN_TEMPLATE = "plan.v1.txt"

PLAN_SYSTEM = "You are a driving assistant who adapts plans to local traffic rules."

NO_MATCH_BLOCK = (
    "No matching local rule was found in the handbook. Answer from general "
    "safe-driving principles and say explicitly that the advice is not based "
    "on a specific local rule."
)


class PlanEmpty(Exception):
    """Raised when the planner completion is blank."""


@dataclass(frozen=True)
class NewPlan:
    """An adapted instruction with the evidence it was produced from."""

    instruction: str
    cited_excerpts: tuple[RuleExcerpt, ...]
    generic: bool
    keywords: KeywordSet
    query: DriverQuery
    trace_id: str

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError("instruction must be non-empty")
        if self.generic != (len(self.cited_excerpts) == 0):
            raise ValueError("generic must hold exactly when no excerpts are cited")


def format_excerpts(excerpts: Sequence[RuleExcerpt], handbook: Handbook) -> str:
    """Excerpt block for the plan prompt, one paragraph per entry, each
    prefixed with its jurisdiction and paragraph index."""
    header = f"Excerpts from the {handbook.meta.display_name} driver handbook:"
    lines = [header]
    for ex in excerpts:
        lines.append(f"[{ex.jurisdiction_id} #{ex.paragraph_index}] {ex.text}")
    return "\n".join(lines)


def build_plan_prompt(
    query: DriverQuery, tre: TreResult, handbook: Handbook
) -> ChatPrompt:
    """Fill the plan template with the query and the TRE's excerpts.

    With no_match the excerpt block is replaced by an explicit instruction
    to answer from general principles and say so.
    """
    if tre.no_match:
        excerpts_block = NO_MATCH_BLOCK
    else:
        excerpts_block = format_excerpts(tre.excerpts, handbook)
    template = load_template(PLAN_TEMPLATE)
    user = template.format(
        origin=query.origin_jurisdiction,
        target=handbook.meta.display_name,
        plan=query.nominal_plan,
        situation=query.unexpected_situation,
        scene=_scene_block(query),
        excerpts=excerpts_block,
        output_language=query.output_language,
    )
    return ChatPrompt.of(system=PLAN_SYSTEM, user=user)


def new_trace_id() -> str:
    return secrets.token_hex(16)


def adapt_plan(
    query: DriverQuery,
    store: CorpusStore,
    backend: Backend,
    settings: CompletionSettings,
    max_excerpts: int = DEFAULT_MAX_EXCERPTS,
) -> NewPlan:
    """Full pipeline: extract rules, then adapt the plan.

    Exactly two completions on the happy path (one keyword extraction, one
    plan), at most three when the extractor retries.
    """
    handbook = store.load(query.target_jurisdiction)
    tre_result = extract_rules(query, handbook, backend, settings, max_excerpts)
    prompt = build_plan_prompt(query, tre_result, handbook)
    completion = backend.complete(prompt, settings)
    instruction = completion.strip()
    if not instruction:
        raise PlanEmpty("planner completion was blank")
    return NewPlan(
        instruction=instruction,
        cited_excerpts=tre_result.excerpts,
        generic=tre_result.no_match,
        keywords=tre_result.keywords,
        query=query,
        trace_id=new_trace_id(),
    )


@dataclass(frozen=True)
class GuardrailCase:
    """A safety scenario plus the phrase sets a safe answer must satisfy.

    The plan must contain at least one phrase from every list in
    required_any and none of the forbidden phrases (case-insensitive,
    whitespace-normalized substring matching).
    """

    case_id: str
    plan: str
    situation: str
    required_any: tuple[tuple[str, ...], ...]
    forbidden: tuple[str, ...]
    scene: str = ""
    origin: str = "california"

    def __post_init__(self) -> None:
        if not self.required_any:
            raise ValueError("required_any must be non-empty")
        for group in self.required_any:
            if not group or any(not p.strip() for p in group):
                raise ValueError("required phrase lists must hold non-empty phrases")
        if any(not p.strip() for p in self.forbidden):
            raise ValueError("forbidden phrases must be non-empty")

    @classmethod
    def from_dict(cls, d: dict) -> "GuardrailCase":
        return cls(
            case_id=d["case_id"],
            plan=d["plan"],
            situation=d["situation"],
            required_any=tuple(tuple(group) for group in d["required_any"]),
            forbidden=tuple(d.get("forbidden", ())),
            scene=d.get("scene", ""),
            origin=d.get("origin", "california"),
        )


def load_guardrail_cases(path: str | Path) -> list[GuardrailCase]:
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    return [GuardrailCase.from_dict(r) for r in records]


@dataclass(frozen=True)
class GuardrailVerdict:
    passed: bool
    reasons: tuple[str, ...] = ()


def _normalize_phrase(text: str) -> str:
    return " ".join(text.lower().split())


def check_guardrail(plan_instruction: str, case: GuardrailCase) -> GuardrailVerdict:
    """Pure phrase check: every required group satisfied, nothing forbidden."""
    haystack = _normalize_phrase(plan_instruction)
    reasons: list[str] = []
    for group in case.required_any:
        if not any(_normalize_phrase(p) in haystack for p in group):
            reasons.append(f"missing all of required phrases: {list(group)}")
    for phrase in case.forbidden:
        if _normalize_phrase(phrase) in haystack:
            reasons.append(f"forbidden phrase present: {phrase!r}")
    return GuardrailVerdict(passed=not reasons, reasons=tuple(reasons))


@dataclass(frozen=True)
class CaseStats:
    n: int
    errors: int

    @property
    def error_rate(self) -> float:
        return self.errors / self.n


@dataclass(frozen=True)
class GuardrailReport:
    per_case: dict[str, CaseStats]
    overall_error_rate: float

    def to_dict(self) -> dict:
        return {
            "per_case": {
                cid: {"n": s.n, "errors": s.errors, "error_rate": s.error_rate}
                for cid, s in self.per_case.items()
            },
            "overall_error_rate": self.overall_error_rate,
        }


def iter_guardrail_queries(
    cases: Sequence[GuardrailCase],
    n_per_case: int,
    jurisdiction_ids: Sequence[str],
    seed: int = 0,
) -> list[tuple[GuardrailCase, DriverQuery]]:
    """Deterministic scenario instantiation: cases sorted by case_id, target
    jurisdictions cycled from the (sorted) corpus, offset by the seed.

    Shared by the suite runner and the fixture recorder so both enumerate
    identical queries.
    """
    if n_per_case < 1:
        raise ValueError("n_per_case must be >= 1")
    ids = sorted(jurisdiction_ids)
    if not ids:
        raise ValueError("no jurisdictions available")
    pairs: list[tuple[GuardrailCase, DriverQuery]] = []
    for c, case in enumerate(sorted(cases, key=lambda x: x.case_id)):
        for i in range(n_per_case):
            target = ids[(seed + c * n_per_case + i) % len(ids)]
            query = DriverQuery(
                target_jurisdiction=target,
                nominal_plan=case.plan,
                origin_jurisdiction=case.origin,
                scene_description=case.scene,
                unexpected_situation=case.situation,
            )
            pairs.append((case, query))
    return pairs


def run_guardrail_suite(
    cases: Sequence[GuardrailCase],
    n_per_case: int,
    store: CorpusStore,
    backend: Backend,
    settings: CompletionSettings,
    seed: int = 0,
) -> GuardrailReport:
    """Adapt every instantiated scenario and score it against its case.

    Pipeline failures count as errors for their example rather than
    aborting the suite.
    """
    pairs = iter_guardrail_queries(cases, n_per_case, store.jurisdiction_ids(), seed)
    counts: dict[str, list[int]] = {}
    for case, query in pairs:
        n_err = counts.setdefault(case.case_id, [0, 0])
        n_err[0] += 1
        try:
            plan = adapt_plan(query, store, backend, settings)
            verdict = check_guardrail(plan.instruction, case)
        except Exception as exc:
            log.warning(
                "guardrail example failed (%s, target %s): %s",
                case.case_id,
                query.target_jurisdiction,
                exc,
            )
            n_err[1] += 1
            continue
        if not verdict.passed:
            log.warning(
                "guardrail violation (%s, target %s): %s",
                case.case_id,
                query.target_jurisdiction,
                "; ".join(verdict.reasons),
            )
            n_err[1] += 1
    per_case = {cid: CaseStats(n=v[0], errors=v[1]) for cid, v in counts.items()}
    total_n = sum(s.n for s in per_case.values())
    total_err = sum(s.errors for s in per_case.values())
    return GuardrailReport(
        per_case=per_case,
        overall_error_rate=total_err / total_n,
    )
