"""Traffic-rule extraction: turn a driver query into handbook search
keywords via one completion, then retrieve the paragraphs that contain
them.

On an empty retrieval the extractor retries once with a reworded prompt;
if that also matches nothing it reports no_match so the planner can fall
back to a generic answer.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .corpus import (
    DEFAULT_MAX_EXCERPTS,
    Handbook,
    KeywordSet,
    RuleExcerpt,
    UnknownJurisdiction,
    find_matching_paragraphs,
)
from .llm import Backend, ChatPrompt, CompletionSettings

__all__ = [
    "DriverQuery",
    "KeywordSet",
    "TreResult",
    "NoKeywords",
    "build_keyword_prompt",
    "parse_keywords",
    "extract_rules",
    "KEYWORD_TEMPLATE",
    "KEYWORD_RETRY_TEMPLATE",
]

log = logging.getLogger("llada.tre")

KEYWORD_TEMPLATE = "keywords.v1.txt"
KEYWORD_RETRY_TEMPLATE = "keywords_retry.v1.txt"

KEYWORD_SYSTEM = (
    "You are a traffic-rule assistant who finds driver-handbook search keywords."
)

DEFAULT_ORIGIN = "california"
DEFAULT_SITUATION = "normal status"


class NoKeywords(Exception):
    """Raised when a keyword completion contains nothing parseable."""


@dataclass(frozen=True)
class DriverQuery:
    """The four natural-language inputs plus jurisdiction and language.

    A blank unexpected_situation is replaced by the "normal status"
    default; the scene description is optional and may stay empty.
    """

    target_jurisdiction: str
    nominal_plan: str
    origin_jurisdiction: str = DEFAULT_ORIGIN
    scene_description: str = ""
    unexpected_situation: str = DEFAULT_SITUATION
    output_language: str = "en"

    def __post_init__(self) -> None:
        if not self.target_jurisdiction.strip():
            raise ValueError("target_jurisdiction must be non-empty")
        if not self.nominal_plan.strip():
            raise ValueError("nominal_plan must be non-empty")
        if not self.unexpected_situation.strip():
            object.__setattr__(self, "unexpected_situation", DEFAULT_SITUATION)


@dataclass(frozen=True)
class TreResult:
    keywords: KeywordSet
    excerpts: tuple[RuleExcerpt, ...]
    no_match: bool

    def __post_init__(self) -> None:
        if self.no_match != (len(self.excerpts) == 0):
            raise ValueError("no_match must hold exactly when excerpts is empty")


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return (resources.files("llada") / "templates" / name).read_text(encoding="utf-8")


def _scene_block(query: DriverQuery) -> str:
    if not query.scene_description.strip():
        return ""
    return f'Current scene: "{query.scene_description}"\n'


def build_keyword_prompt(
    query: DriverQuery, handbook: Handbook, retry: bool = False
) -> ChatPrompt:
    """Fill the keyword template (or its retry variant) for a query.

    The scene line is omitted entirely when the query has no scene
    description.
    """
    if handbook.meta.jurisdiction_id != query.target_jurisdiction:
        raise UnknownJurisdiction(
            f"query targets {query.target_jurisdiction!r} but handbook is "
            f"{handbook.meta.jurisdiction_id!r}"
        )
    template = load_template(KEYWORD_RETRY_TEMPLATE if retry else KEYWORD_TEMPLATE)
    user = template.format(
        origin=query.origin_jurisdiction,
        target=handbook.meta.display_name,
        plan=query.nominal_plan,
        situation=query.unexpected_situation,
        scene=_scene_block(query),
    )
    return ChatPrompt.of(system=KEYWORD_SYSTEM, user=user)


_SPLIT_RE = re.compile(r"[,;\n]+")
_NUMBERING_RE = re.compile(r"^\s*\d+\s*[.)]\s*")
_QUOTES = "\"'“”‘’`"


def parse_keywords(raw: str) -> KeywordSet:
    """Parse a keyword completion into at most two clean keywords.

    Splits on commas, semicolons, and newlines; strips numbering, quotes,
    and edge punctuation; lowercases. Items longer than two tokens are
    truncated to their first two tokens (logged as a warning). Raises
    NoKeywords when nothing parseable remains.
    """
    items: list[str] = []
    for piece in _SPLIT_RE.split(raw):
        piece = _NUMBERING_RE.sub("", piece.strip())
        piece = piece.strip(_QUOTES + " \t.!?-*•").lower()
        tokens = piece.split()
        if not tokens:
            continue
        if len(tokens) > 2:
            truncated = " ".join(tokens[:2])
            log.warning(
                "keyword %r has %d tokens, truncating to %r",
                piece,
                len(tokens),
                truncated,
            )
            tokens = tokens[:2]
        item = " ".join(tokens)
        if item not in items:
            items.append(item)
        if len(items) == 2:
            break
    if not items:
        raise NoKeywords(f"no keywords parseable from completion {raw!r}")
    return KeywordSet(items)


def extract_rules(
    query: DriverQuery,
    handbook: Handbook,
    backend: Backend,
    settings: CompletionSettings,
    max_excerpts: int = DEFAULT_MAX_EXCERPTS,
) -> TreResult:
    """Run the extraction stage: prompt, parse, retrieve, retry once.

    Performs at most two completions. Returns no_match=True (with the last
    parsed keywords) when both retrieval attempts come back empty.
    """
    prompt = build_keyword_prompt(query, handbook)
    keywords = parse_keywords(backend.complete(prompt, settings))
    excerpts = find_matching_paragraphs(handbook, keywords, max_excerpts)
    if not excerpts:
        retry_prompt = build_keyword_prompt(query, handbook, retry=True)
        keywords = parse_keywords(backend.complete(retry_prompt, settings))
        excerpts = find_matching_paragraphs(handbook, keywords, max_excerpts)
    return TreResult(
        keywords=keywords,
        excerpts=tuple(excerpts),
        no_match=not excerpts,
    )
