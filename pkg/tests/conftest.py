from __future__ import annotations

from pathlib import Path

import pytest

from llada.corpus import CorpusStore
from llada.llm import CompletionSettings, ReplayBackend

ROOT = Path(__file__).resolve().parent.parent
CORPUS_DIR = ROOT / "corpus"
FIXTURES = ROOT / "fixtures"
GUARDRAIL_CASES = ROOT / "guardrails" / "cases.json"
GOLDEN_CASSETTE = FIXTURES / "cassettes" / "golden.jsonl"
POISONED_CASSETTE = FIXTURES / "cassettes" / "poisoned.jsonl"
REPLAN_CASSETTE = FIXTURES / "cassettes" / "replan.jsonl"
EVAL_MANIFEST = FIXTURES / "eval" / "manifest.json"


@pytest.fixture(scope="session")
def store() -> CorpusStore:
    return CorpusStore(CORPUS_DIR)


@pytest.fixture(scope="session")
def golden_backend() -> ReplayBackend:
    return ReplayBackend.from_path(GOLDEN_CASSETTE)


@pytest.fixture(scope="session")
def settings() -> CompletionSettings:
    return CompletionSettings()
