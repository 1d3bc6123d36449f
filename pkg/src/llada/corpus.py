"""Driver-handbook corpus: ingestion, segmentation, and keyword retrieval.

A handbook is plain UTF-8 text. Lines starting with ``#`` through ``####``
are section headings (depth 1-4); blank lines separate paragraphs. After
ingestion a handbook is an immutable sequence of indexed paragraphs, each
carrying the heading path that encloses it, and can be searched for
keywords with a case-insensitive token-prefix rule.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence


class EmptyHandbook(Exception):
    """Raised when raw handbook text contains no content paragraphs."""


class DuplicateJurisdiction(Exception):
    """Raised when ingesting a jurisdiction_id that is already stored."""


class UnknownJurisdiction(Exception):
    """Raised when a jurisdiction_id does not resolve to a stored handbook."""


_JURISDICTION_RE = re.compile(r"[a-z0-9_-]+\Z")
_HEADING_RE = re.compile(r"(#{1,4})\s+(\S.*)\Z")
_SPACE_RUN_RE = re.compile(r"[ \t]+")

# Bounds the planner prompt; extraneous handbook text degrades the answer.
DEFAULT_MAX_EXCERPTS = 12


@dataclass(frozen=True)
class HandbookMeta:
    """Identity of one jurisdiction's handbook."""

    jurisdiction_id: str
    display_name: str
    language: str = "en"
    source_uri: str | None = None

    def __post_init__(self) -> None:
        if not _JURISDICTION_RE.match(self.jurisdiction_id):
            raise ValueError(
                f"jurisdiction_id must match [a-z0-9_-]+: {self.jurisdiction_id!r}"
            )
        if not self.display_name.strip():
            raise ValueError("display_name must be non-empty")

    def to_dict(self) -> dict:
        d = {
            "jurisdiction_id": self.jurisdiction_id,
            "display_name": self.display_name,
            "language": self.language,
        }
        if self.source_uri is not None:
            d["source_uri"] = self.source_uri
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HandbookMeta":
        return cls(
            jurisdiction_id=d["jurisdiction_id"],
            display_name=d["display_name"],
            language=d.get("language", "en"),
            source_uri=d.get("source_uri"),
        )


@dataclass(frozen=True)
class Paragraph:
    index: int
    heading_path: tuple[str, ...]
    text: str


@dataclass(frozen=True)
class Handbook:
    meta: HandbookMeta
    paragraphs: tuple[Paragraph, ...]

    def __post_init__(self) -> None:
        if not self.paragraphs:
            raise ValueError("handbook must contain at least one paragraph")
        for i, p in enumerate(self.paragraphs):
            if p.index != i:
                raise ValueError("paragraph indices must be contiguous from 0")


@dataclass(frozen=True)
class RuleExcerpt:
    """A paragraph retrieved for a keyword query, with highlight spans.

    match_spans are byte offsets into the UTF-8 encoding of ``text``,
    non-overlapping and sorted; slicing a span out of the text reproduces
    one of ``matched_keywords`` under the token-prefix rule.
    """

    jurisdiction_id: str
    paragraph_index: int
    matched_keywords: tuple[str, ...]
    match_spans: tuple[tuple[int, int], ...]
    text: str


@dataclass(frozen=True)
class KeywordSet:
    """One or two search keywords, each of one or two tokens.

    Keywords are normalized on construction: lowercased, token punctuation
    trimmed, inner whitespace collapsed. Construction fails on empty input,
    more than two keywords, keywords longer than two tokens, or duplicates.
    """

    keywords: tuple[str, ...]

    def __init__(self, keywords: Iterable[str]):
        normalized = []
        for kw in keywords:
            tokens = [_trim_token(t) for t in kw.lower().split()]
            tokens = [t for t in tokens if t]
            if not tokens:
                raise ValueError(f"keyword has no tokens after trimming: {kw!r}")
            if len(tokens) > 2:
                raise ValueError(f"keyword has more than two tokens: {kw!r}")
            normalized.append(" ".join(tokens))
        if not normalized:
            raise ValueError("keyword set must contain at least one keyword")
        if len(normalized) > 2:
            raise ValueError("keyword set may contain at most two keywords")
        if len(set(normalized)) != len(normalized):
            raise ValueError(f"keywords must be pairwise distinct: {normalized}")
        object.__setattr__(self, "keywords", tuple(normalized))


def _trim_token(token: str) -> str:
    """Strip leading/trailing non-alphanumeric characters from a token."""
    start = 0
    end = len(token)
    while start < end and not token[start].isalnum():
        start += 1
    while end > start and not token[end - 1].isalnum():
        end -= 1
    return token[start:end]


def _normalize_lines(raw: str) -> list[str]:
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    return [_SPACE_RUN_RE.sub(" ", line).strip() for line in text.split("\n")]


def ingest_handbook(raw: str, meta: HandbookMeta) -> Handbook:
    """Segment raw handbook text into indexed paragraphs.

    Paragraphs are maximal runs of non-blank, non-heading lines; heading
    lines set the heading path of everything that follows them and are not
    paragraphs themselves. All whitespace is normalized (single newlines,
    single spaces within lines).
    """
    lines = _normalize_lines(raw)
    paragraphs: list[Paragraph] = []
    heading_path: list[str] = []
    run: list[str] = []

    def flush() -> None:
        if run:
            paragraphs.append(
                Paragraph(
                    index=len(paragraphs),
                    heading_path=tuple(heading_path),
                    text="\n".join(run),
                )
            )
            run.clear()

    for line in lines:
        if not line:
            flush()
            continue
        m = _HEADING_RE.match(line)
        if m:
            flush()
            depth = len(m.group(1))
            del heading_path[depth - 1 :]
            heading_path.append(m.group(2))
            continue
        run.append(line)
    flush()

    if not paragraphs:
        raise EmptyHandbook(f"no content paragraphs for {meta.jurisdiction_id!r}")
    return Handbook(meta=meta, paragraphs=tuple(paragraphs))


def serialize_handbook(handbook: Handbook) -> str:
    """Render a handbook back to the corpus file format.

    Inverse of ingest_handbook for any handbook produced by it: re-ingesting
    the output yields an equal Handbook.
    """
    out: list[str] = []
    current: tuple[str, ...] = ()
    for para in handbook.paragraphs:
        path = para.heading_path
        common = 0
        while common < len(current) and common < len(path) and current[common] == path[common]:
            common += 1
        if len(path) < len(current) and common == len(path):
            if not path:
                raise ValueError(
                    "cannot serialize: heading context cannot be cleared in the file format"
                )
            # the new path is a strict prefix of the current one; re-emit its
            # deepest heading so ingestion pops the extra levels
            start = len(path) - 1
        else:
            start = common
        for level in range(start, len(path)):
            out.append("#" * (level + 1) + " " + path[level])
            out.append("")
        current = path
        out.append(para.text)
        out.append("")
    return "\n".join(out)


def _token_cores(text: str) -> list[tuple[str, int, int]]:
    """(lowercased core, char start, char end) for each token of text."""
    cores = []
    for m in re.finditer(r"\S+", text):
        token = m.group(0)
        core = _trim_token(token)
        if not core:
            continue
        lead = 0
        while lead < len(token) and not token[lead].isalnum():
            lead += 1
        cores.append((core.lower(), m.start() + lead, m.start() + lead + len(core)))
    return cores


def _byte_offsets(text: str) -> list[int]:
    offsets = [0]
    for ch in text:
        offsets.append(offsets[-1] + len(ch.encode("utf-8")))
    return offsets


def _keyword_occurrences(
    cores: Sequence[tuple[str, int, int]], keyword: str
) -> list[tuple[int, int]]:
    """Char spans where the keyword matches consecutive token cores by prefix."""
    kts = keyword.split()
    spans = []
    for i in range(len(cores) - len(kts) + 1):
        if all(cores[i + j][0].startswith(kts[j]) for j in range(len(kts))):
            spans.append((cores[i][1], cores[i + len(kts) - 1][2]))
    return spans


def find_matching_paragraphs(
    handbook: Handbook,
    keywords: KeywordSet,
    max_excerpts: int = DEFAULT_MAX_EXCERPTS,
) -> list[RuleExcerpt]:
    """Paragraphs containing at least one keyword, in document order.

    A k-token keyword matches k consecutive paragraph tokens when each
    keyword token is a prefix of the corresponding token (case-insensitive,
    punctuation at token edges ignored), so "honk" matches "honking".
    Keywords combine with OR semantics. At most max_excerpts paragraphs
    are returned.
    """
    excerpts: list[RuleExcerpt] = []
    for para in handbook.paragraphs:
        cores = _token_cores(para.text)
        occurrences: list[tuple[int, int, str]] = []
        for kw in keywords.keywords:
            for start, end in _keyword_occurrences(cores, kw):
                occurrences.append((start, end, kw))
        if not occurrences:
            continue
        occurrences.sort(key=lambda o: (o[0], o[1]))
        spans: list[tuple[int, int]] = []
        matched: list[str] = []
        last_end = -1
        for start, end, kw in occurrences:
            if kw not in matched:
                matched.append(kw)
            if start >= last_end:
                spans.append((start, end))
                last_end = end
        byte_of = _byte_offsets(para.text)
        excerpts.append(
            RuleExcerpt(
                jurisdiction_id=handbook.meta.jurisdiction_id,
                paragraph_index=para.index,
                matched_keywords=tuple(matched),
                match_spans=tuple((byte_of[s], byte_of[e]) for s, e in spans),
                text=para.text,
            )
        )
        if len(excerpts) >= max_excerpts:
            break
    return excerpts


class CorpusStore:
    """File-backed handbook store: one text file per jurisdiction plus an
    index.json manifest of metadata records.

    Handbooks are immutable once ingested; loads are cached and safe to
    share across readers. Ingestion is serialized by a store-level lock.
    """

    INDEX_NAME = "index.json"

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        self._cache: dict[str, Handbook] = {}

    def _index_path(self) -> Path:
        return self.root / self.INDEX_NAME

    def _read_index(self) -> list[HandbookMeta]:
        path = self._index_path()
        if not path.exists():
            return []
        records = json.loads(path.read_text(encoding="utf-8"))
        return [HandbookMeta.from_dict(r) for r in records]

    def _write_index(self, metas: list[HandbookMeta]) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        payload = json.dumps([m.to_dict() for m in metas], indent=2)
        self._index_path().write_text(payload + "\n", encoding="utf-8")

    def list_meta(self) -> list[HandbookMeta]:
        return self._read_index()

    def jurisdiction_ids(self) -> list[str]:
        return sorted(m.jurisdiction_id for m in self._read_index())

    def has(self, jurisdiction_id: str) -> bool:
        return any(m.jurisdiction_id == jurisdiction_id for m in self._read_index())

    def load(self, jurisdiction_id: str) -> Handbook:
        if jurisdiction_id in self._cache:
            return self._cache[jurisdiction_id]
        meta = next(
            (m for m in self._read_index() if m.jurisdiction_id == jurisdiction_id),
            None,
        )
        if meta is None:
            raise UnknownJurisdiction(jurisdiction_id)
        raw = (self.root / f"{jurisdiction_id}.txt").read_text(encoding="utf-8")
        handbook = ingest_handbook(raw, meta)
        self._cache[jurisdiction_id] = handbook
        return handbook

    def ingest(self, raw: str, meta: HandbookMeta) -> Handbook:
        with self._lock:
            if self.has(meta.jurisdiction_id):
                raise DuplicateJurisdiction(meta.jurisdiction_id)
            handbook = ingest_handbook(raw, meta)
            self.root.mkdir(parents=True, exist_ok=True)
            text = serialize_handbook(handbook)
            (self.root / f"{meta.jurisdiction_id}.txt").write_text(
                text, encoding="utf-8"
            )
            metas = self._read_index()
            metas.append(meta)
            self._write_index(metas)
            self._cache[meta.jurisdiction_id] = handbook
            return handbook
