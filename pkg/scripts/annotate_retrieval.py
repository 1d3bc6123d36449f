#!/usr/bin/env python3
"""Freeze the annotated retrieval queries into fixtures/retrieval/queries.json.

Each query pairs search keywords with a gold paragraph. The gold paragraph
is located by an exact anchor substring that must occur in exactly one
paragraph of its handbook, so the annotation never depends on the keyword
matcher it is used to test. The script fails loudly if an anchor is
ambiguous or if a gold paragraph would fall outside the excerpt cap.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from llada.corpus import CorpusStore, KeywordSet, find_matching_paragraphs

# (jurisdiction, keywords, unique anchor substring of the gold paragraph)
QUERIES = [
    ("nyc", ["red light", "right turn"], "unless a sign permitting the turn is posted"),
    ("nyc", ["honk"], "Honking is otherwise prohibited"),
    ("nyc", ["school bus"], "school bus that displays flashing red lights"),
    ("nyc", ["speed limit"], "citywide speed limit is 25 miles per hour"),
    ("nyc", ["fire hydrant"], "Do not park within 15 feet of a fire hydrant at any time"),
    ("nyc", ["bicycle lane"], "marked bicycle lane unless you must cross it"),
    ("nyc", ["seat belt"], "passengers under sixteen are buckled up"),
    ("germany", ["emergency vehicle"], "The corridor for emergency vehicles opens"),
    ("germany", ["left lane"], "leftmost lane is for overtaking and faster vehicles"),
    ("germany", ["maximum speed"], "recommended maximum speed of 130"),
    ("germany", ["priority road"], "yellow diamond sign marks a priority road"),
    ("germany", ["winter tires"], "Winter tires are mandatory"),
    ("germany", ["blood alcohol"], "general blood alcohol limit is 0.05"),
    ("germany", ["overtake"], "Passing on the right is prohibited"),
    ("singapore", ["keep left"], "Keep to the left of the road"),
    ("singapore", ["turning right"], "yield to oncoming vehicles and give way"),
    ("singapore", ["bus lane"], "reserved for buses during their operating hours"),
    ("singapore", ["road pricing"], "Electronic Road Pricing gantries"),
    ("singapore", ["zebra crossing"], "stop for any pedestrian on or waiting"),
    ("singapore", ["speed limit"], "default speed limit is 50 kilometers per hour on ordinary"),
]


def main():
    store = CorpusStore(ROOT / "corpus")
    records = []
    for jurisdiction, keywords, anchor in QUERIES:
        handbook = store.load(jurisdiction)
        hits = [
            p.index
            for p in handbook.paragraphs
            if anchor in " ".join(p.text.split())
        ]
        if len(hits) != 1:
            raise SystemExit(
                f"anchor {anchor!r} matches {len(hits)} paragraphs in {jurisdiction}"
            )
        gold = hits[0]
        excerpts = find_matching_paragraphs(handbook, KeywordSet(keywords))
        found = [e.paragraph_index for e in excerpts]
        if gold not in found:
            raise SystemExit(
                f"gold paragraph {gold} for {keywords} in {jurisdiction} "
                f"not retrieved (got {found})"
            )
        records.append(
            {
                "jurisdiction_id": jurisdiction,
                "keywords": keywords,
                "gold_paragraph_index": gold,
                "anchor": anchor,
            }
        )
    out = ROOT / "fixtures" / "retrieval" / "queries.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(records)} annotated queries to {out}")


if __name__ == "__main__":
    main()
