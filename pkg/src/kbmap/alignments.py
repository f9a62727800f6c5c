"""Alignment records (open triple paired with a closed triple) and their
JSONL serialization.

JSONL record shape:
  {"open": {"s","p","o","score"}, "closed": {"s","r","o"},
   "method": "rule"|"embed"|"embed-inv", "pattern": ... | "distance": ...}
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .triples import ClosedTriple, OpenTriple

RULE_PATTERNS = ("standard", "reverse", "pred_in_obj", "reverse_pred_in_obj")
METHODS = ("rule", "embed", "embed-inv")


@dataclass(frozen=True)
class Alignment:
    open: OpenTriple
    closed: ClosedTriple
    method: str
    pattern: str | None = None
    distance: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "rule":
            if self.pattern not in RULE_PATTERNS or self.distance is not None:
                raise ValueError("rule alignments carry a pattern and no distance")
        else:
            if self.distance is None or self.pattern is not None:
                raise ValueError("embedding alignments carry a distance and no pattern")
            if self.distance < 0:
                raise ValueError("distance must be nonnegative")


@dataclass(frozen=True)
class AlignmentSet:
    alignments: tuple[Alignment, ...]
    provenance: str = ""

    def __post_init__(self):
        pairs = {(a.open, a.closed) for a in self.alignments}
        if len(pairs) != len(self.alignments):
            raise ValueError("duplicate (open, closed) pair in alignment set")

    def __len__(self) -> int:
        return len(self.alignments)

    def __iter__(self):
        return iter(self.alignments)

    def closed_triples(self) -> list[ClosedTriple]:
        return [a.closed for a in self.alignments]


def dedupe_alignments(alignments) -> list[Alignment]:
    """Keep the first occurrence of each (open, closed) pair."""
    out, seen = [], set()
    for a in alignments:
        key = (a.open, a.closed)
        if key in seen:
            continue
        seen.add(key)
        out.append(a)
    return out


def _to_record(a: Alignment) -> dict:
    rec = {
        "open": {"s": a.open.subject, "p": a.open.predicate,
                 "o": a.open.object, "score": a.open.score},
        "closed": {"s": a.closed.subject, "r": a.closed.relation, "o": a.closed.object},
        "method": a.method,
    }
    if a.method == "rule":
        rec["pattern"] = a.pattern
    else:
        rec["distance"] = a.distance
    return rec


def _from_record(rec: dict) -> Alignment:
    return Alignment(
        open=OpenTriple(rec["open"]["s"], rec["open"]["p"], rec["open"]["o"],
                        rec["open"].get("score", 1.0)),
        closed=ClosedTriple(rec["closed"]["s"], rec["closed"]["r"], rec["closed"]["o"]),
        method=rec["method"],
        pattern=rec.get("pattern"),
        distance=rec.get("distance"),
    )


def save_alignments(aset: AlignmentSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in aset:
            fh.write(json.dumps(_to_record(a), ensure_ascii=False) + "\n")


def load_alignments(path) -> AlignmentSet:
    alignments = []
    for line in Path(path).read_text("utf-8").splitlines():
        if line.strip():
            alignments.append(_from_record(json.loads(line)))
    methods = {a.method for a in alignments}
    provenance = methods.pop() if len(methods) == 1 else "mixed"
    return AlignmentSet(tuple(alignments), provenance=provenance)
