"""Aggregate generations into a deduplicated, scored, ranked closed KB.

Each distinct candidate triple collects one (open score, rank) contribution
per generation and is scored, by mode:

  combined     sum of open_score / (rank + 1)
  weight_only  sum of open_score
  rank_only    sum of 1 / (rank + 1)
"""

from dataclasses import dataclass
from pathlib import Path

from sklearn.base import BaseEstimator, TransformerMixin

from .translate import Generation
from .triples import ClosedTriple, KBFormatError, RelationSchema

SCORE_MODES = ("combined", "weight_only", "rank_only")


@dataclass(frozen=True)
class ScoredClosedTriple:
    triple: ClosedTriple
    final_score: float
    support: int


@dataclass(frozen=True)
class RankedKB:
    entries: tuple[ScoredClosedTriple, ...]
    score_mode: str = "combined"

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def triples(self) -> list[ClosedTriple]:
        return [e.triple for e in self.entries]


def final_score(contribs: list[tuple[float, int]], mode: str = "combined") -> float:
    if mode not in SCORE_MODES:
        raise ValueError(f"mode must be one of {SCORE_MODES}")
    if not contribs:
        raise ValueError("a triple with no contributing generation cannot be scored")
    # Canonical summation order keeps the result permutation-invariant.
    ordered = sorted(contribs)
    if mode == "combined":
        return sum(score / (rank + 1) for score, rank in ordered)
    if mode == "weight_only":
        return sum(score for score, _ in ordered)
    return sum(1.0 / (rank + 1) for _, rank in ordered)


def aggregate(generations: list[Generation], mode: str = "combined") -> RankedKB:
    """Group by the candidate triple verbatim (case-sensitive), score each
    group, and order by descending score with a content tie-break."""
    groups: dict[ClosedTriple, list[tuple[float, int]]] = {}
    for gen in generations:
        groups.setdefault(gen.candidate, []).append((gen.source.score, gen.rank))
    entries = [
        ScoredClosedTriple(triple, final_score(contribs, mode), len(contribs))
        for triple, contribs in groups.items()
    ]
    entries.sort(key=lambda e: (-e.final_score, e.triple.sro))
    return RankedKB(tuple(entries), score_mode=mode)


def save_ranked_kb(kb: RankedKB, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in kb:
            t = e.triple
            fh.write(f"{t.subject}\t{t.relation}\t{t.object}\t{e.final_score}\t{e.support}\n")


def load_ranked_kb(path, schema: RelationSchema | None = None,
                   score_mode: str = "combined") -> RankedKB:
    entries = []
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        fields = raw.split("\t")
        if len(fields) != 5:
            raise KBFormatError(path, lineno, f"expected 5 fields, got {len(fields)}")
        triple = ClosedTriple(fields[0], fields[1], fields[2])
        if schema is not None and triple.relation not in schema:
            raise KBFormatError(path, lineno, f"relation {triple.relation!r} not in schema")
        entries.append(ScoredClosedTriple(triple, float(fields[3]), int(fields[4])))
    return RankedKB(tuple(entries), score_mode=score_mode)


class CorroborationRanker(BaseEstimator, TransformerMixin):
    """Stateless transform: list of Generation -> RankedKB."""

    def __init__(self, mode: str = "combined"):
        self.mode = mode

    def fit(self, X=None, y=None):
        return self

    def transform(self, generations) -> RankedKB:
        return aggregate(list(generations), self.mode)
