"""Manual predicate-table baseline: a human-authored predicate -> relation
table (with optional inversion) and a predicate-in-object fallback.

Table file: predicate<TAB>relation[<TAB>inv]. Keys are matched on the
lemmatized predicate with stopwords kept, so "lives in" and "live in"
share an entry while "live in" and "live on" stay distinct and "have"
remains a usable key.
"""

from dataclasses import dataclass
from pathlib import Path

from sklearn.base import BaseEstimator, TransformerMixin

from ..normalize import lemma_tokens, normalize_phrase
from ..translate import Generation
from ..triples import ClosedTriple, KBFormatError, OpenKB, OpenTriple, RelationSchema
from ..validation import as_open_kb

FALLBACK_RELATION = "CapableOf"


def predicate_key(text: str) -> str:
    return " ".join(lemma_tokens(text))


@dataclass(frozen=True)
class ManualTable:
    """Keys are lemmatized predicate phrases (stopwords kept); raw keys are
    rewritten (and merged) at construction, conflicting duplicates
    rejected."""

    entries: dict[str, tuple[str, bool]]
    fallback_relation: str = FALLBACK_RELATION

    def __post_init__(self):
        keyed: dict[str, tuple[str, bool]] = {}
        for raw, value in self.entries.items():
            key = predicate_key(raw)
            if not key:
                raise ValueError(f"predicate {raw!r} has no word tokens")
            if key in keyed and keyed[key] != value:
                raise ValueError(f"conflicting entries for predicate key {key!r}")
            keyed[key] = value
        object.__setattr__(self, "entries", keyed)


def load_manual_table(path, schema: RelationSchema,
                      fallback_relation: str = FALLBACK_RELATION) -> ManualTable:
    if fallback_relation not in schema:
        raise ValueError(f"fallback relation {fallback_relation!r} not in schema")
    entries: dict[str, tuple[str, bool]] = {}
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        fields = raw.split("\t")
        if len(fields) not in (2, 3):
            raise KBFormatError(path, lineno, f"expected 2 or 3 fields, got {len(fields)}")
        if len(fields) == 3 and fields[2].strip() not in ("inv", ""):
            raise KBFormatError(path, lineno, f"third field must be 'inv', got {fields[2]!r}")
        relation = fields[1].strip()
        if relation not in schema:
            raise KBFormatError(path, lineno, f"relation {relation!r} not in schema")
        key = predicate_key(fields[0])
        if not key:
            raise KBFormatError(path, lineno, f"predicate {fields[0]!r} has no word tokens")
        value = (relation, len(fields) == 3 and fields[2].strip() == "inv")
        if key in entries and entries[key] != value:
            raise KBFormatError(path, lineno, f"conflicting entries for predicate key {key!r}")
        entries[key] = value
    try:
        return ManualTable(entries, fallback_relation)
    except ValueError as exc:
        raise KBFormatError(path, 0, str(exc)) from None


def map_manual(t: OpenTriple, table: ManualTable,
               use_fallback: bool = True) -> list[ClosedTriple]:
    """Zero or one closed triple. A table hit that produces a degenerate
    triple (normalized subject == object) yields nothing and is not
    rescued by the fallback."""
    hit = table.entries.get(predicate_key(t.predicate))
    if hit is not None:
        relation, inverted = hit
        s, o = (t.object, t.subject) if inverted else (t.subject, t.object)
    elif use_fallback:
        relation, s, o = table.fallback_relation, t.subject, f"{t.predicate} {t.object}"
    else:
        return []
    if normalize_phrase(s).tokens == normalize_phrase(o).tokens:
        return []
    return [ClosedTriple(s, relation, o)]


def map_manual_kb(open_kb: OpenKB, table: ManualTable,
                  use_fallback: bool = True) -> tuple[list[Generation], float]:
    """Map a whole KB; returns (generations, table coverage).

    Coverage counts open triples whose predicate hits a table entry,
    whether or not a triple was emitted. Outputs carry rank 0 and the open
    score, so ranked evaluation goes through the scorer's weight_only mode.
    """
    open_kb = as_open_kb(open_kb)
    out: list[Generation] = []
    covered = 0
    for t in open_kb:
        if predicate_key(t.predicate) in table.entries:
            covered += 1
        for triple in map_manual(t, table, use_fallback):
            out.append(Generation(source=t, candidate=triple, rank=0, gen_score=t.score))
    coverage = covered / len(open_kb) if len(open_kb) else 0.0
    return out, coverage


class ManualMapper(BaseEstimator, TransformerMixin):
    """Stateless transform: open KB -> list of Generation. The coverage of
    the last transform is kept in ``coverage_``."""

    def __init__(self, table=None, use_fallback: bool = True):
        self.table = table
        self.use_fallback = use_fallback

    def fit(self, X=None, y=None):
        return self

    def transform(self, open_kb) -> list[Generation]:
        if self.table is None:
            raise ValueError("ManualMapper requires a table")
        out, coverage = map_manual_kb(as_open_kb(open_kb), self.table, self.use_fallback)
        self.coverage_ = coverage
        return out
