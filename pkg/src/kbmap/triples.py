"""Triple and KB data model plus the TSV file formats.

File formats (UTF-8, LF, no header):
  open KB    subject<TAB>predicate<TAB>object[<TAB>score]
  closed KB  subject<TAB>relation<TAB>object
  schema     one relation name per line; leading "!" marks an inverse sense
"""

import logging
from dataclasses import dataclass
from pathlib import Path

from .normalize import normalize_phrase

log = logging.getLogger(__name__)


class KBFormatError(ValueError):
    """Malformed KB/schema file; carries the 1-based line number."""

    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


def _clean(value: str, what: str) -> str:
    value = value.strip()
    if not value:
        raise ValueError(f"{what} must be nonempty")
    return value


@dataclass(frozen=True)
class OpenTriple:
    subject: str
    predicate: str
    object: str
    score: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "subject", _clean(self.subject, "subject"))
        object.__setattr__(self, "predicate", _clean(self.predicate, "predicate"))
        object.__setattr__(self, "object", _clean(self.object, "object"))
        if self.score < 0:
            raise ValueError(f"score must be nonnegative, got {self.score}")

    @property
    def spo(self) -> tuple[str, str, str]:
        return (self.subject, self.predicate, self.object)


@dataclass(frozen=True)
class ClosedTriple:
    """Schema-constrained triple.

    Schema membership and the normalized subject != object rule are
    enforced by every constructor of record (loaders, the generation
    parser/filter, the baselines), not here: both need context this type
    does not carry.
    """

    subject: str
    relation: str
    object: str

    def __post_init__(self):
        object.__setattr__(self, "subject", _clean(self.subject, "subject"))
        object.__setattr__(self, "relation", _clean(self.relation, "relation"))
        object.__setattr__(self, "object", _clean(self.object, "object"))

    @property
    def sro(self) -> tuple[str, str, str]:
        return (self.subject, self.relation, self.object)


@dataclass(frozen=True)
class RelationSchema:
    relations: tuple[str, ...]
    inverse_marked: frozenset[str] = frozenset()

    def __post_init__(self):
        if len(set(self.relations)) != len(self.relations):
            raise ValueError("duplicate relation names in schema")
        if any(not r for r in self.relations):
            raise ValueError("empty relation name in schema")
        unknown = self.inverse_marked - set(self.relations)
        if unknown:
            raise ValueError(f"inverse markers for unknown relations: {sorted(unknown)}")

    def __contains__(self, relation: str) -> bool:
        return relation in set(self.relations)

    def __iter__(self):
        return iter(self.relations)


@dataclass(frozen=True)
class OpenKB:
    name: str
    triples: tuple[OpenTriple, ...]

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)


@dataclass(frozen=True)
class ClosedKB:
    name: str
    triples: tuple[ClosedTriple, ...]

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)


def triple_norm_key(t: ClosedTriple) -> tuple[tuple[str, ...], str, tuple[str, ...]]:
    """Dedup key for closed triples: normalized phrases around the verbatim
    relation."""
    return (normalize_phrase(t.subject).tokens, t.relation, normalize_phrase(t.object).tokens)


def load_schema(path) -> RelationSchema:
    relations: list[str] = []
    inverse: set[str] = set()
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("!"):
            line = line[1:].strip()
            if not line:
                raise KBFormatError(path, lineno, "bare '!' without a relation name")
            inverse.add(line)
        if line in relations:
            raise KBFormatError(path, lineno, f"duplicate relation {line!r}")
        relations.append(line)
    return RelationSchema(tuple(relations), frozenset(inverse))


def load_open_kb(path, name: str | None = None) -> OpenKB:
    """One OpenTriple per line, input order preserved; a missing fourth
    column means score 1.0."""
    triples: list[OpenTriple] = []
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        fields = raw.split("\t")
        if len(fields) not in (3, 4):
            raise KBFormatError(path, lineno, f"expected 3 or 4 fields, got {len(fields)}")
        score = 1.0
        if len(fields) == 4:
            try:
                score = float(fields[3])
            except ValueError:
                raise KBFormatError(path, lineno, f"bad score {fields[3]!r}") from None
        try:
            triples.append(OpenTriple(fields[0], fields[1], fields[2], score))
        except ValueError as exc:
            raise KBFormatError(path, lineno, str(exc)) from None
    return OpenKB(name or Path(path).stem, tuple(triples))


def save_open_kb(kb: OpenKB, path) -> None:
    """Canonical form: tab-joined stripped fields, score always rendered."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in kb:
            fh.write(f"{t.subject}\t{t.predicate}\t{t.object}\t{t.score}\n")


def load_closed_kb(path, schema: RelationSchema, name: str | None = None) -> ClosedKB:
    """Duplicates (after normalization) collapse to the first occurrence;
    out-of-schema relations and normalized-degenerate (subject == object)
    lines are skipped and counted in a single summary warning."""
    triples: list[ClosedTriple] = []
    seen: set = set()
    skipped = 0
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        fields = raw.split("\t")
        if len(fields) != 3:
            raise KBFormatError(path, lineno, f"expected 3 fields, got {len(fields)}")
        try:
            t = ClosedTriple(fields[0], fields[1], fields[2])
        except ValueError as exc:
            raise KBFormatError(path, lineno, str(exc)) from None
        if t.relation not in schema:
            skipped += 1
            continue
        key = triple_norm_key(t)
        if key[0] == key[2]:
            skipped += 1
            continue
        if key in seen:
            continue
        seen.add(key)
        triples.append(t)
    if skipped:
        log.warning("skipped %d triple(s) in %s (out-of-schema or degenerate)", skipped, path)
    return ClosedKB(name or Path(path).stem, tuple(triples))


def save_closed_kb(kb: ClosedKB, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in kb:
            fh.write(f"{t.subject}\t{t.relation}\t{t.object}\n")
