"""Lookup index over a closed KB, keyed on normalized phrase text."""

from dataclasses import dataclass

from .normalize import normalize_phrase
from .triples import ClosedKB, ClosedTriple


@dataclass(frozen=True)
class ClosedIndex:
    """Read-only after build. Keys are normalized phrases rendered as
    space-joined token strings; an empty phrase renders as ""."""

    by_so: dict[tuple[str, str], tuple[ClosedTriple, ...]]
    by_s: dict[str, tuple[ClosedTriple, ...]]
    size: int


def so_key(t: ClosedTriple) -> tuple[str, str]:
    return (normalize_phrase(t.subject).text, normalize_phrase(t.object).text)


def index_closed_kb(kb: ClosedKB) -> ClosedIndex:
    by_so: dict[tuple[str, str], list[ClosedTriple]] = {}
    by_s: dict[str, list[ClosedTriple]] = {}
    for t in kb:
        key = so_key(t)
        by_so.setdefault(key, []).append(t)
        by_s.setdefault(key[0], []).append(t)
    return ClosedIndex(
        by_so={k: tuple(v) for k, v in by_so.items()},
        by_s={k: tuple(v) for k, v in by_s.items()},
        size=len(kb),
    )
