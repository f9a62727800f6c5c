"""Taxonomy export: term<TAB>hypernym_id rows, transitively closed.

The default source is a bundled mini lexical database shipped as package
data. ``source="wordnet"`` reads the real WordNet through NLTK when it is
installed and errors otherwise.
"""

from importlib import resources
from pathlib import Path


class LexicalDatabaseError(RuntimeError):
    pass


def _load_bundled() -> dict[str, list[str]]:
    text = resources.files("kbmap_sidecar.data").joinpath("mini_lexdb.tsv").read_text("utf-8")
    edges: dict[str, list[str]] = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        child, parent = line.split("\t")
        edges.setdefault(child, []).append(parent)
    return edges


def _closure(term: str, edges: dict[str, list[str]]) -> list[str]:
    """Ancestors in breadth-first order, nearest first, de-duplicated."""
    out, queue, seen = [], list(edges.get(term, ())), set()
    while queue:
        node = queue.pop(0)
        if node in seen:
            continue
        seen.add(node)
        out.append(node)
        queue.extend(edges.get(node, ()))
    return out


def _bundled_rows() -> list[tuple[str, str]]:
    edges = _load_bundled()
    terms = sorted(child for child in edges if ".n." not in child)
    rows = []
    for term in terms:
        for hypernym in _closure(term, edges):
            rows.append((term, hypernym))
    return rows


def _wordnet_rows(terms: list[str]) -> list[tuple[str, str]]:
    try:
        from nltk.corpus import wordnet
        wordnet.synsets("ocean")  # force the data load
    except Exception as exc:
        raise LexicalDatabaseError(
            f"WordNet is unavailable (install nltk and its wordnet data): {exc}") from exc
    rows = []
    for term in sorted(set(terms)):
        synsets = wordnet.synsets(term.replace(" ", "_"), pos="n")
        if not synsets:
            continue
        seen = []
        queue = list(synsets[0].hypernyms())
        while queue:
            node = queue.pop(0)
            if node.name() in seen:
                continue
            seen.append(node.name())
            queue.extend(node.hypernyms())
        rows.extend((term, name) for name in seen)
    return rows


def export_taxonomy(out_path, source: str = "bundled",
                    terms_file: str | None = None) -> int:
    if source == "bundled":
        rows = _bundled_rows()
    elif source == "wordnet":
        if not terms_file:
            raise LexicalDatabaseError("source=wordnet needs a --terms file")
        terms = [ln.strip() for ln in Path(terms_file).read_text("utf-8").splitlines()
                 if ln.strip()]
        rows = _wordnet_rows(terms)
    else:
        raise LexicalDatabaseError(f"unknown source {source!r}")
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for term, hypernym in rows:
            fh.write(f"{term}\t{hypernym}\n")
    return len(rows)
