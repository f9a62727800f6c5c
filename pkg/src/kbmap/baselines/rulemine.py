"""Rule-mining baseline: reify rule-method alignments into a meta-KB,
mine Horn rules under standard confidence, and apply them to map open
triples.

Meta-KB construction, per mapping M from (s, p, o) to (s', p', o'):

  (s'+M, p', o'+M)                the head fact; M blocks constant reuse
  (M, INSUBJ, x+M)                for x in {s', o'} matching s
  (M, INOBJ,  x+M)                for x in {s', o'} matching o
  (x+M, ISA, h)                   taxonomy hypernyms passing the frequency
                                  filter (>= min occurrences, in < half of
                                  the mappings)
  (M, CONTAINS, t)                t among the most frequent open-predicate
                                  tokens and present in p

"x matches y" means the normalized tokens of x form a nonempty contiguous
subsequence of the normalized tokens of y.

Rules are canonicalized with the head fixed as ``?a r ?b``; bodies hold at
most one INSUBJ, one INOBJ, one ISA, and one CONTAINS atom (a relation
never repeats), and both head variables must be bound in the body. Support
and confidence count mappings: a mapping satisfies a body if any binding
of ?a/?b to its two reified terms satisfies every atom, and is a positive
if the (closed subject, closed object) binding satisfies the body and the
head relation matches.
"""

import json
from dataclasses import dataclass
from itertools import product
from pathlib import Path

from sklearn.base import BaseEstimator

from ..alignments import AlignmentSet
from ..normalize import lemma_tokens, normalize_phrase
from ..translate import Generation
from ..triples import ClosedTriple, KBFormatError, OpenKB, OpenTriple
from ..validation import as_open_kb

META_RELATIONS = ("INSUBJ", "INOBJ", "ISA", "CONTAINS")
SLOTS = ("subject", "object")


@dataclass(frozen=True)
class Atom:
    relation: str
    arg1: str
    arg2: str

    def render(self) -> str:
        return f"{self.arg1} {self.relation} {self.arg2}"


@dataclass(frozen=True)
class Rule:
    body: tuple[Atom, ...]
    head: Atom
    confidence: float
    support: int
    body_support: int

    def __post_init__(self):
        relations = [a.relation for a in self.body]
        if len(set(relations)) != len(relations):
            raise ValueError("a body relation repeats")
        object.__setattr__(self, "body", tuple(sorted(
            self.body, key=lambda a: (a.relation, a.arg1, a.arg2))))

    def render(self) -> str:
        return " ∧ ".join(a.render() for a in self.body) + f" ⇒ {self.head.render()}"


@dataclass(frozen=True)
class MappingFacts:
    """One reified mapping: which closed slot matched the open subject or
    object, the slots' kept hypernyms, and the predicate tokens. ``closed``
    is None for the unlabeled pseudo-mappings built when applying rules."""

    mid: str
    open: OpenTriple
    closed: ClosedTriple | None
    insubj: frozenset[str]
    inobj: frozenset[str]
    isa: dict[str, tuple[str, ...]]
    tokens: frozenset[str]

    def term(self, slot: str) -> str:
        return self.closed.subject if slot == "subject" else self.closed.object


@dataclass(frozen=True)
class MetaKB:
    facts: tuple[tuple[str, str, str], ...]
    mapping_ids: tuple[str, ...]
    mappings: tuple[MappingFacts, ...]
    kept_hypernyms: frozenset[str]
    top_tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.mappings)


@dataclass(frozen=True)
class TsvTaxonomy:
    """term -> hypernym identifiers; keys are normalized at construction
    and lookups normalize the query, so "the oceans" finds "ocean"."""

    hypernym_map: dict[str, tuple[str, ...]]

    def __post_init__(self):
        normalized: dict[str, list[str]] = {}
        for raw, hyps in self.hypernym_map.items():
            key = normalize_phrase(raw).text
            if not key:
                continue
            bucket = normalized.setdefault(key, [])
            for h in hyps:
                if h not in bucket:
                    bucket.append(h)
        object.__setattr__(self, "hypernym_map",
                           {k: tuple(v) for k, v in normalized.items()})

    def hypernyms(self, term: str) -> tuple[str, ...]:
        return self.hypernym_map.get(normalize_phrase(term).text, ())


def load_taxonomy(path) -> TsvTaxonomy:
    table: dict[str, list[str]] = {}
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        fields = raw.split("\t")
        if len(fields) != 2:
            raise KBFormatError(path, lineno, f"expected 2 fields, got {len(fields)}")
        hyp = fields[1].strip()
        if not normalize_phrase(fields[0]).text or not hyp:
            raise KBFormatError(path, lineno, "empty term or hypernym")
        table.setdefault(fields[0], []).append(hyp)
    return TsvTaxonomy({k: tuple(v) for k, v in table.items()})


def _contains_tokens(needle: tuple[str, ...], hay: tuple[str, ...]) -> bool:
    n = len(needle)
    if n == 0 or n > len(hay):
        return False
    return any(hay[i:i + n] == needle for i in range(len(hay) - n + 1))


def top_predicate_tokens(open_kb: OpenKB, n: int = 100) -> tuple[str, ...]:
    """The n most frequent lemmatized predicate tokens (stopwords kept),
    ties broken lexicographically."""
    counts: dict[str, int] = {}
    for t in open_kb:
        for tok in lemma_tokens(t.predicate):
            counts[tok] = counts.get(tok, 0) + 1
    ranked = sorted(counts, key=lambda tok: (-counts[tok], tok))
    return tuple(ranked[:n])


def build_meta_kb(alignments: AlignmentSet, taxonomy, open_kb: OpenKB,
                  isa_min_count: int = 10, isa_max_fraction: float = 0.5,
                  top_n_tokens: int = 100) -> MetaKB:
    if any(a.method != "rule" for a in alignments):
        raise ValueError("the meta-KB is built from rule-method alignments only")
    if any(a.closed.relation in META_RELATIONS for a in alignments):
        raise ValueError("schema relations collide with the meta relations")
    top_tokens = top_predicate_tokens(as_open_kb(open_kb), top_n_tokens)
    token_set = set(top_tokens)

    raw = []
    for i, a in enumerate(alignments, start=1):
        mid = f"M{i}"
        open_s = normalize_phrase(a.open.subject).tokens
        open_o = normalize_phrase(a.open.object).tokens
        insubj, inobj = set(), set()
        isa = {}
        for slot in SLOTS:
            term = a.closed.subject if slot == "subject" else a.closed.object
            toks = normalize_phrase(term).tokens
            if _contains_tokens(toks, open_s):
                insubj.add(slot)
            if _contains_tokens(toks, open_o):
                inobj.add(slot)
            isa[slot] = tuple(taxonomy.hypernyms(term))
        tokens = token_set.intersection(lemma_tokens(a.open.predicate))
        raw.append((mid, a, frozenset(insubj), frozenset(inobj), isa, frozenset(tokens)))

    # Hypernym frequency filter: total occurrences and mapping spread.
    occur: dict[str, int] = {}
    spread: dict[str, set[str]] = {}
    for mid, _, _, _, isa, _ in raw:
        for slot in SLOTS:
            for h in isa[slot]:
                occur[h] = occur.get(h, 0) + 1
                spread.setdefault(h, set()).add(mid)
    n_mappings = len(raw)
    kept = frozenset(
        h for h, count in occur.items()
        if count >= isa_min_count and len(spread[h]) / n_mappings < isa_max_fraction
    ) if n_mappings else frozenset()

    mappings, facts, mids = [], [], []
    for mid, a, insubj, inobj, isa, tokens in raw:
        isa_kept = {slot: tuple(h for h in isa[slot] if h in kept) for slot in SLOTS}
        m = MappingFacts(mid, a.open, a.closed, insubj, inobj, isa_kept, tokens)
        mappings.append(m)
        mids.append(mid)
        s_term, o_term = f"{a.closed.subject}+{mid}", f"{a.closed.object}+{mid}"
        facts.append((s_term, a.closed.relation, o_term))
        for slot in sorted(insubj):
            facts.append((mid, "INSUBJ", f"{m.term(slot)}+{mid}"))
        for slot in sorted(inobj):
            facts.append((mid, "INOBJ", f"{m.term(slot)}+{mid}"))
        for slot in SLOTS:
            for h in isa_kept[slot]:
                facts.append((f"{m.term(slot)}+{mid}", "ISA", h))
        for tok in sorted(tokens):
            facts.append((mid, "CONTAINS", tok))
    return MetaKB(tuple(facts), tuple(mids), tuple(mappings), kept, top_tokens)


# -- rule evaluation --

_BINDINGS = tuple(product(SLOTS, SLOTS))  # (?a slot, ?b slot)


def _atom_holds(atom: Atom, m: MappingFacts, a_slot: str, b_slot: str) -> bool:
    slot_of = {"?a": a_slot, "?b": b_slot}
    if atom.relation == "INSUBJ":
        return slot_of[atom.arg2] in m.insubj
    if atom.relation == "INOBJ":
        return slot_of[atom.arg2] in m.inobj
    if atom.relation == "ISA":
        return atom.arg2 in m.isa[slot_of[atom.arg1]]
    if atom.relation == "CONTAINS":
        return atom.arg2 in m.tokens
    raise ValueError(f"unknown body relation {atom.relation!r}")


def _body_holds(body, m: MappingFacts, a_slot: str, b_slot: str) -> bool:
    return all(_atom_holds(atom, m, a_slot, b_slot) for atom in body)


def rule_counts(body, head_relation: str, meta: MetaKB) -> tuple[int, int]:
    """(mappings satisfying the body, mappings also satisfying the head)."""
    body_n = head_n = 0
    for m in meta.mappings:
        if any(_body_holds(body, m, a, b) for a, b in _BINDINGS):
            body_n += 1
            if m.closed.relation == head_relation and _body_holds(body, m, "subject", "object"):
                head_n += 1
    return body_n, head_n


def _closed(body) -> bool:
    bound = set()
    for atom in body:
        if atom.relation in ("INSUBJ", "INOBJ"):
            bound.add(atom.arg2)
        elif atom.relation == "ISA":
            bound.add(atom.arg1)
    return {"?a", "?b"} <= bound


def _candidate_bodies(m: MappingFacts):
    """Shape-conforming bodies satisfied by m at the (subject, object)
    binding — the only binding that can make a positive."""
    insubj_opts = [None] + [Atom("INSUBJ", "?i", var)
                            for var, slot in (("?a", "subject"), ("?b", "object"))
                            if slot in m.insubj]
    inobj_opts = [None] + [Atom("INOBJ", "?i", var)
                           for var, slot in (("?a", "subject"), ("?b", "object"))
                           if slot in m.inobj]
    isa_opts = [None] + [Atom("ISA", "?a", h) for h in m.isa["subject"]] \
                      + [Atom("ISA", "?b", h) for h in m.isa["object"]]
    contains_opts = [None] + [Atom("CONTAINS", "?i", t) for t in sorted(m.tokens)]
    for combo in product(insubj_opts, inobj_opts, isa_opts, contains_opts):
        body = tuple(a for a in combo if a is not None)
        if body and (combo[0] or combo[1]) and _closed(body):
            yield tuple(sorted(body, key=lambda a: (a.relation, a.arg1, a.arg2)))


def mine_rules(meta: MetaKB, min_conf: float = 0.5, min_support: int = 20) -> list[Rule]:
    """Enumerate candidate rules from the positive bindings they would
    need, then count exactly. Kept rules have confidence strictly above
    min_conf and at least min_support positive mappings."""
    candidates: set[tuple[tuple[Atom, ...], str]] = set()
    for m in meta.mappings:
        for body in _candidate_bodies(m):
            candidates.add((body, m.closed.relation))

    rules = []
    for body, head_relation in candidates:
        body_n, head_n = rule_counts(body, head_relation, meta)
        if head_n >= min_support and body_n and head_n / body_n > min_conf:
            rules.append(Rule(body, Atom(head_relation, "?a", "?b"),
                              head_n / body_n, head_n, body_n))
    rules.sort(key=lambda r: (-r.confidence, -r.support, r.render()))
    return rules


@dataclass(frozen=True)
class RuleCandidate:
    source: OpenTriple
    candidate: ClosedTriple
    rule: Rule
    score: float


def _reify_open(t: OpenTriple, taxonomy, token_set: set[str]) -> MappingFacts:
    """Treat an open triple as an unlabeled mapping: its own subject and
    object are the candidate terms. Hypernyms are unfiltered here; rules
    only ever reference kept ones."""
    s_tokens = normalize_phrase(t.subject).tokens
    o_tokens = normalize_phrase(t.object).tokens
    insubj = {"subject"} | ({"object"} if _contains_tokens(o_tokens, s_tokens) else set())
    inobj = {"object"} | ({"subject"} if _contains_tokens(s_tokens, o_tokens) else set())
    isa = {"subject": tuple(taxonomy.hypernyms(t.subject)),
           "object": tuple(taxonomy.hypernyms(t.object))}
    tokens = token_set.intersection(lemma_tokens(t.predicate))
    return MappingFacts("M?", t, None, frozenset(insubj), frozenset(inobj),
                        isa, frozenset(tokens))


def apply_rules(rules: list[Rule], open_kb: OpenKB, taxonomy,
                top_tokens) -> list[RuleCandidate]:
    """Evaluate every rule body against every open triple (reified with the
    same taxonomy/token configuration as mining) and emit the head
    instantiations. Candidate score = confidence x open score."""
    open_kb = as_open_kb(open_kb)
    token_set = set(top_tokens)
    out: list[RuleCandidate] = []
    for t in open_kb:
        m = _reify_open(t, taxonomy, token_set)
        phrases = {"subject": t.subject, "object": t.object}
        for rule in rules:
            for a_slot, b_slot in _BINDINGS:
                if a_slot == b_slot:
                    continue
                if not _body_holds(rule.body, m, a_slot, b_slot):
                    continue
                s, o = phrases[a_slot], phrases[b_slot]
                if normalize_phrase(s).tokens == normalize_phrase(o).tokens:
                    continue
                out.append(RuleCandidate(
                    t, ClosedTriple(s, rule.head.relation, o), rule,
                    rule.confidence * t.score))
    return out


def candidates_to_generations(candidates: list[RuleCandidate]) -> list[Generation]:
    """Adapter for ranked evaluation: the candidate score rides in the open
    score slot at rank 0, so the scorer's weight_only mode sums it."""
    out = []
    for c in candidates:
        source = OpenTriple(c.source.subject, c.source.predicate,
                            c.source.object, c.score)
        out.append(Generation(source, c.candidate, 0, c.score))
    return out


def save_rule_candidates(candidates: list[RuleCandidate], path) -> None:
    """Generations-format JSONL with the full provenance kept: each record
    carries the rule that fired and its confidence, and stays readable by
    the ranking loader (which ignores the extra keys)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in candidates:
            rec = {
                "source": {"s": c.source.subject, "p": c.source.predicate,
                           "o": c.source.object, "score": c.score},
                "candidate": {"s": c.candidate.subject, "r": c.candidate.relation,
                              "o": c.candidate.object},
                "rank": 0,
                "gen_score": c.score,
                "rule": c.rule.render(),
                "confidence": c.rule.confidence,
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def save_rules(rules: list[Rule], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in rules:
            fh.write(f"{r.render()}\t{r.confidence}\t{r.support}\n")


def load_rules(path) -> list[Rule]:
    rules = []
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        fields = raw.split("\t")
        if len(fields) != 3:
            raise KBFormatError(path, lineno, f"expected 3 fields, got {len(fields)}")
        try:
            body_text, head_text = fields[0].split(" ⇒ ")
            atoms = tuple(Atom(*_atom_parts(part)) for part in body_text.split(" ∧ "))
            head = Atom(*_atom_parts(head_text))
            rules.append(Rule(atoms, head, float(fields[1]), int(fields[2]), 0))
        except ValueError as exc:
            raise KBFormatError(path, lineno, f"bad rule: {exc}") from None
    return rules


def _atom_parts(text: str) -> tuple[str, str, str]:
    parts = text.split()
    if len(parts) != 3:
        raise ValueError(f"atom {text!r} does not have three parts")
    return (parts[1], parts[0], parts[2])


class RuleMiningMapper(BaseEstimator):
    """fit(alignments, open_kb) mines rules_; predict(open_kb) applies
    them."""

    def __init__(self, taxonomy=None, min_confidence: float = 0.5,
                 min_support: int = 20, top_n_tokens: int = 100,
                 isa_min_count: int = 10, isa_max_fraction: float = 0.5):
        self.taxonomy = taxonomy
        self.min_confidence = min_confidence
        self.min_support = min_support
        self.top_n_tokens = top_n_tokens
        self.isa_min_count = isa_min_count
        self.isa_max_fraction = isa_max_fraction

    def _taxonomy(self):
        return self.taxonomy if self.taxonomy is not None else TsvTaxonomy({})

    def fit(self, alignments: AlignmentSet, open_kb=None):
        if open_kb is None:
            raise ValueError("fit needs the open KB for predicate-token statistics")
        self.meta_ = build_meta_kb(alignments, self._taxonomy(), as_open_kb(open_kb),
                                   self.isa_min_count, self.isa_max_fraction,
                                   self.top_n_tokens)
        self.rules_ = mine_rules(self.meta_, self.min_confidence, self.min_support)
        return self

    def predict(self, open_kb) -> list[RuleCandidate]:
        if not hasattr(self, "rules_"):
            raise ValueError("RuleMiningMapper.fit must run first")
        return apply_rules(self.rules_, as_open_kb(open_kb), self._taxonomy(),
                           self.meta_.top_tokens)
