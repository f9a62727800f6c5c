"""Automatic evaluation of a translated KB against a target closed KB.

Set metrics (membership = exact equality after trimming and case-folding):

  recall            |trans ∩ target| / |target|
  precision         |trans ∩ target| / |trans|
  barred variants   target replaced by target − train; the precision
                    denominator likewise drops train triples
  precision@K       precision over the top-K ranked entries
  generalized MRR   sum of 1/i over hit positions i, divided by the ideal
                    harmonic sum over |target| positions

Relative variants divide by the same metric computed for the raw open KB
with relations ignored: both sides reduce to unordered normalized
(subject, object) pairs.

Undefined values (zero denominators) are returned as None and rendered as
the literal NA, never as 0.
"""

import json
from dataclasses import dataclass, field, replace

from .normalize import normalize_phrase
from .scoring import RankedKB
from .translate import Generation
from .triples import ClosedTriple, OpenKB


def membership_key(t: ClosedTriple) -> tuple[str, str, str]:
    return (t.subject.casefold(), t.relation.casefold(), t.object.casefold())


def _keyset(triples) -> set[tuple[str, str, str]]:
    return {membership_key(t) for t in triples}


def automatic_recall(trans, target) -> float | None:
    trans_keys, target_keys = _keyset(trans), _keyset(target)
    if not target_keys:
        return None
    return len(trans_keys & target_keys) / len(target_keys)


def automatic_precision(trans, target) -> float | None:
    trans_keys, target_keys = _keyset(trans), _keyset(target)
    if not trans_keys:
        return None
    return len(trans_keys & target_keys) / len(trans_keys)


def automatic_recall_barred(trans, target, train) -> float | None:
    kept = _keyset(target) - _keyset(train)
    if not kept:
        return None
    return len(_keyset(trans) & kept) / len(kept)


def automatic_precision_barred(trans, target, train) -> float | None:
    train_keys = _keyset(train)
    trans_keys = _keyset(trans) - train_keys
    if not trans_keys:
        return None
    kept = _keyset(target) - train_keys
    return len(trans_keys & kept) / len(trans_keys)


def precision_at_k(ranked: RankedKB, target, k: int) -> float | None:
    top = [e.triple for e in ranked.entries[:k]]
    return automatic_precision(top, target)


def generalized_mrr(ranked: RankedKB, target, exclude=None) -> float | None:
    """Rank-weighted recall: hits at position i (1-based) earn 1/i,
    normalized by the harmonic sum an ideal ranking of the whole target
    would earn."""
    target_keys = _keyset(target)
    if exclude is not None:
        target_keys -= _keyset(exclude)
    if not target_keys:
        return None
    numerator = sum(1.0 / i for i, e in enumerate(ranked.entries, start=1)
                    if membership_key(e.triple) in target_keys)
    denominator = sum(1.0 / i for i in range(1, len(target_keys) + 1))
    return numerator / denominator


def relative(value: float | None, reference: float | None) -> float | None:
    if value is None or reference is None or reference <= 0:
        return None
    return value / reference


# -- relation-agnostic reference (the open KB "ignoring the relations") --

def _pair_key(subject: str, obj: str) -> tuple[str, str]:
    a, b = normalize_phrase(subject).text, normalize_phrase(obj).text
    return (a, b) if a <= b else (b, a)


def reference_metrics(open_kb: OpenKB, target, ks=(), exclude=None) -> dict:
    """Metrics for the raw open KB with relations ignored: every triple on
    both sides collapses to its unordered normalized (subject, object)
    pair, deduplicated; the ranking is the open KB ordered by score."""
    target_pairs = {_pair_key(t.subject, t.object) for t in target}
    if exclude is not None:
        target_pairs -= {_pair_key(t.subject, t.object) for t in exclude}

    ranked, seen = [], set()
    for t in sorted(open_kb, key=lambda t: (-t.score, t.spo)):
        key = _pair_key(t.subject, t.object)
        if key not in seen:
            seen.add(key)
            ranked.append(key)

    open_pairs = set(ranked)
    hits = open_pairs & target_pairs
    out = {
        "r_a": len(hits) / len(target_pairs) if target_pairs else None,
        "p_a": len(hits) / len(open_pairs) if open_pairs else None,
    }
    if target_pairs:
        ideal = sum(1.0 / i for i in range(1, len(target_pairs) + 1))
        got = sum(1.0 / i for i, key in enumerate(ranked, start=1) if key in target_pairs)
        out["mrr"] = got / ideal
    else:
        out["mrr"] = None
    for k in ks:
        top = ranked[:k]
        matched = sum(1 for key in top if key in target_pairs)
        out[f"p_at_{k}"] = matched / len(top) if top else None
    return out


@dataclass(frozen=True)
class EvalReport:
    size: int
    r_a: float | None
    p_a: float | None
    r_a_bar: float | None
    p_a_bar: float | None
    p_at_k: dict[int, float | None]
    mrr: float | None
    mrr_bar: float | None
    relative: dict[str, float | None] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "size": self.size,
            "r_a": self.r_a,
            "p_a": self.p_a,
            "r_a_bar": self.r_a_bar,
            "p_a_bar": self.p_a_bar,
            "p_at_k": {str(k): v for k, v in self.p_at_k.items()},
            "mrr": self.mrr,
            "mrr_bar": self.mrr_bar,
            "relative": dict(self.relative),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        def fmt(v):
            return "NA" if v is None else f"{v:.6f}"

        rows = [("size", str(self.size)), ("R_a", fmt(self.r_a)), ("P_a", fmt(self.p_a)),
                ("R_a_bar", fmt(self.r_a_bar)), ("P_a_bar", fmt(self.p_a_bar))]
        rows += [(f"P_a@{k}", fmt(v)) for k, v in sorted(self.p_at_k.items())]
        rows += [("MRR", fmt(self.mrr)), ("MRR_bar", fmt(self.mrr_bar))]
        rows += [(f"rel:{name}", fmt(v)) for name, v in self.relative.items()]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def evaluate(ranked: RankedKB, target, train=None, ks=(10, 100, 1000, 10000),
             open_kb: OpenKB | None = None) -> EvalReport:
    trans = ranked.triples()
    has_train = train is not None
    train = list(train) if has_train else []
    report = EvalReport(
        size=len(ranked),
        r_a=automatic_recall(trans, target),
        p_a=automatic_precision(trans, target),
        r_a_bar=automatic_recall_barred(trans, target, train) if has_train else None,
        p_a_bar=automatic_precision_barred(trans, target, train) if has_train else None,
        p_at_k={k: precision_at_k(ranked, target, k) for k in ks},
        mrr=generalized_mrr(ranked, target),
        mrr_bar=generalized_mrr(ranked, target, exclude=train) if has_train else None,
        relative={},
    )
    if open_kb is None:
        return report
    ref = reference_metrics(open_kb, target, ks=ks)
    rel = {
        "r_a": relative(report.r_a, ref["r_a"]),
        "p_a": relative(report.p_a, ref["p_a"]),
        "mrr": relative(report.mrr, ref["mrr"]),
    }
    if has_train:
        ref_bar = reference_metrics(open_kb, target, ks=(), exclude=train)
        rel["r_a_bar"] = relative(report.r_a_bar, ref_bar.get("r_a"))
        rel["p_a_bar"] = relative(report.p_a_bar, ref_bar.get("p_a"))
        rel["mrr_bar"] = relative(report.mrr_bar, ref_bar.get("mrr"))
    for k in ks:
        rel[f"p_at_{k}"] = relative(report.p_at_k.get(k), ref.get(f"p_at_{k}"))
    return replace(report, relative=rel)


# -- subject/object conservation --

@dataclass(frozen=True)
class SOReport:
    """Fractions of per-source generation groups conserving the normalized
    subject (S), object (O), or both in one generation (SO), under three
    quantifiers: the first surviving generation, at least one, and all."""

    first: dict[str, float]
    any: dict[str, float]
    all: dict[str, float]
    groups: int

    def as_dict(self) -> dict:
        return {"groups": self.groups, "first": dict(self.first),
                "any": dict(self.any), "all": dict(self.all)}

    def to_text(self) -> str:
        lines = [f"{'':6} {'S':>8} {'O':>8} {'SO':>8}"]
        for name, row in (("first", self.first), ("any", self.any), ("all", self.all)):
            lines.append(f"{name:<6} {row['S']:>8.4f} {row['O']:>8.4f} {row['SO']:>8.4f}")
        return "\n".join(lines)


def group_by_source(generations) -> list[list[Generation]]:
    groups: dict = {}
    for g in generations:
        groups.setdefault(g.source, []).append(g)
    return list(groups.values())


def so_conservation(generations) -> SOReport:
    groups = group_by_source(generations)
    if not groups:
        raise ValueError("no generations to analyze")
    counts = {q: {"S": 0, "O": 0, "SO": 0} for q in ("first", "any", "all")}
    for group in groups:
        flags = []
        for g in group:
            s_ok = (normalize_phrase(g.candidate.subject).tokens
                    == normalize_phrase(g.source.subject).tokens)
            o_ok = (normalize_phrase(g.candidate.object).tokens
                    == normalize_phrase(g.source.object).tokens)
            flags.append((s_ok, o_ok, s_ok and o_ok))
        for col, i in (("S", 0), ("O", 1), ("SO", 2)):
            counts["first"][col] += flags[0][i]
            counts["any"][col] += any(f[i] for f in flags)
            counts["all"][col] += all(f[i] for f in flags)
    n = len(groups)
    return SOReport(
        first={c: counts["first"][c] / n for c in ("S", "O", "SO")},
        any={c: counts["any"][c] / n for c in ("S", "O", "SO")},
        all={c: counts["all"][c] / n for c in ("S", "O", "SO")},
        groups=n,
    )


# -- alignment-split retrieval metrics --

def alignment_test_metrics(predictions: dict, gold_by_source: dict,
                           ks=(1, 5, 10)) -> dict:
    """Macro-averaged MRR / P@K / R@K over test open triples.

    predictions: source triple -> ranked list of candidate ClosedTriple.
    gold_by_source: source triple -> list of gold ClosedTriple (>= 1 each).
    """
    if not gold_by_source:
        raise ValueError("empty gold set")
    mrr_total = 0.0
    p_tot = {k: 0.0 for k in ks}
    r_tot = {k: 0.0 for k in ks}
    for source, gold in gold_by_source.items():
        gold_keys = _keyset(gold)
        ranked_keys = [membership_key(c) for c in predictions.get(source, [])]
        for i, key in enumerate(ranked_keys, start=1):
            if key in gold_keys:
                mrr_total += 1.0 / i
                break
        for k in ks:
            hits = len(set(ranked_keys[:k]) & gold_keys)
            p_tot[k] += hits / k
            r_tot[k] += hits / len(gold_keys)
    n = len(gold_by_source)
    return {
        "mrr": mrr_total / n,
        "p_at": {k: p_tot[k] / n for k in ks},
        "r_at": {k: r_tot[k] / n for k in ks},
    }
