"""Rule-based weak-supervision alignment.

An open triple (s, p, o) aligns with every closed triple whose normalized
subject/object pair equals one of four key patterns:

  standard             (n(s), n(o))
  reverse              (n(o), n(s))
  pred_in_obj          (n(s), n(p + " " + o))
  reverse_pred_in_obj  (n(p + " " + o), n(s))

All patterns fire independently; when several hit the same closed triple
the first pattern in the order above wins. Output order is open-KB input
order, then pattern order, then closed-KB input order.
"""

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .alignments import Alignment, AlignmentSet
from .index import ClosedIndex, index_closed_kb
from .normalize import normalize_phrase
from .triples import OpenKB, OpenTriple
from .validation import as_closed_kb, as_open_kb


def pattern_keys(t: OpenTriple) -> list[tuple[str, tuple[str, str]]]:
    s = normalize_phrase(t.subject).text
    o = normalize_phrase(t.object).text
    po = normalize_phrase(t.predicate + " " + t.object).text
    return [
        ("standard", (s, o)),
        ("reverse", (o, s)),
        ("pred_in_obj", (s, po)),
        ("reverse_pred_in_obj", (po, s)),
    ]


def align_rule_based(open_kb: OpenKB, index: ClosedIndex) -> AlignmentSet:
    alignments = []
    seen = set()
    for t in open_kb:
        for pattern, key in pattern_keys(t):
            for closed in index.by_so.get(key, ()):
                pair = (t, closed)
                if pair in seen:
                    continue
                seen.add(pair)
                alignments.append(Alignment(t, closed, "rule", pattern=pattern))
    return AlignmentSet(tuple(alignments), provenance="rule")


class RuleAligner(BaseEstimator, TransformerMixin):
    """fit(closed_kb) builds the index; transform(open_kb) -> AlignmentSet."""

    def fit(self, closed_kb, y=None):
        self.index_ = index_closed_kb(as_closed_kb(closed_kb))
        return self

    def transform(self, open_kb) -> AlignmentSet:
        if not hasattr(self, "index_"):
            raise NotFittedError("RuleAligner.fit(closed_kb) must run first")
        return align_rule_based(as_open_kb(open_kb), self.index_)
