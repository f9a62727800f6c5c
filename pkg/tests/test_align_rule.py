import random

import pytest
from sklearn.exceptions import NotFittedError

from _synth import brute_force_rule_align, make_closed_kb, make_open_kb
from kbmap.align_rule import RuleAligner, align_rule_based
from kbmap.alignments import Alignment, AlignmentSet
from kbmap.index import index_closed_kb
from kbmap.normalize import normalize_phrase
from kbmap.triples import ClosedKB, ClosedTriple, OpenKB, OpenTriple


def _align(open_kb, closed_kb):
    return align_rule_based(open_kb, index_closed_kb(closed_kb))


def test_intro_mapping_patterns(fish_open_kb, fish_closed_kb):
    aset = _align(fish_open_kb, fish_closed_kb)
    got = {(a.open.spo, a.closed.sro, a.pattern) for a in aset}
    at_ocean = ("fish", "AtLocation", "ocean")
    swim = ("fish", "CapableOf", "swim in the ocean")
    assert (("fish", "live in", "the ocean"), at_ocean, "standard") in got
    assert (("ocean", "contain", "fish"), at_ocean, "reverse") in got
    assert (("fish", "swim in", "the ocean"), swim, "pred_in_obj") in got


def test_reverse_pred_in_obj_pattern():
    open_kb = OpenKB("o", (OpenTriple("fish", "swim in", "the ocean"),))
    closed = ClosedKB("c", (ClosedTriple("swim in the ocean", "ReceivesAction", "fish"),))
    aset = _align(open_kb, closed)
    assert [a.pattern for a in aset] == ["reverse_pred_in_obj"]


def test_unmatched_triples_produce_nothing():
    open_kb = OpenKB("o", (OpenTriple("penguin", "waddle on", "ice"),))
    closed = ClosedKB("c", (ClosedTriple("fish", "AtLocation", "ocean"),))
    assert len(_align(open_kb, closed)) == 0


def test_duplicate_pair_keeps_first_pattern():
    # "in the ocean" normalizes to "ocean", so standard and pred_in_obj hit
    # the same closed triple; the standard label must win.
    open_kb = OpenKB("o", (OpenTriple("fish", "in", "the ocean"),))
    closed = ClosedKB("c", (ClosedTriple("fish", "AtLocation", "ocean"),))
    aset = _align(open_kb, closed)
    assert [(a.pattern,) for a in aset] == [("standard",)]


def test_all_matches_emitted():
    open_kb = OpenKB("o", (OpenTriple("fish", "live in", "the ocean"),))
    closed = ClosedKB("c", (
        ClosedTriple("fish", "AtLocation", "ocean"),
        ClosedTriple("fish", "Desires", "the ocean"),
        ClosedTriple("ocean", "HasA", "fish"),
    ))
    aset = _align(open_kb, closed)
    assert [(a.closed.sro, a.pattern) for a in aset] == [
        (("fish", "AtLocation", "ocean"), "standard"),
        (("fish", "Desires", "the ocean"), "standard"),
        (("ocean", "HasA", "fish"), "reverse"),
    ]


def test_output_ordering_contract():
    open_kb = OpenKB("o", (
        OpenTriple("ocean", "contain", "fish"),
        OpenTriple("fish", "live in", "the ocean"),
    ))
    closed = ClosedKB("c", (
        ClosedTriple("ocean", "HasA", "fish"),
        ClosedTriple("fish", "AtLocation", "ocean"),
    ))
    aset = _align(open_kb, closed)
    # open order first: both open triples match both closed triples
    assert [a.open.subject for a in aset][:2] == ["ocean", "ocean"]
    assert [(a.open.subject, a.pattern, a.closed.relation) for a in aset] == [
        ("ocean", "standard", "HasA"),
        ("ocean", "reverse", "AtLocation"),
        ("fish", "standard", "AtLocation"),
        ("fish", "reverse", "HasA"),
    ]


def test_soundness_of_emitted_alignments():
    rng = random.Random(23)
    open_kb = make_open_kb(rng, 80)
    closed_kb = make_closed_kb(rng, 80, open_kb)
    n = lambda text: normalize_phrase(text).tokens
    for a in _align(open_kb, closed_kb):
        cs, co = n(a.closed.subject), n(a.closed.object)
        s, o = n(a.open.subject), n(a.open.object)
        po = n(a.open.predicate + " " + a.open.object)
        expected = {
            "standard": (s, o),
            "reverse": (o, s),
            "pred_in_obj": (s, po),
            "reverse_pred_in_obj": (po, s),
        }[a.pattern]
        assert (cs, co) == expected


def test_brute_force_equivalence_small():
    rng = random.Random(99)
    for _ in range(10):
        open_kb = make_open_kb(rng, rng.randint(5, 60))
        closed_kb = make_closed_kb(rng, rng.randint(5, 60), open_kb)
        got = [(a.open, a.closed, a.pattern)
               for a in _align(open_kb, closed_kb)]
        assert got == brute_force_rule_align(open_kb, closed_kb)


def test_determinism():
    rng = random.Random(41)
    open_kb = make_open_kb(rng, 50)
    closed_kb = make_closed_kb(rng, 50, open_kb)
    assert _align(open_kb, closed_kb) == _align(open_kb, closed_kb)


def test_alignment_invariants():
    t = OpenTriple("fish", "live in", "water")
    c = ClosedTriple("fish", "AtLocation", "water")
    with pytest.raises(ValueError):
        Alignment(t, c, "rule")  # missing pattern
    with pytest.raises(ValueError):
        Alignment(t, c, "rule", pattern="standard", distance=0.1)
    with pytest.raises(ValueError):
        Alignment(t, c, "embed", pattern="standard")
    with pytest.raises(ValueError):
        AlignmentSet((Alignment(t, c, "rule", pattern="standard"),
                      Alignment(t, c, "rule", pattern="reverse")))


def test_estimator_api(fish_open_kb, fish_closed_kb):
    aligner = RuleAligner()
    with pytest.raises(NotFittedError):
        aligner.transform(fish_open_kb)
    aset = aligner.fit(fish_closed_kb).transform(fish_open_kb)
    assert len(aset) == 4
    assert aligner.get_params() == {}
