import random

import pytest

from _synth import RELATIONS, make_open_kb
from kbmap.alignments import Alignment
from kbmap.translate import (
    GenCandidate,
    Generation,
    GenerationError,
    MockGenerator,
    Rejection,
    TripleTranslator,
    filter_generations,
    format_training_example,
    load_generations,
    make_prompt,
    parse_generation,
    save_generations,
    translate_kb,
)
from kbmap.triples import ClosedTriple, OpenKB, OpenTriple


def _alignment(open_spo, closed_sro):
    return Alignment(OpenTriple(*open_spo), ClosedTriple(*closed_sro),
                     "rule", pattern="standard")


def test_format_training_example():
    a = _alignment(("fish", "live in", "water"), ("fish", "AtLocation", "water"))
    assert format_training_example(a) == \
        "fish, live in, water [SEP] fish, AtLocation, water"
    b = _alignment(("ocean", "contain", "fish"), ("fish", "AtLocation", "ocean"))
    assert format_training_example(b) == \
        "ocean, contain, fish [SEP] fish, AtLocation, ocean"
    # commas inside phrases are emitted verbatim, no escaping
    c = _alignment(("a, b", "p", "o"), ("s", "AtLocation", "o"))
    assert format_training_example(c) == "a, b, p, o [SEP] s, AtLocation, o"


def test_make_prompt():
    assert make_prompt(OpenTriple("fish", "live in", "water")) == \
        "fish, live in, water [SEP] "


def test_parse_generation(schema):
    assert parse_generation(
        "fish, live in, water [SEP] fish, AtLocation, water", schema
    ) == ClosedTriple("fish", "AtLocation", "water")
    # no separator: the whole string is the candidate
    assert parse_generation("fish, AtLocation, water", schema) == \
        ClosedTriple("fish", "AtLocation", "water")
    # multiple separators: text after the last one
    assert parse_generation(
        "x [SEP] y [SEP] fish, AtLocation, water", schema
    ) == ClosedTriple("fish", "AtLocation", "water")


def test_parse_generation_rejections(schema):
    assert parse_generation("fish, AtLocation", schema) == Rejection("arity")
    assert parse_generation("fish water", schema) == Rejection("arity")
    assert parse_generation("fish, SwimsFast, water", schema) == \
        Rejection("unknown_relation")
    assert parse_generation(", AtLocation, water", schema) == Rejection("empty_field")
    assert parse_generation("fish, , water", schema) == Rejection("empty_field")
    # extra ", " delimiters widen the middle field past any schema relation
    assert parse_generation("a, b, c, d", schema) == Rejection("unknown_relation")


def test_round_trip_parse_format(schema):
    rng = random.Random(77)
    subjects = ["fish", "the ocean", "doctor", "new york city"]
    for _ in range(200):
        a = _alignment(
            (rng.choice(subjects), "live in", rng.choice(subjects) + " x"),
            (rng.choice(subjects), rng.choice(RELATIONS), rng.choice(subjects) + " y"),
        )
        assert parse_generation(format_training_example(a), schema) == a.closed


def test_filter_drops_degenerate():
    src = OpenTriple("water", "be", "water")
    assert filter_generations(
        src, [(ClosedTriple("water", "RelatedTo", "water"), 0, 1.0)]) == []
    # degeneracy is judged on normalized phrases
    assert filter_generations(
        src, [(ClosedTriple("water", "HasProperty", "the water"), 0, 1.0)]) == []


def test_filter_dedup_keeps_lowest_rank():
    src = OpenTriple("fish", "live in", "water")
    t = ClosedTriple("fish", "AtLocation", "water")
    other = ClosedTriple("fish", "Desires", "water")
    parsed = [(t, 4, 0.2), (other, 2, 0.5), (t, 1, 0.9)]
    out = filter_generations(src, parsed)
    assert [(g.candidate, g.rank) for g in out] == [(t, 1), (other, 2)]
    assert filter_generations(src, []) == []


def test_translate_with_echo_mock(schema):
    open_kb = OpenKB("o", (OpenTriple("fish", "live in", "water"),
                           OpenTriple("doctor", "wear", "coat")))
    gens = translate_kb(open_kb, MockGenerator(schema.relations), schema, k=1)
    assert [(g.source.subject, g.candidate.sro, g.rank) for g in gens] == [
        ("fish", ("fish", "CapableOf", "live in water"), 0),
        ("doctor", ("doctor", "CapableOf", "wear coat"), 0),
    ]


def test_generator_may_underfill(schema):
    class ThreeOnly:
        def generate(self, prompts, k):
            return [[GenCandidate(f"s{i}, AtLocation, o", 1.0, i) for i in range(3)]
                    for _ in prompts]

    open_kb = OpenKB("o", (OpenTriple("fish", "live in", "water"),))
    gens = translate_kb(open_kb, ThreeOnly(), schema, k=10)
    assert len(gens) == 3


def test_generator_failure_identifies_batch(schema):
    class Boom:
        def generate(self, prompts, k):
            raise RuntimeError("model crashed")

    open_kb = OpenKB("o", (OpenTriple("fish", "live in", "water"),))
    with pytest.raises(GenerationError, match="offset 0"):
        translate_kb(open_kb, Boom(), schema, k=1)


def test_translate_deterministic_across_concurrency(schema):
    rng = random.Random(4)
    open_kb = make_open_kb(rng, 30)
    gen = MockGenerator(schema.relations)
    runs = [translate_kb(open_kb, gen, schema, k=5, batch_size=b, concurrency=c)
            for b, c in ((64, 1), (4, 1), (4, 6))]
    assert runs[0] == runs[1] == runs[2]


def test_every_candidate_obeys_closed_invariants(schema):
    from kbmap.normalize import normalize_phrase

    rng = random.Random(19)
    open_kb = make_open_kb(rng, 40)
    for g in translate_kb(open_kb, MockGenerator(schema.relations), schema, k=6):
        assert g.candidate.relation in schema
        assert normalize_phrase(g.candidate.subject).tokens != \
            normalize_phrase(g.candidate.object).tokens
        assert g.rank >= 0


def test_generations_jsonl_round_trip(tmp_path, schema):
    rng = random.Random(6)
    open_kb = make_open_kb(rng, 10)
    gens = translate_kb(open_kb, MockGenerator(schema.relations), schema, k=3)
    path = tmp_path / "gens.jsonl"
    save_generations(gens, path)
    assert load_generations(path) == gens


def test_estimator_api(schema):
    open_kb = OpenKB("o", (OpenTriple("fish", "live in", "water"),))
    translator = TripleTranslator(schema=schema, k=2)
    gens = translator.fit().transform(open_kb)
    assert gens and all(isinstance(g, Generation) for g in gens)
    with pytest.raises(ValueError):
        TripleTranslator().transform(open_kb)
