import random

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from _synth import brute_force_knn, make_closed_kb, make_open_kb
from kbmap.align_embed import (
    EmbeddingAligner,
    EmbeddingError,
    MockEmbedder,
    embed_unique,
    knn_align,
    serialize_triple,
)
from kbmap.triples import ClosedKB, ClosedTriple, OpenKB, OpenTriple


def test_serialize_triple():
    assert serialize_triple(OpenTriple("fish", "live in", "water")) == "fish, live in, water"
    assert serialize_triple(ClosedTriple("fish", "AtLocation", "water")) == "fish, AtLocation, water"
    assert serialize_triple(OpenTriple("a", "b", "c")) == "a, b, c"


def test_mock_embedder_contract():
    provider = MockEmbedder(dim=64)
    vecs = provider.embed(["fish, live in, water", "fish, live in, water", ""])
    assert vecs.shape == (3, 64)
    assert np.allclose(np.linalg.norm(vecs, axis=1), 1.0, atol=1e-9)
    assert np.array_equal(vecs[0], vecs[1])


def test_identical_text_pair_ranks_first():
    open_kb = OpenKB("o", (OpenTriple("dog", "chase", "cat"),
                           OpenTriple("fish", "AtLocation", "water")))
    closed = ClosedKB("c", (ClosedTriple("bird", "CapableOf", "fly"),
                            ClosedTriple("fish", "AtLocation", "water")))
    aset = knn_align(open_kb, closed, MockEmbedder(64), "open_to_closed", top_k=2)
    first = aset.alignments[0]
    assert first.open.spo == ("fish", "AtLocation", "water")
    assert first.closed.sro == ("fish", "AtLocation", "water")
    assert first.distance < 1e-9


def test_top_k_one_returns_global_minimum():
    rng = random.Random(2)
    open_kb = make_open_kb(rng, 15)
    closed_kb = make_closed_kb(rng, 15)
    full = knn_align(open_kb, closed_kb, MockEmbedder(64), "open_to_closed", top_k=15)
    one = knn_align(open_kb, closed_kb, MockEmbedder(64), "open_to_closed", top_k=1)
    assert len(one) == 1
    assert one.alignments[0] == full.alignments[0]


def test_output_size_and_monotone_distances():
    rng = random.Random(8)
    open_kb = make_open_kb(rng, 30)
    closed_kb = make_closed_kb(rng, 20)
    aset = knn_align(open_kb, closed_kb, MockEmbedder(64), "open_to_closed", top_k=100)
    assert len(aset) == 30
    dists = [a.distance for a in aset]
    assert dists == sorted(dists)
    assert all(a.method == "embed" for a in aset)


def test_inv_direction_unique_closed():
    rng = random.Random(12)
    open_kb = make_open_kb(rng, 25)
    closed_kb = make_closed_kb(rng, 18)
    aset = knn_align(open_kb, closed_kb, MockEmbedder(64), "closed_to_open", top_k=100)
    assert len(aset) == 18
    closed_seen = [a.closed for a in aset]
    assert len(set(closed_seen)) == len(closed_seen)
    assert all(a.method == "embed-inv" for a in aset)


def test_matches_brute_force_20x20():
    rng = random.Random(31)
    open_kb = make_open_kb(rng, 20)
    closed_kb = make_closed_kb(rng, 20, open_kb)
    provider = MockEmbedder(64)
    for direction in ("open_to_closed", "closed_to_open"):
        aset = knn_align(open_kb, closed_kb, provider, direction, top_k=20)
        expected = brute_force_knn(open_kb, closed_kb, provider, direction, 20)
        assert [(a.open, a.closed) for a in aset] == [(o, c) for o, c, _ in expected]
        for a, (_, _, d) in zip(aset, expected):
            assert abs(a.distance - d) < 1e-12


def test_batch_size_and_concurrency_invariance():
    rng = random.Random(17)
    open_kb = make_open_kb(rng, 40)
    closed_kb = make_closed_kb(rng, 40)
    runs = [
        knn_align(open_kb, closed_kb, MockEmbedder(64), "open_to_closed", 40,
                  batch_size=b, concurrency=c)
        for b, c in ((64, 1), (3, 1), (7, 4))
    ]
    assert runs[0] == runs[1] == runs[2]


def test_duplicate_open_triples_collapse():
    t = OpenTriple("fish", "live in", "water")
    open_kb = OpenKB("o", (t, t))
    closed = ClosedKB("c", (ClosedTriple("fish", "AtLocation", "water"),))
    aset = knn_align(open_kb, closed, MockEmbedder(64), "open_to_closed", top_k=5)
    assert len(aset) == 1  # identical (open, closed) pairs dedupe


def test_empty_kb_rejected():
    closed = ClosedKB("c", (ClosedTriple("fish", "AtLocation", "water"),))
    with pytest.raises(ValueError):
        knn_align(OpenKB("o", ()), closed, MockEmbedder(16), "open_to_closed", 1)


def test_provider_failure_identifies_batch():
    class Boom:
        def embed(self, texts):
            raise RuntimeError("backend down")

    open_kb = OpenKB("o", (OpenTriple("fish", "live in", "water"),))
    closed = ClosedKB("c", (ClosedTriple("fish", "AtLocation", "water"),))
    with pytest.raises(EmbeddingError, match="batch 0"):
        knn_align(open_kb, closed, Boom(), "open_to_closed", 1)


def test_embed_unique_fans_out():
    provider = MockEmbedder(32)
    texts = ["a, b, c", "x, y, z", "a, b, c"]
    vecs = embed_unique(texts, provider, batch_size=1)
    assert np.array_equal(vecs[0], vecs[2])
    assert vecs.shape == (3, 32)


def test_estimator_api(fish_open_kb, fish_closed_kb):
    aligner = EmbeddingAligner(top_k=3)
    with pytest.raises(NotFittedError):
        aligner.transform(fish_open_kb)
    aset = aligner.fit(fish_closed_kb).transform(fish_open_kb)
    assert len(aset) == 3
    assert aligner.get_params()["top_k"] == 3
