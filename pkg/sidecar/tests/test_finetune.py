"""Toy finetune acceptance: >= 1k rule-style alignment lines, three
epochs, and at least half of the held-out prompts must decode into
parseable closed triples."""

import random

import pytest
from fastapi.testclient import TestClient

from kbmap_sidecar.app import create_app
from kbmap_sidecar.embedders import HashEmbedder
from kbmap_sidecar.finetune import finetune, parse_closed_side
from kbmap_sidecar.generators import CheckpointGenerator

SUBJECTS = ["fish", "dog", "cat", "bird", "doctor", "nurse", "farmer", "child",
            "elephant", "lion", "bee", "tree", "car", "ship", "plane", "book",
            "guitar", "house", "school", "hospital", "river", "ocean", "desert",
            "forest", "city", "road", "coat", "mask", "bone", "honey"]
OBJECTS = ["water", "house", "sky", "ocean", "school", "hospital", "field",
           "forest", "kitchen", "road", "music", "food", "bread", "juice",
           "africa", "nest", "garden", "library", "barn", "harbor"]
TEMPLATES = [
    ("live in", "AtLocation", "so"),
    ("be in", "AtLocation", "so"),
    ("work in", "AtLocation", "so"),
    ("swim in", "CapableOf", "po"),
    ("eat", "Desires", "so"),
    ("have", "HasA", "so"),
    ("contain", "AtLocation", "rev"),
    ("wear", "CapableOf", "po"),
]


def alignment_lines(n: int, seed: int = 42) -> list[str]:
    rng = random.Random(seed)
    lines = []
    while len(lines) < n:
        s, o = rng.choice(SUBJECTS), rng.choice(OBJECTS)
        if s == o:
            continue
        p, rel, shape = rng.choice(TEMPLATES)
        if shape == "so":
            closed = f"{s}, {rel}, {o}"
        elif shape == "po":
            closed = f"{s}, {rel}, {p} {o}"
        else:
            closed = f"{o}, {rel}, {s}"
        lines.append(f"{s}, {p}, {o} [SEP] {closed}")
    return lines


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("ckpt")
    train_file = out_dir / "train.txt"
    train_file.write_text("\n".join(alignment_lines(1200)) + "\n", "utf-8")
    report = finetune(train_file, out_dir, epochs=3, seed=0)
    return out_dir, report


def test_loss_decreases_over_epochs(trained):
    _, report = trained
    assert report["epochs"] == 3
    assert report["losses"][-1] < report["losses"][0]


def test_holdout_parse_rate_at_least_half(trained):
    _, report = trained
    assert report["n_train"] >= 1000
    assert report["holdout_parse_rate"] >= 0.5
    print(f"ACCEPTANCE PASS: toy finetune holdout parse rate "
          f"{report['holdout_parse_rate']:.2f} over {report['n_holdout']} prompts")


def test_checkpoint_serves_generate(trained):
    out_dir, report = trained
    client = TestClient(create_app(HashEmbedder(dim=16),
                                   CheckpointGenerator(out_dir / "model.pt")))
    health = client.get("/health").json()
    assert health["generator"].startswith("checkpoint:")
    resp = client.post("/generate", json={
        "prompts": ["fish, live in, water [SEP] ", "doctor, work in, hospital [SEP] "],
        "k": 3})
    assert resp.status_code == 200
    relations = set(report["relations"])
    parseable = 0
    for per_prompt in resp.json()["results"]:
        candidates = per_prompt["candidates"]
        assert [c["rank"] for c in candidates] == list(range(len(candidates)))
        assert len(candidates) <= 3
        parseable += sum(parse_closed_side(c["text"], relations) for c in candidates)
    assert parseable >= 3


def test_finetune_input_validation(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("", "utf-8")
    with pytest.raises(ValueError, match="empty"):
        finetune(empty, tmp_path / "out")
    train = tmp_path / "train.txt"
    train.write_text("\n".join(alignment_lines(20)) + "\n", "utf-8")
    with pytest.raises(ValueError, match="epochs"):
        finetune(train, tmp_path / "out", epochs=0)
    bad = tmp_path / "bad.txt"
    bad.write_text("no separator here\n", "utf-8")
    with pytest.raises(ValueError, match="separator"):
        finetune(bad, tmp_path / "out")


def test_parse_closed_side():
    rels = {"AtLocation"}
    assert parse_closed_side("x, p, y [SEP] a, AtLocation, b", rels)
    assert parse_closed_side("a, AtLocation, b", rels)
    assert not parse_closed_side("x [SEP] a, Bogus, b", rels)
    assert not parse_closed_side("x [SEP] a, AtLocation", rels)
