"""HTTP provider clients exercised against a canned in-process server
speaking the sidecar wire protocol."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import numpy as np
import pytest

from kbmap.align_embed import HttpEmbedder, knn_align
from kbmap.translate import HttpGenerator, translate_kb
from kbmap.triples import ClosedKB, ClosedTriple, OpenKB, OpenTriple


def _unit(vec):
    arr = np.asarray(vec, dtype=float)
    return (arr / np.linalg.norm(arr)).tolist()


class CannedHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers["Content-Length"])
        request = json.loads(self.rfile.read(length))
        if self.path == "/embed":
            body = {"embeddings": [_unit([hash_bucket(t) + 1, 1, 1, 1])
                                   for t in request["texts"]],
                    "dim": 4}
        elif self.path == "/generate":
            body = {"results": [
                {"candidates": [
                    {"text": f"{p.split(',')[0]}, AtLocation, place", "score": -0.1, "rank": 0},
                    {"text": "not a triple", "score": -0.9, "rank": 1},
                ][:request["k"]]}
                for p in request["prompts"]]}
        else:
            self.send_error(404)
            return
        payload = json.dumps(body).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


def hash_bucket(text: str) -> int:
    import zlib

    return zlib.crc32(text.encode("utf-8")) % 7


@pytest.fixture(scope="module")
def server_url():
    server = HTTPServer(("127.0.0.1", 0), CannedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


def test_http_embedder_parses_unit_vectors(server_url):
    provider = HttpEmbedder(server_url)
    vecs = provider.embed(["fish, live in, water", "doctor, wear, coat"])
    assert vecs.shape == (2, 4)
    assert np.allclose(np.linalg.norm(vecs, axis=1), 1.0, atol=1e-9)


def test_knn_align_through_http(server_url):
    open_kb = OpenKB("o", (OpenTriple("fish", "live in", "water"),))
    closed = ClosedKB("c", (ClosedTriple("fish", "AtLocation", "water"),
                            ClosedTriple("doctor", "CapableOf", "heal"),))
    aset = knn_align(open_kb, closed, HttpEmbedder(server_url), "open_to_closed", 1)
    assert len(aset) == 1 and aset.alignments[0].method == "embed"


def test_http_generator_and_parse_filter(server_url, schema):
    open_kb = OpenKB("o", (OpenTriple("fish", "live in", "water"),
                           OpenTriple("doctor", "wear", "coat")))
    gens = translate_kb(open_kb, HttpGenerator(server_url), schema, k=2)
    # the rank-1 candidate is malformed and parses away
    assert [(g.source.subject, g.candidate.sro) for g in gens] == [
        ("fish", ("fish", "AtLocation", "place")),
        ("doctor", ("doctor", "AtLocation", "place")),
    ]


# -- recorded sidecar responses: wire compatibility without models --

class RecordedHandler(BaseHTTPRequestHandler):
    fixture = json.loads(
        (Path(__file__).parent / "data" / "sidecar_fixtures.json").read_text("utf-8"))

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        request = json.loads(self.rfile.read(length))
        kind = self.path.lstrip("/")
        recorded = self.fixture.get(kind)
        if recorded is None or request != recorded["request"]:
            self.send_error(404, "no recorded exchange for this request")
            return
        payload = json.dumps(recorded["response"]).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="module")
def recorded_url():
    server = HTTPServer(("127.0.0.1", 0), RecordedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


def test_recorded_embed_fixture_parses(recorded_url):
    request = RecordedHandler.fixture["embed"]["request"]
    vecs = HttpEmbedder(recorded_url).embed(request["texts"])
    assert vecs.shape == (len(request["texts"]),
                          RecordedHandler.fixture["embed"]["response"]["dim"])
    assert np.allclose(np.linalg.norm(vecs, axis=1), 1.0, atol=1e-4)


def test_recorded_generate_fixture_parses(recorded_url, schema):
    request = RecordedHandler.fixture["generate"]["request"]
    results = HttpGenerator(recorded_url).generate(request["prompts"], request["k"])
    assert len(results) == len(request["prompts"])
    for candidates in results:
        assert [c.rank for c in candidates] == list(range(len(candidates)))
        assert len(candidates) <= request["k"]
