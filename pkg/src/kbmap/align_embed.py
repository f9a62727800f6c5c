"""Embedding-based alignment: serialize triples to text, embed, and pair
each source triple with its nearest target under cosine distance by exact
search. Direction ``closed_to_open`` aligns each closed triple with one
open triple instead, so every closed triple appears at most once.
"""

import math
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import requests
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .alignments import Alignment, AlignmentSet, dedupe_alignments
from .normalize import tokenize
from .triples import ClosedKB, ClosedTriple, OpenKB, OpenTriple
from .validation import as_closed_kb, as_open_kb, check_positive_int

DIRECTIONS = ("open_to_closed", "closed_to_open")


class EmbeddingError(RuntimeError):
    """Provider failure; identifies the failing batch."""


def serialize_triple(t: OpenTriple | ClosedTriple) -> str:
    if isinstance(t, OpenTriple):
        return f"{t.subject}, {t.predicate}, {t.object}"
    return f"{t.subject}, {t.relation}, {t.object}"


class MockEmbedder:
    """Deterministic hashed bag-of-words embedder (crc32 token buckets,
    L2-normalized). Stands in for a sentence-embedding model in tests and
    mock pipeline runs."""

    def __init__(self, dim: int = 256):
        self.dim = check_positive_int(dim, "dim")

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            for tok in tokenize(text):
                out[i, zlib.crc32(tok.encode("utf-8")) % self.dim] += 1.0
            norm = np.linalg.norm(out[i])
            if norm == 0.0:
                out[i, 0] = 1.0
            else:
                out[i] /= norm
        return out


class HttpEmbedder:
    """Client for the sidecar POST /embed protocol."""

    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def embed(self, texts: list[str]) -> np.ndarray:
        resp = requests.post(f"{self.base_url}/embed", json={"texts": texts},
                             timeout=self.timeout)
        resp.raise_for_status()
        payload = resp.json()
        vectors = np.asarray(payload["embeddings"], dtype=np.float64)
        if vectors.shape[0] != len(texts):
            raise EmbeddingError(
                f"/embed returned {vectors.shape[0]} vectors for {len(texts)} texts")
        return vectors


def embed_unique(texts: list[str], provider, batch_size: int = 64,
                 concurrency: int = 1) -> np.ndarray:
    """Embed each distinct text once and fan results back out to the input
    positions. Output is batch-size and concurrency invariant because the
    provider contract is per-text deterministic."""
    unique: dict[str, int] = {}
    for text in texts:
        unique.setdefault(text, len(unique))
    ordered = list(unique)
    batches = [ordered[i:i + batch_size] for i in range(0, len(ordered), batch_size)]

    def run(idx_batch):
        idx, batch = idx_batch
        try:
            return provider.embed(batch)
        except Exception as exc:
            raise EmbeddingError(f"embedding batch {idx} ({len(batch)} texts) failed: {exc}") from exc

    if concurrency > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            parts = list(pool.map(run, enumerate(batches)))
    else:
        parts = [run(ib) for ib in enumerate(batches)]
    if not parts:
        return np.zeros((0, 0))
    matrix = np.vstack(parts)
    rows = [unique[text] for text in texts]
    return matrix[rows]


def exact_cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Correctly rounded 1 - a.b (clamped at 0). fsum makes the value
    independent of summation order, so any two code paths agree bit for
    bit — ties then resolve identically everywhere."""
    return max(0.0, 1.0 - math.fsum((a * b).tolist()))


def _nearest(sources: np.ndarray, targets: np.ndarray, block: int = 1024,
             margin: float = 1e-9):
    """For each source row: the nearest target index under the exact
    distance, lowest index on ties, plus that distance. The blocked matrix
    product only prunes; every candidate within ``margin`` of the BLAS
    maximum is rescored with exact_cosine_distance (BLAS rounding error is
    orders of magnitude below the margin)."""
    best_idx = np.empty(len(sources), dtype=np.int64)
    best_dist = np.empty(len(sources), dtype=np.float64)
    for lo in range(0, len(sources), block):
        sims = sources[lo:lo + block] @ targets.T
        for row in range(sims.shape[0]):
            candidates = np.nonzero(sims[row] >= sims[row].max() - margin)[0]
            dist, idx = min(
                (exact_cosine_distance(sources[lo + row], targets[j]), j)
                for j in candidates)
            best_idx[lo + row] = idx
            best_dist[lo + row] = dist
    return best_idx, best_dist


def knn_align(open_kb: OpenKB, closed_kb: ClosedKB, provider, direction: str,
              top_k: int, batch_size: int = 64, concurrency: int = 1) -> AlignmentSet:
    """Globally closest top_k (source, nearest-target) pairs.

    Sorted ascending by distance with ties broken by source input order;
    each source triple contributes at most one pair.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    check_positive_int(top_k, "top_k")
    open_kb = as_open_kb(open_kb)
    closed_kb = as_closed_kb(closed_kb)
    if not len(open_kb) or not len(closed_kb):
        raise ValueError("both KBs must be nonempty")

    open_vecs = embed_unique([serialize_triple(t) for t in open_kb], provider,
                             batch_size, concurrency)
    closed_vecs = embed_unique([serialize_triple(t) for t in closed_kb], provider,
                               batch_size, concurrency)

    if direction == "open_to_closed":
        idx, dist = _nearest(open_vecs, closed_vecs)
        method = "embed"
        pairs = [(open_kb.triples[i], closed_kb.triples[idx[i]], dist[i])
                 for i in range(len(open_kb))]
    else:
        idx, dist = _nearest(closed_vecs, open_vecs)
        method = "embed-inv"
        pairs = [(open_kb.triples[idx[i]], closed_kb.triples[i], dist[i])
                 for i in range(len(closed_kb))]

    order = sorted(range(len(pairs)), key=lambda i: (pairs[i][2], i))
    alignments = dedupe_alignments(
        Alignment(pairs[i][0], pairs[i][1], method, distance=float(pairs[i][2]))
        for i in order)
    return AlignmentSet(tuple(alignments[:top_k]), provenance=f"{method}@{top_k}")


class EmbeddingAligner(BaseEstimator, TransformerMixin):
    """fit(closed_kb) stores the target; transform(open_kb) -> AlignmentSet."""

    def __init__(self, provider=None, direction: str = "open_to_closed",
                 top_k: int = 1000, batch_size: int = 64, concurrency: int = 1):
        self.provider = provider
        self.direction = direction
        self.top_k = top_k
        self.batch_size = batch_size
        self.concurrency = concurrency

    def fit(self, closed_kb, y=None):
        self.closed_kb_ = as_closed_kb(closed_kb)
        return self

    def transform(self, open_kb) -> AlignmentSet:
        if not hasattr(self, "closed_kb_"):
            raise NotFittedError("EmbeddingAligner.fit(closed_kb) must run first")
        provider = self.provider if self.provider is not None else MockEmbedder()
        return knn_align(as_open_kb(open_kb), self.closed_kb_, provider,
                         self.direction, self.top_k, self.batch_size, self.concurrency)
