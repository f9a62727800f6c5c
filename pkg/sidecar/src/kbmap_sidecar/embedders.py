"""Embedding backends. Which one serves is a config choice (see README);
the wire protocol never depends on it."""

import re
import zlib

import numpy as np

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class HashEmbedder:
    """Hashed bag-of-words, L2-normalized. Model-free and fully
    deterministic, which makes it the default for tests and smoke runs."""

    name = "hash"

    def __init__(self, dim: int = 256):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def embed(self, texts: list[str]) -> list[list[float]]:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            for tok in _TOKEN_RE.findall(text.casefold()):
                out[i, zlib.crc32(tok.encode("utf-8")) % self.dim] += 1.0
            norm = np.linalg.norm(out[i])
            if norm == 0.0:
                out[i, 0] = 1.0
            else:
                out[i] /= norm
        return out.tolist()


class SbertEmbedder:
    """sentence-transformers backend (optional extra). Vectors are
    normalized so the service upholds the unit-norm contract."""

    def __init__(self, model_name: str):
        from sentence_transformers import SentenceTransformer

        self.name = f"sbert:{model_name}"
        self._model = SentenceTransformer(model_name)
        self.dim = self._model.get_sentence_embedding_dimension()

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            return []
        vectors = self._model.encode(texts, convert_to_numpy=True,
                                     normalize_embeddings=True,
                                     show_progress_bar=False)
        return np.asarray(vectors, dtype=np.float64).tolist()


def make_embedder(spec: str, dim: int = 256):
    if spec == "hash":
        return HashEmbedder(dim)
    if spec.startswith("sbert:"):
        return SbertEmbedder(spec.split(":", 1)[1])
    raise ValueError(f"unknown embedder {spec!r} (use 'hash' or 'sbert:<model>')")
