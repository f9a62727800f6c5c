"""Generative translation step: format training examples, collect top-K
candidates per open triple from a pluggable generator, and parse/filter
them into schema-valid closed triples.

Wire format of one training example (and one generation):

    subject, predicate, object [SEP] subject, Relation, object

Parsing takes the text after the last [SEP] (the whole string when absent),
bounds the relation field with the first and last ", " delimiter, and keeps
only candidates whose middle field is a schema relation.
"""

import json
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import requests
from sklearn.base import BaseEstimator, TransformerMixin

from .align_embed import serialize_triple
from .alignments import Alignment
from .normalize import normalize_phrase
from .triples import ClosedTriple, OpenKB, OpenTriple, RelationSchema
from .validation import as_open_kb, check_positive_int

SEP = "[SEP]"


@dataclass(frozen=True)
class GenCandidate:
    text: str
    score: float
    rank: int


@dataclass(frozen=True)
class Rejection:
    reason: str  # arity | unknown_relation | empty_field


@dataclass(frozen=True)
class Generation:
    source: OpenTriple
    candidate: ClosedTriple
    rank: int
    gen_score: float


class GenerationError(RuntimeError):
    """Generator failure; identifies the failing batch."""


def format_training_example(a: Alignment) -> str:
    return f"{serialize_triple(a.open)} {SEP} {serialize_triple(a.closed)}"


def make_prompt(t: OpenTriple) -> str:
    return f"{serialize_triple(t)} {SEP} "


def parse_generation(text: str, schema: RelationSchema) -> ClosedTriple | Rejection:
    candidate = text.rsplit(SEP, 1)[-1].strip()
    first = candidate.find(", ")
    last = candidate.rfind(", ")
    if first < 0 or last == first:
        return Rejection("arity")
    subject = candidate[:first]
    relation = candidate[first + 2:last]
    obj = candidate[last + 2:]
    if not subject.strip() or not relation.strip() or not obj.strip():
        return Rejection("empty_field")
    if relation not in schema:
        return Rejection("unknown_relation")
    return ClosedTriple(subject, relation, obj)


def filter_generations(source: OpenTriple,
                       parsed: list[tuple[ClosedTriple, int, float]]) -> list[Generation]:
    """Drop candidates whose normalized subject equals the normalized
    object, then exact duplicates keeping the lowest rank. Ranks are
    preserved, not re-compacted."""
    out: list[Generation] = []
    seen: set[ClosedTriple] = set()
    for triple, rank, score in sorted(parsed, key=lambda item: item[1]):
        if normalize_phrase(triple.subject).tokens == normalize_phrase(triple.object).tokens:
            continue
        if triple in seen:
            continue
        seen.add(triple)
        out.append(Generation(source, triple, rank, score))
    return out


class MockGenerator:
    """Deterministic template generator: rank 0 restates the predicate
    inside the object under a fixed relation, later ranks vary relation and
    argument shape by a stable hash of the prompt."""

    def __init__(self, relations, echo_relation: str = "CapableOf"):
        self.relations = tuple(relations)
        if not self.relations:
            raise ValueError("need at least one relation")
        self.echo_relation = (echo_relation if echo_relation in self.relations
                              else self.relations[0])

    def _parse_prompt(self, prompt: str) -> tuple[str, str, str]:
        left = prompt.rsplit(SEP, 1)[0].strip()
        first, last = left.find(", "), left.rfind(", ")
        if first < 0 or last == first:
            return (left or "thing", "relate", left or "thing")
        return (left[:first], left[first + 2:last], left[last + 2:])

    def generate(self, prompts: list[str], k: int) -> list[list[GenCandidate]]:
        check_positive_int(k, "k")
        out = []
        for prompt in prompts:
            s, p, o = self._parse_prompt(prompt)
            candidates = []
            for rank in range(k):
                h = zlib.crc32(f"{prompt}|{rank}".encode("utf-8"))
                if rank == 0:
                    text = f"{s}, {self.echo_relation}, {p} {o}"
                else:
                    rel = self.relations[h % len(self.relations)]
                    style = (h >> 8) % 3
                    if style == 0:
                        text = f"{s}, {rel}, {o}"
                    elif style == 1:
                        text = f"{o}, {rel}, {s}"
                    else:
                        text = f"{s}, {rel}, {p} {o}"
                score = round(1.0 - rank * 0.05 - (h % 97) / 10000.0, 6)
                candidates.append(GenCandidate(text, score, rank))
            out.append(candidates)
        return out


class HttpGenerator:
    """Client for the sidecar POST /generate protocol."""

    def __init__(self, base_url: str, timeout: float = 300.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def generate(self, prompts: list[str], k: int) -> list[list[GenCandidate]]:
        resp = requests.post(f"{self.base_url}/generate",
                             json={"prompts": prompts, "k": k}, timeout=self.timeout)
        resp.raise_for_status()
        payload = resp.json()
        out = []
        for per_prompt in payload["results"]:
            out.append([GenCandidate(c["text"], float(c["score"]), int(c["rank"]))
                        for c in per_prompt["candidates"]])
        return out


def translate_kb(open_kb: OpenKB, generator, schema: RelationSchema, k: int,
                 batch_size: int = 64, concurrency: int = 1) -> list[Generation]:
    """Prompt the generator for every open triple, parse and filter its
    candidates, and concatenate results in open-KB input order. A failed
    batch aborts the whole call; partial results are never returned."""
    check_positive_int(k, "k")
    open_kb = as_open_kb(open_kb)
    prompts = [make_prompt(t) for t in open_kb]
    batches = [(i, prompts[i:i + batch_size]) for i in range(0, len(prompts), batch_size)]

    def run(batch):
        start, chunk = batch
        try:
            result = generator.generate(chunk, k)
        except Exception as exc:
            raise GenerationError(
                f"generation batch at offset {start} ({len(chunk)} prompts) failed: {exc}"
            ) from exc
        if len(result) != len(chunk):
            raise GenerationError(
                f"generation batch at offset {start}: got {len(result)} results "
                f"for {len(chunk)} prompts")
        return result

    if concurrency > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            parts = list(pool.map(run, batches))
    else:
        parts = [run(b) for b in batches]

    per_prompt: list[list[GenCandidate]] = [c for part in parts for c in part]
    out: list[Generation] = []
    for triple, candidates in zip(open_kb, per_prompt):
        parsed = []
        for cand in candidates:
            result = parse_generation(cand.text, schema)
            if isinstance(result, ClosedTriple):
                parsed.append((result, cand.rank, cand.score))
        out.extend(filter_generations(triple, parsed))
    return out


def save_generations(generations: list[Generation], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for g in generations:
            rec = {
                "source": {"s": g.source.subject, "p": g.source.predicate,
                           "o": g.source.object, "score": g.source.score},
                "candidate": {"s": g.candidate.subject, "r": g.candidate.relation,
                              "o": g.candidate.object},
                "rank": g.rank,
                "gen_score": g.gen_score,
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_generations(path) -> list[Generation]:
    out = []
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        out.append(Generation(
            source=OpenTriple(rec["source"]["s"], rec["source"]["p"],
                              rec["source"]["o"], rec["source"].get("score", 1.0)),
            candidate=ClosedTriple(rec["candidate"]["s"], rec["candidate"]["r"],
                                   rec["candidate"]["o"]),
            rank=int(rec["rank"]),
            gen_score=float(rec["gen_score"]),
        ))
    return out


class TripleTranslator(BaseEstimator, TransformerMixin):
    """Stateless transform: open KB -> list of Generation."""

    def __init__(self, generator=None, schema=None, k: int = 10,
                 batch_size: int = 64, concurrency: int = 1):
        self.generator = generator
        self.schema = schema
        self.k = k
        self.batch_size = batch_size
        self.concurrency = concurrency

    def fit(self, X=None, y=None):
        return self

    def transform(self, open_kb) -> list[Generation]:
        if self.schema is None:
            raise ValueError("TripleTranslator requires a schema")
        generator = (self.generator if self.generator is not None
                     else MockGenerator(self.schema.relations))
        return translate_kb(as_open_kb(open_kb), generator, self.schema, self.k,
                            self.batch_size, self.concurrency)
