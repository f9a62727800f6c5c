"""End-to-end orchestration: flat key=value config, alignment split,
training-file export, and the staged run (align, split, export, translate,
rank, eval) with a checksum manifest.

Reruns reuse a stage's artifacts when they already exist and the manifest
records the same config hash, so deleting downstream artifacts resumes the
pipeline from its inputs.
"""

import hashlib
import json
import logging
import math
import random
from dataclasses import dataclass, fields
from pathlib import Path

from .align_embed import HttpEmbedder, MockEmbedder, knn_align
from .align_rule import align_rule_based
from .alignments import AlignmentSet, load_alignments, save_alignments
from .index import index_closed_kb
from .metrics import evaluate
from .scoring import aggregate, load_ranked_kb, save_ranked_kb
from .translate import (
    HttpGenerator,
    MockGenerator,
    format_training_example,
    load_generations,
    save_generations,
    translate_kb,
)
from .triples import load_closed_kb, load_open_kb, load_schema
from .validation import check_ratio

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    open_kb: str = ""
    closed_kb: str = ""
    schema: str = ""
    out_dir: str = "out"
    align_method: str = "rule"          # rule | embed | embed-inv
    align_top_k: int = 1000
    embedder: str = "mock"              # mock | http(s) URL
    embed_dim: int = 256
    generator: str = "mock"             # mock | http(s) URL
    generations: int = 10
    score_mode: str = "combined"
    split_ratio: float = 0.9
    seed: int = 13
    batch_size: int = 64
    concurrency: int = 1
    eval_ks: tuple[int, ...] = (10, 100, 1000, 10000)

    # Keys that change results; concurrency/batching/out_dir do not.
    SEMANTIC = ("open_kb", "closed_kb", "schema", "align_method", "align_top_k",
                "embedder", "embed_dim", "generator", "generations", "score_mode",
                "split_ratio", "seed", "eval_ks")

    def config_hash(self) -> str:
        canon = "\n".join(f"{k}={getattr(self, k)!r}" for k in self.SEMANTIC)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def validate(self) -> None:
        for key in ("open_kb", "closed_kb", "schema"):
            value = getattr(self, key)
            if not value:
                raise ConfigError(f"config key {key!r} is required")
            if not Path(value).is_file():
                raise ConfigError(f"{key} file not found: {value}")
        if self.align_method not in ("rule", "embed", "embed-inv"):
            raise ConfigError(f"unknown align_method {self.align_method!r}")
        if self.score_mode not in ("combined", "weight_only", "rank_only"):
            raise ConfigError(f"unknown score_mode {self.score_mode!r}")
        try:
            check_ratio(self.split_ratio, "split_ratio")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for key in ("align_top_k", "embed_dim", "generations", "batch_size", "concurrency"):
            if int(getattr(self, key)) <= 0:
                raise ConfigError(f"{key} must be positive")


_INT_KEYS = {"align_top_k", "embed_dim", "generations", "seed", "batch_size", "concurrency"}


def parse_config_value(key: str, value: str):
    if key in _INT_KEYS:
        return int(value)
    if key == "split_ratio":
        return float(value)
    if key == "eval_ks":
        return tuple(int(v) for v in value.replace(",", " ").split())
    return value


def load_config(path, overrides=()) -> PipelineConfig:
    known = {f.name for f in fields(PipelineConfig)}
    cfg = PipelineConfig()
    lines = Path(path).read_text("utf-8").splitlines() if path else []
    pairs = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, value = item.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    for key, value in pairs:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            setattr(cfg, key, parse_config_value(key, value))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    return cfg


def split_alignments(aset: AlignmentSet, ratio: float, seed: int
                     ) -> tuple[AlignmentSet, AlignmentSet]:
    """Deterministic group split: alignments are grouped by their open
    triple's (s, p, o), group keys are shuffled with random.Random(seed)
    (Mersenne Twister Fisher-Yates), and the first ceil(ratio * groups) go
    to train. Original alignment order is preserved within each side."""
    check_ratio(ratio, "ratio")
    if not len(aset):
        raise ValueError("cannot split an empty alignment set")
    keys = []
    seen = set()
    for a in aset:
        key = a.open.spo
        if key not in seen:
            seen.add(key)
            keys.append(key)
    rng = random.Random(seed)
    rng.shuffle(keys)
    train_keys = set(keys[:math.ceil(ratio * len(keys))])
    train = tuple(a for a in aset if a.open.spo in train_keys)
    test = tuple(a for a in aset if a.open.spo not in train_keys)
    return (AlignmentSet(train, provenance=aset.provenance),
            AlignmentSet(test, provenance=aset.provenance))


def export_training_file(aset: AlignmentSet, seed: int, path) -> int:
    lines = [format_training_example(a) for a in aset]
    random.Random(seed).shuffle(lines)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
    return len(lines)


def make_embedder(spec: str, dim: int):
    if spec == "mock":
        return MockEmbedder(dim)
    if spec.startswith(("http://", "https://")):
        return HttpEmbedder(spec)
    raise ConfigError(f"embedder must be 'mock' or an http(s) URL, got {spec!r}")


def make_generator(spec: str, schema):
    if spec == "mock":
        return MockGenerator(schema.relations)
    if spec.startswith(("http://", "https://")):
        return HttpGenerator(spec)
    raise ConfigError(f"generator must be 'mock' or an http(s) URL, got {spec!r}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: PipelineConfig) -> dict:
    """Execute every stage in order, writing each artifact before the next
    stage reads it. Returns the manifest dict (also written to disk)."""
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "alignments": out / "alignments.jsonl",
        "train_alignments": out / "train_alignments.jsonl",
        "test_alignments": out / "test_alignments.jsonl",
        "train_file": out / "train.txt",
        "generations": out / "generations.jsonl",
        "ranked": out / "ranked.tsv",
        "eval_json": out / "eval.json",
        "eval_text": out / "eval.txt",
    }
    manifest_path = out / "manifest.json"
    config_hash = cfg.config_hash()
    reusable = False
    if manifest_path.is_file():
        try:
            reusable = json.loads(manifest_path.read_text("utf-8"))["config_hash"] == config_hash
        except (ValueError, KeyError):
            reusable = False

    def fresh(*keys) -> bool:
        return reusable and all(paths[k].is_file() for k in keys)

    schema = load_schema(cfg.schema)
    open_kb = load_open_kb(cfg.open_kb)
    closed_kb = load_closed_kb(cfg.closed_kb, schema)

    def stage(name, outputs, fn):
        if fresh(*outputs):
            log.info("stage %s: reusing existing artifacts", name)
            return
        log.info("stage %s: running", name)
        try:
            fn()
        except (ConfigError,):
            raise
        except Exception as exc:
            raise StageError(f"stage {name} failed: {exc}") from exc

    def do_align():
        if cfg.align_method == "rule":
            aset = align_rule_based(open_kb, index_closed_kb(closed_kb))
        else:
            direction = "open_to_closed" if cfg.align_method == "embed" else "closed_to_open"
            aset = knn_align(open_kb, closed_kb, make_embedder(cfg.embedder, cfg.embed_dim),
                             direction, cfg.align_top_k, cfg.batch_size, cfg.concurrency)
        save_alignments(aset, paths["alignments"])

    def do_split():
        aset = load_alignments(paths["alignments"])
        train, test = split_alignments(aset, cfg.split_ratio, cfg.seed)
        save_alignments(train, paths["train_alignments"])
        save_alignments(test, paths["test_alignments"])

    def do_export():
        train = load_alignments(paths["train_alignments"])
        export_training_file(train, cfg.seed, paths["train_file"])

    def do_translate():
        generations = translate_kb(open_kb, make_generator(cfg.generator, schema), schema,
                                   cfg.generations, cfg.batch_size, cfg.concurrency)
        save_generations(generations, paths["generations"])

    def do_rank():
        ranked = aggregate(load_generations(paths["generations"]), cfg.score_mode)
        save_ranked_kb(ranked, paths["ranked"])

    def do_eval():
        ranked = load_ranked_kb(paths["ranked"], schema, cfg.score_mode)
        train = load_alignments(paths["train_alignments"])
        report = evaluate(ranked, closed_kb.triples, train=train.closed_triples(),
                          ks=cfg.eval_ks, open_kb=open_kb)
        paths["eval_json"].write_text(report.to_json() + "\n", "utf-8")
        paths["eval_text"].write_text(report.to_text() + "\n", "utf-8")

    stage("align", ("alignments",), do_align)
    stage("split", ("train_alignments", "test_alignments"), do_split)
    stage("export-train", ("train_file",), do_export)
    stage("translate", ("generations",), do_translate)
    stage("rank", ("ranked",), do_rank)
    stage("eval", ("eval_json", "eval_text"), do_eval)

    manifest = {
        "config_hash": config_hash,
        "artifacts": {name: _sha256(path) for name, path in sorted(paths.items())},
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")
    return manifest
