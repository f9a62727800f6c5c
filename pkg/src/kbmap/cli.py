"""Command line interface.

Subcommands: align-rules, align-embed, split, export-train, translate,
rank, eval, mine-rules, apply-rules, map-manual, so-report, run.

Exit codes: 0 success, 1 validation error, 2 stage failure.
"""

import argparse
import json
import logging
import sys

from .align_embed import knn_align
from .align_rule import align_rule_based
from .alignments import load_alignments, save_alignments
from .baselines.manual import load_manual_table, map_manual_kb
from .baselines.rulemine import (
    apply_rules,
    build_meta_kb,
    load_rules,
    load_taxonomy,
    mine_rules,
    save_rule_candidates,
    save_rules,
    top_predicate_tokens,
    TsvTaxonomy,
)
from .index import index_closed_kb
from .metrics import alignment_test_metrics, evaluate, so_conservation
from .pipeline import (
    ConfigError,
    StageError,
    export_training_file,
    load_config,
    make_embedder,
    make_generator,
    run,
    split_alignments,
)
from .scoring import aggregate, load_ranked_kb, save_ranked_kb
from .translate import load_generations, save_generations, translate_kb
from .triples import KBFormatError, load_closed_kb, load_open_kb, load_schema

log = logging.getLogger("kbmap")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _ks(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kbmap", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("align-rules", help="rule-based alignment")
    p.add_argument("--open", required=True)
    p.add_argument("--closed", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("align-embed", help="embedding nearest-neighbor alignment")
    p.add_argument("--open", required=True)
    p.add_argument("--closed", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--provider", default="mock", help="'mock' or sidecar base URL")
    p.add_argument("--direction", default="open_to_closed",
                   choices=["open_to_closed", "closed_to_open"])
    p.add_argument("--top-k", type=int, default=1000)
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("split", help="group-aware train/test split")
    p.add_argument("--alignments", required=True)
    p.add_argument("--ratio", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)

    p = sub.add_parser("export-train", help="write the training text file")
    p.add_argument("--alignments", required=True)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True)

    p = sub.add_parser("translate", help="generate candidate closed triples")
    p.add_argument("--open", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--generator", default="mock", help="'mock' or sidecar base URL")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rank", help="aggregate generations into a ranked KB")
    p.add_argument("--generations", required=True)
    p.add_argument("--mode", default="combined",
                   choices=["combined", "weight_only", "rank_only"])
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="evaluate a ranked KB (or an alignment split)")
    p.add_argument("--ranked")
    p.add_argument("--target")
    p.add_argument("--schema")
    p.add_argument("--exclude-train", help="alignments JSONL whose closed side is excluded")
    p.add_argument("--relative-to", help="open KB for relation-agnostic reference metrics")
    p.add_argument("--k", type=_ks, default=(10, 100, 1000, 10000))
    p.add_argument("--generations", help="with --gold: per-source ranked candidates")
    p.add_argument("--gold", help="test alignments JSONL (switches to MRR/P@K/R@K)")
    p.add_argument("--json-out")
    p.add_argument("--text-out")

    p = sub.add_parser("mine-rules", help="mine Horn rules from rule alignments")
    p.add_argument("--alignments", required=True)
    p.add_argument("--open", required=True)
    p.add_argument("--taxonomy")
    p.add_argument("--min-conf", type=float, default=0.5)
    p.add_argument("--min-support", type=int, default=20)
    p.add_argument("--top-tokens", type=int, default=100)
    p.add_argument("--isa-min-count", type=int, default=10)
    p.add_argument("--isa-max-frac", type=float, default=0.5)
    p.add_argument("--out", required=True)

    p = sub.add_parser("apply-rules", help="map an open KB with mined rules")
    p.add_argument("--rules", required=True)
    p.add_argument("--open", required=True)
    p.add_argument("--taxonomy")
    p.add_argument("--tokens-kb", help="open KB for the top-token list (default: --open)")
    p.add_argument("--top-tokens", type=int, default=100)
    p.add_argument("--out", required=True)

    p = sub.add_parser("map-manual", help="manual predicate-table baseline")
    p.add_argument("--open", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--no-fallback", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("so-report", help="subject/object conservation report")
    p.add_argument("--generations", required=True)
    p.add_argument("--json-out")

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    return parser


def _cmd_align_rules(args) -> None:
    schema = load_schema(args.schema)
    index = index_closed_kb(load_closed_kb(args.closed, schema))
    aset = align_rule_based(load_open_kb(args.open), index)
    save_alignments(aset, args.out)
    log.info("wrote %d alignments to %s", len(aset), args.out)


def _cmd_align_embed(args) -> None:
    schema = load_schema(args.schema)
    aset = knn_align(load_open_kb(args.open), load_closed_kb(args.closed, schema),
                     make_embedder(args.provider, args.dim),
                     args.direction, args.top_k, args.batch_size, args.concurrency)
    save_alignments(aset, args.out)
    log.info("wrote %d alignments to %s", len(aset), args.out)


def _cmd_split(args) -> None:
    train, test = split_alignments(load_alignments(args.alignments), args.ratio, args.seed)
    save_alignments(train, args.train_out)
    save_alignments(test, args.test_out)
    log.info("split %d train / %d test", len(train), len(test))


def _cmd_export_train(args) -> None:
    n = export_training_file(load_alignments(args.alignments), args.seed, args.out)
    log.info("wrote %d training lines to %s", n, args.out)


def _cmd_translate(args) -> None:
    schema = load_schema(args.schema)
    generations = translate_kb(load_open_kb(args.open), make_generator(args.generator, schema),
                               schema, args.k, args.batch_size, args.concurrency)
    save_generations(generations, args.out)
    log.info("wrote %d generations to %s", len(generations), args.out)


def _cmd_rank(args) -> None:
    ranked = aggregate(load_generations(args.generations), args.mode)
    save_ranked_kb(ranked, args.out)
    log.info("wrote %d ranked triples to %s", len(ranked), args.out)


def _cmd_eval(args) -> None:
    if args.gold:
        if not args.generations:
            raise ConfigError("--gold requires --generations")
        gold = load_alignments(args.gold)
        gold_by_source: dict = {}
        for a in gold:
            gold_by_source.setdefault(a.open.spo, []).append(a.closed)
        predictions: dict = {}
        for g in load_generations(args.generations):
            predictions.setdefault(g.source.spo, []).append(g.candidate)
        ks = args.k if args.k != (10, 100, 1000, 10000) else (1, 5, 10)
        result = alignment_test_metrics(predictions, gold_by_source, ks=ks)
        payload = json.dumps(
            {"mrr": result["mrr"],
             "p_at": {str(k): v for k, v in result["p_at"].items()},
             "r_at": {str(k): v for k, v in result["r_at"].items()}},
            indent=2, sort_keys=True)
        if args.json_out:
            with open(args.json_out, "w", encoding="utf-8") as fh:
                fh.write(payload + "\n")
        print(payload)
        return
    if not (args.ranked and args.target and args.schema):
        raise ConfigError("eval requires --ranked, --target and --schema (or --gold mode)")
    schema = load_schema(args.schema)
    ranked = load_ranked_kb(args.ranked, schema)
    target = load_closed_kb(args.target, schema)
    train = (load_alignments(args.exclude_train).closed_triples()
             if args.exclude_train else None)
    open_kb = load_open_kb(args.relative_to) if args.relative_to else None
    report = evaluate(ranked, target.triples, train=train, ks=args.k, open_kb=open_kb)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    if args.text_out:
        with open(args.text_out, "w", encoding="utf-8") as fh:
            fh.write(report.to_text() + "\n")
    print(report.to_text())


def _cmd_mine_rules(args) -> None:
    taxonomy = load_taxonomy(args.taxonomy) if args.taxonomy else TsvTaxonomy({})
    meta = build_meta_kb(load_alignments(args.alignments), taxonomy,
                         load_open_kb(args.open), args.isa_min_count,
                         args.isa_max_frac, args.top_tokens)
    rules = mine_rules(meta, args.min_conf, args.min_support)
    save_rules(rules, args.out)
    log.info("mined %d rules from %d mappings", len(rules), len(meta))


def _cmd_apply_rules(args) -> None:
    taxonomy = load_taxonomy(args.taxonomy) if args.taxonomy else TsvTaxonomy({})
    open_kb = load_open_kb(args.open)
    tokens_kb = load_open_kb(args.tokens_kb) if args.tokens_kb else open_kb
    top_tokens = top_predicate_tokens(tokens_kb, args.top_tokens)
    candidates = apply_rules(load_rules(args.rules), open_kb, taxonomy, top_tokens)
    save_rule_candidates(candidates, args.out)
    log.info("wrote %d rule candidates to %s", len(candidates), args.out)


def _cmd_map_manual(args) -> None:
    schema = load_schema(args.schema)
    table = load_manual_table(args.table, schema)
    generations, coverage = map_manual_kb(load_open_kb(args.open), table,
                                          use_fallback=not args.no_fallback)
    save_generations(generations, args.out)
    print(f"table coverage: {coverage:.4f}")
    log.info("wrote %d mapped triples to %s", len(generations), args.out)


def _cmd_so_report(args) -> None:
    report = so_conservation(load_generations(args.generations))
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    print(report.to_text())


def _cmd_run(args) -> None:
    cfg = load_config(args.config, overrides=args.set)
    manifest = run(cfg)
    print(json.dumps(manifest, indent=2, sort_keys=True))


_COMMANDS = {
    "align-rules": _cmd_align_rules,
    "align-embed": _cmd_align_embed,
    "split": _cmd_split,
    "export-train": _cmd_export_train,
    "translate": _cmd_translate,
    "rank": _cmd_rank,
    "eval": _cmd_eval,
    "mine-rules": _cmd_mine_rules,
    "apply-rules": _cmd_apply_rules,
    "map-manual": _cmd_map_manual,
    "so-report": _cmd_so_report,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _COMMANDS[args.command](args)
    except (ConfigError, KBFormatError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return 1
    except StageError as exc:
        log.error("%s", exc)
        return 2
    except ValueError as exc:
        log.error("%s", exc)
        return 1
    except Exception as exc:  # stage-level failure
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
