"""Sidecar command line: serve, finetune, export-taxonomy."""

import argparse
import json
import logging
import sys


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kbmap-sidecar", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8754)
    p.add_argument("--embedder", default="hash", help="hash | sbert:<model>")
    p.add_argument("--dim", type=int, default=256, help="hash embedder dimension")
    p.add_argument("--generator", default="template", help="template | checkpoint:<path>")

    p = sub.add_parser("finetune", help="train the toy translator")
    p.add_argument("--train-file", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--holdout", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=3e-3)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("export-taxonomy", help="write a term/hypernym TSV")
    p.add_argument("--out", required=True)
    p.add_argument("--source", default="bundled", choices=["bundled", "wordnet"])
    p.add_argument("--terms", help="terms file (required for --source wordnet)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "serve":
            import uvicorn

            from .app import create_app
            from .embedders import make_embedder
            from .generators import make_generator

            app = create_app(make_embedder(args.embedder, args.dim),
                             make_generator(args.generator))
            uvicorn.run(app, host=args.host, port=args.port)
        elif args.command == "finetune":
            from .finetune import finetune

            report = finetune(args.train_file, args.out_dir, epochs=args.epochs,
                              holdout_fraction=args.holdout, batch_size=args.batch_size,
                              lr=args.lr, seed=args.seed)
            print(json.dumps(report, indent=2))
        else:
            from .taxonomy import export_taxonomy

            rows = export_taxonomy(args.out, source=args.source, terms_file=args.terms)
            print(f"wrote {rows} rows to {args.out}")
    except Exception as exc:
        logging.getLogger("kbmap-sidecar").error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
