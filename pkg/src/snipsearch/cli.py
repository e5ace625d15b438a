"""Command-line entry points for every pipeline stage.

Thin argument-parsing layer: each subcommand loads its inputs, calls into
the library, and writes artifacts. Exit status 0 on success, 1 on usage
errors, 2 on data errors (malformed files, inconsistent inputs).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .artifacts import build_bundle, load_bundle
from .bench import (
    evaluate,
    load_ground_truth,
    render_report_jsonl,
    render_text_table,
)
from .corpus import load_collection, save_collection
from .embed import (
    NBOW_TRAIN_SPEC,
    NCS_TRAIN_SPEC,
    TrainSpec,
    load_table,
    save_table,
    train_embeddings,
)
from .encoders import MarginSpec, UnifEncoder, save_unif_params, train_unif
from .errors import DataError
from .index import EnsembleSpec, build_index, search
from .miner import (
    build_ground_truth,
    group_duplicates,
    load_edges,
    load_posts,
    load_training_pairs,
    mine_snippets,
    post_to_snippet_ids,
    python_grammar_validator,
    sample_training_pairs,
    save_training_pairs,
)
from .pipelines import index_search_fn, multimodal_pairs
from .tuner import TrainableNbowEncoder, TuneSpec, save_head, train_duplicate_head

PROG = "snipsearch"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with status 1 on usage errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _scan_global_seed(argv: list[str]) -> str | None:
    """A --seed given before the subcommand becomes every command's default."""
    i = 0
    while i < len(argv):
        arg = argv[i]
        if not arg.startswith("-"):
            break  # subcommand reached
        if arg == "--seed" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--seed="):
            return arg.split("=", 1)[1]
        if arg in ("--config",):
            i += 1  # skip the option value
        i += 1
    return None


def _load_config(argv: list[str]) -> dict[str, str]:
    """Pre-scan for --config and read its flat key=value entries."""
    path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif arg.startswith("--config="):
            path = arg.split("=", 1)[1]
    if path is None:
        return {}
    config: dict[str, str] = {}
    try:
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DataError(f"{path}:{lineno}: expected key=value")
            config[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    return config


def _apply_config(parser: argparse.ArgumentParser, config: dict[str, str]) -> None:
    """Use config entries as defaults for matching options."""
    known = {
        action.dest: action.type
        for action in parser._actions
        if action.dest != argparse.SUPPRESS
    }
    overrides = {}
    for key, raw in config.items():
        if key not in known:
            continue
        cast = known[key]
        overrides[key] = cast(raw) if callable(cast) else raw
    parser.set_defaults(**overrides)


def _build_parser(config: dict[str, str]) -> _Parser:
    parser = _Parser(prog=PROG, description="Annotated code snippet search engine.")
    parser.add_argument("--config", help="flat key=value defaults file", default=None)
    parser.add_argument(
        "--seed", dest="global_seed", type=int, default=None,
        help="default seed for all subcommands",
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("ingest", help="mine a posts dump into a snippet collection")
    p.add_argument("--posts", required=True)
    p.add_argument("--tags", help="comma-separated tag whitelist")
    p.add_argument("--tags-file", help="file with one tag per line")
    p.add_argument("--per-tag-cap", type=int, default=250)
    p.add_argument("--per-post-cap", type=int, default=2)
    p.add_argument("--grammar", action="store_true", help="require full-grammar parse")
    p.add_argument("--out", required=True)

    p = sub.add_parser("mine-duplicates", help="ground truth + training pairs from duplicates")
    p.add_argument("--edges", required=True, help="TSV of duplicate post id pairs")
    p.add_argument("--posts", required=True)
    p.add_argument("--snippets", required=True)
    p.add_argument("--out-ground-truth")
    p.add_argument("--out-pairs")
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--max-overlap", type=float, default=None)
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("build-corpus", help="embedding training corpus from snippets")
    p.add_argument("--snippets", required=True)
    p.add_argument("--mode", choices=("nbow", "ncs"), default="ncs")
    p.add_argument("--no-augment", action="store_true", help="disable context augmentation")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-embeddings", help="train subword skip-gram embeddings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--preset", choices=("nbow", "ncs", "base"), default="base")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--negatives", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--min-count", type=int, default=None)
    p.add_argument("--buckets", type=int, default=None)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-unif", help="train the attention-pooled code encoder")
    p.add_argument("--snippets", required=True)
    p.add_argument("--init", required=True, help="initial embedding table")
    p.add_argument("--margin", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--negatives", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--val-queries", help="ground-truth file for per-epoch validation")
    p.add_argument("--out", required=True)

    p = sub.add_parser("finetune", help="duplicate-title fine-tuning of word vectors")
    p.add_argument("--pairs", required=True, help="training pairs file")
    p.add_argument("--table", required=True, help="embedding table to tune")
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--eval-every", type=int, default=51_200)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--val-queries", help="ground-truth file for validation")
    p.add_argument("--val-snippets", help="collection the validation queries refer to")
    p.add_argument("--out-table", required=True)
    p.add_argument("--out-head", required=True)

    p = sub.add_parser("build-index", help="build the ensemble snippet index")
    p.add_argument("--snippets", required=True)
    p.add_argument("--desc", default="none", help="nbow:PATH | external:PATH | none")
    p.add_argument("--code", default="none", help="ncs:PATH | unif:PATH | none")
    p.add_argument("--lambda-desc", type=float, default=1.0)
    p.add_argument("--lambda-code", type=float, default=0.5)
    p.add_argument("--out", required=True)

    p = sub.add_parser("search", help="query a built index")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--show-code", action="store_true")

    p = sub.add_parser("eval", help="evaluate a built index against ground truth")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--model", default=None, help="model name in the report")
    p.add_argument("--json", dest="json_out", default=None, help="write machine-readable report")

    p = sub.add_parser("serve", help="run the HTTP search service")
    p.add_argument("--index", required=True)
    p.add_argument("--bind", default="127.0.0.1:8080", help="host:port")
    p.add_argument("--cors", default=None, help="comma-separated allowed origins")
    p.add_argument("--ui-dir", default=None, help="static frontend directory to mount")

    for action in sub.choices.values():
        _apply_config(action, config)
    return parser


def _cmd_ingest(args) -> int:
    tags: set[str] = set()
    if args.tags:
        tags.update(t.strip() for t in args.tags.split(",") if t.strip())
    if args.tags_file:
        for line in Path(args.tags_file).read_text(encoding="utf-8").splitlines():
            if line.strip() and not line.startswith("#"):
                tags.add(line.strip())
    posts = load_posts(args.posts)
    validator = python_grammar_validator if args.grammar else None
    collection = mine_snippets(
        posts,
        tags,
        per_tag_cap=args.per_tag_cap,
        per_post_cap=args.per_post_cap,
        validator=validator,
    )
    save_collection(collection, args.out)
    print(f"wrote {len(collection)} snippets to {args.out}")
    return 0


def _cmd_mine_duplicates(args) -> int:
    edges = load_edges(args.edges)
    posts = load_posts(args.posts)
    titles = {p.id: p.title for p in posts}
    collection = load_collection(args.snippets)
    groups = group_duplicates(edges)
    print(f"{len(groups)} duplicate groups from {len(edges)} edges")
    if args.out_ground_truth:
        queries = build_ground_truth(
            groups,
            collection,
            post_to_snippet_ids(collection),
            titles,
            max_overlap=args.max_overlap,
        )
        from .bench import save_ground_truth

        save_ground_truth(queries, args.out_ground_truth)
        print(f"wrote {len(queries)} ground-truth queries to {args.out_ground_truth}")
    if args.out_pairs:
        pairs = sample_training_pairs(groups, titles, args.negatives, seed=args.seed)
        save_training_pairs(pairs, args.out_pairs)
        print(f"wrote {len(pairs)} training pairs to {args.out_pairs}")
    return 0


def _cmd_build_corpus(args) -> int:
    collection = load_collection(args.snippets)
    if args.mode == "nbow":
        from .pipelines import description_lines

        lines = description_lines(collection)
    else:
        from .pipelines import multimodal_lines

        lines = multimodal_lines(collection, augment=not args.no_augment)
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} lines to {args.out}")
    return 0


def _cmd_train_embeddings(args) -> int:
    base = {"nbow": NBOW_TRAIN_SPEC, "ncs": NCS_TRAIN_SPEC, "base": TrainSpec()}[args.preset]
    overrides = {}
    for field, attr in (
        ("dim", "dim"),
        ("epochs", "epochs"),
        ("window", "window"),
        ("negatives", "negatives"),
        ("learning_rate", "learning_rate"),
        ("min_count", "min_count"),
        ("buckets", "bucket_count"),
    ):
        value = getattr(args, field)
        if value is not None:
            overrides[attr] = value
    spec = replace(base, seed=args.seed, **overrides)
    corpus = [
        line
        for line in Path(args.corpus).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    table = train_embeddings(corpus, spec)
    save_table(table, args.out)
    print(f"trained {len(table.vocab)} vectors (dim {table.dim}) -> {args.out}")
    return 0


def _unif_validation_hook(collection, queries):
    def hook(params) -> float:
        encoder = UnifEncoder(params=params)
        idx = build_index(collection, EnsembleSpec(0.0, 1.0, None, encoder))
        report = evaluate(index_search_fn(idx), queries, collection_ids=collection.ids())
        return report.mrr

    return hook


def _cmd_train_unif(args) -> int:
    collection = load_collection(args.snippets)
    init = load_table(args.init)
    spec = MarginSpec(
        margin=args.margin,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        negatives_per_positive=args.negatives,
        seed=args.seed,
    )
    validation = None
    if args.val_queries:
        validation = _unif_validation_hook(collection, load_ground_truth(args.val_queries))
    params = train_unif(multimodal_pairs(collection), init, spec, validation=validation)
    save_unif_params(params, args.out)
    print(f"wrote UNIF parameters to {args.out}")
    return 0


def _cmd_finetune(args) -> int:
    pairs = load_training_pairs(args.pairs)
    table = load_table(args.table)
    encoder = TrainableNbowEncoder(table)
    spec = TuneSpec(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        eval_every=args.eval_every,
        seed=args.seed,
    )
    validation = None
    if args.val_queries:
        if not args.val_snippets:
            raise DataError("--val-queries requires --val-snippets")
        val_collection = load_collection(args.val_snippets)
        val_queries = load_ground_truth(args.val_queries)

        def validation(enc, head) -> float:
            idx = build_index(val_collection, EnsembleSpec(1.0, 0.0, enc, None))
            report = evaluate(
                index_search_fn(idx), val_queries, collection_ids=val_collection.ids()
            )
            return report.mrr

    encoder, head = train_duplicate_head(encoder, pairs, spec, validation=validation)
    save_table(encoder.finalized_table(), args.out_table)
    save_head(head, args.out_head)
    print(f"wrote tuned table to {args.out_table} and head to {args.out_head}")
    return 0


def _cmd_build_index(args) -> int:
    index = build_bundle(
        collection_path=args.snippets,
        desc_spec=args.desc,
        code_spec=args.code,
        lambda_desc=args.lambda_desc,
        lambda_code=args.lambda_code,
        out_path=args.out,
    )
    print(f"indexed {len(index)} snippets -> {args.out}")
    if index.excluded_ids:
        print(f"excluded {len(index.excluded_ids)} snippets with no encodable half")
    return 0


def _cmd_search(args) -> int:
    if args.k < 1:
        raise DataError("k must be >= 1")
    index, collection = load_bundle(args.index)
    by_id = {s.id: s for s in collection}
    outcome = search(index, args.query, args.k)
    if outcome.empty_encoding:
        print("query could not be encoded by any model half (no results)")
        return 0
    for rank, (snippet_id, score) in enumerate(outcome.results, start=1):
        snippet = by_id.get(snippet_id)
        description = snippet.description if snippet else "?"
        print(f"{rank:3d}  {score:8.4f}  {snippet_id:12s}  {description}")
        if args.show_code and snippet:
            for line in snippet.code.rstrip("\n").split("\n"):
                print(f"     | {line}")
    return 0


def _cmd_eval(args) -> int:
    index, collection = load_bundle(args.index)
    queries = load_ground_truth(args.queries)
    model = args.model or Path(args.index).stem
    report = evaluate(
        index_search_fn(index),
        queries,
        collection_ids=collection.ids(),
        model=model,
        collection=collection.name,
    )
    print(render_text_table([report]), end="")
    if args.json_out:
        Path(args.json_out).write_text(render_report_jsonl([report]), encoding="utf-8")
        print(f"wrote machine-readable report to {args.json_out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import SearchEngine, create_app

    index, collection = load_bundle(args.index)
    engine = SearchEngine.create(index, collection)
    host, sep, port = args.bind.rpartition(":")
    if not sep or not port.isdigit():
        raise DataError(f"bad --bind value {args.bind!r}; expected host:port")
    cors = [o.strip() for o in args.cors.split(",")] if args.cors else None
    app = create_app(engine, cors_origins=cors, ui_dir=args.ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "mine-duplicates": _cmd_mine_duplicates,
    "build-corpus": _cmd_build_corpus,
    "train-embeddings": _cmd_train_embeddings,
    "train-unif": _cmd_train_unif,
    "finetune": _cmd_finetune,
    "build-index": _cmd_build_index,
    "search": _cmd_search,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        config = _load_config(argv)
        global_seed = _scan_global_seed(argv)
        if global_seed is not None:
            config["seed"] = global_seed
        parser = _build_parser(config)
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return 1
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"{PROG}: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{PROG}: data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
