"""
Command-line entry point: ``ldner {train,tag,eval,neighbors}``.

Exit codes: 0 success, 1 runtime failure (e.g. divergence), 2 usage or
validation error, 3 embedding file does not match the model.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import evaluation, plotting
from .corpus import Dataset, format_conll, load_tagset, parse_conll, parse_tokens, split_dataset
from .embeddings import load_embeddings
from .errors import (AlignmentError, ChecksumMismatchError, ConfigError, CorpusFormatError,
                     EmbeddingFormatError, IndexFormatError, LdnerError, ModelFormatError)
from .ldn import ldn_vector, neighbors
from .trainer import (TrainConfig, check_embeddings, load_model, predict_dataset, read_config,
                      save_model, train)

log = logging.getLogger("ldner")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_MISMATCH = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc.strerror or exc}") from None


def _load_store(path):
    try:
        return load_embeddings(path)
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc.strerror or exc}") from None


def _load_model(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc.strerror or exc}") from None


def _write_report(report, report_path, losses=None, figures=True):
    evaluation.write_report_kv(report, report_path)
    if figures:
        paths = plotting.figure_paths(report_path)
        plotting.plot_f1_bars(report, paths["f1"])
        if losses:
            plotting.plot_loss_curve(losses, paths["loss"])


def cmd_train(args) -> int:
    if args.config:
        try:
            cfg, tagset = read_config(args.config)
        except OSError as exc:
            raise CliError(f"cannot open {args.config}: {exc.strerror or exc}") from None
    else:
        cfg, tagset = TrainConfig(), load_tagset(None)
    if args.tagset:
        tagset = load_tagset(args.tagset)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    data = parse_conll(_read_text(args.data), tagset)
    store = _load_store(args.embeddings)

    out = Path(args.out)
    heldout = None
    train_set = data
    if args.split is not None:
        train_set, heldout = split_dataset(data, args.split, cfg.seed)
        heldout_path = out.with_name(out.name + ".heldout.conll")
        heldout_path.write_text(format_conll(heldout), encoding="utf-8")
        log.info("split %d sentences: %d train, %d held out -> %s",
                 len(data), len(train_set), len(heldout), heldout_path)

    def on_epoch(epoch, loss):
        print(f"epoch {epoch} loss {loss:.6f}", file=sys.stderr)

    model = train(cfg, train_set, store, on_epoch=on_epoch)
    save_model(model, out)
    log.info("wrote model %s", out)

    eval_set = heldout if heldout is not None else train_set
    label = "held-out" if heldout is not None else "training-set"
    report = evaluation.score(eval_set, predict_dataset(model, store, eval_set))
    print(f"# {label} scores ({len(eval_set)} sentences)")
    sys.stdout.write(evaluation.render_report(report))
    if args.report:
        _write_report(report, args.report, model.losses, figures=not args.no_figures)
    return EXIT_OK


def cmd_tag(args) -> int:
    model = _load_model(args.model)
    store = _load_store(args.embeddings)
    check_embeddings(model, store, force=args.force)
    data = parse_tokens(_read_text(args.input), model.categories)
    tags = predict_dataset(model, store, data, force=args.force)
    text = format_conll(data, tags)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
    return EXIT_OK


def _first_divergence(gold: Dataset, pred: Dataset) -> int:
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p) or g.words != p.words:
            return i
    return min(len(gold), len(pred))


def cmd_eval(args) -> int:
    tagset = load_tagset(args.tagset)
    gold = parse_conll(_read_text(args.gold), tagset)
    pred = parse_conll(_read_text(args.pred), tagset)
    if len(gold) != len(pred) or any(g.words != p.words for g, p in zip(gold, pred)):
        raise CliError(
            f"gold and prediction are misaligned at sentence {_first_divergence(gold, pred)} "
            f"({len(gold)} vs {len(pred)} sentences)")
    report = evaluation.score(gold, [s.tags for s in pred], case_sensitive=not args.ignore_case)
    sys.stdout.write(evaluation.render_report(report))
    if args.report:
        _write_report(report, args.report, figures=not args.no_figures)
    return EXIT_OK


def cmd_neighbors(args) -> int:
    if args.k is not None and args.k < 1:
        raise CliError(f"-k must be >= 1, got {args.k}")
    model = _load_model(args.model)
    store = _load_store(args.embeddings)
    check_embeddings(model, store, force=args.force)
    index, cfg = model.index, model.ldn_config
    found = neighbors(index, store, cfg, args.token, k=args.k)
    if not found:
        print(f"{args.token}: no evidence (empty, stop word, or not in the embedding vocabulary)")
        return EXIT_OK
    order = index.category_order
    print(f"query {args.token!r}: {len(found)} nearest indexed tokens")
    for nb in found:
        hist = ", ".join(f"{c}:{n}" for c, n in index.histogram(nb.token).items() if n)
        print(f"  {nb.token:<20} {nb.similarity:+.4f}  [{hist}]")
    if args.k is not None and args.k != cfg.x:
        cfg = replace(cfg, x=args.k)
    feat = ldn_vector(index, store, cfg, args.token)
    if not feat.support:
        print("LDN distribution: no evidence")
        return EXIT_OK
    print("LDN distribution:")
    for c, p in sorted(zip(order, feat.distribution), key=lambda cp: -cp[1]):
        print(f"  {c:<16} {p:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldner", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--data", required=True, help="corpus file (token<TAB>tag)")
    p.add_argument("--embeddings", required=True, help="word vectors, text format")
    p.add_argument("--config", help="key = value training config")
    p.add_argument("--tagset", help="tag-set file, one category per line")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--split", type=float, default=None,
                   help="train fraction; the rest is held out and written to OUT.heldout.conll")
    p.add_argument("--seed", type=int, default=None, help="split and training seed")
    p.add_argument("--report", help="write key = value scores here, with figures alongside")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", help="tag tokens with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--input", required=True, help="tokens-only or corpus file")
    p.add_argument("--output", default="-")
    p.add_argument("--force", action="store_true", help="ignore an embedding checksum mismatch")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--tagset")
    p.add_argument("--report", help="write key = value scores here, with figures alongside")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--ignore-case", action="store_true", help="case-insensitive surface matching")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("neighbors", help="show the LDN neighbourhood of a token")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--token", required=True)
    p.add_argument("-k", type=int, default=None, help="neighbour count (default: model's x)")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_neighbors)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"ldner: error: {exc}", file=sys.stderr)
        return exc.code
    except ChecksumMismatchError as exc:
        print(f"ldner: error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (ConfigError, CorpusFormatError, EmbeddingFormatError, IndexFormatError,
            ModelFormatError, AlignmentError) as exc:
        print(f"ldner: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LdnerError as exc:
        print(f"ldner: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
