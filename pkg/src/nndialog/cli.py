"""Command-line entry point.

Subcommands: gen-synthetic, preprocess, train, eval, gradcheck, serve,
chat. Training options resolve as flags > config file > defaults; the
config file is flat key=value lines with # comments, keys named after
TrainingConfig fields.
"""

import argparse
import dataclasses
import json
import logging
import sys

from nndialog.errors import CheckpointError, ConfigError, CorpusError, NumericError

log = logging.getLogger("nndialog.cli")


def _load_schema(path):
    from nndialog.schema import SlotSchema, default_schema

    if path is None:
        return default_schema()
    with open(path, encoding="utf-8") as fh:
        return SlotSchema.from_json(json.load(fh))


def read_config_file(path):
    """Flat key=value lines; blank lines and # comments ignored."""
    raw = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
            key, _, value = stripped.partition("=")
            raw[key.strip()] = value.strip()
    return raw


def _coerce_training_value(name, raw):
    from nndialog.training import TrainingConfig

    types = {f.name: f.type for f in dataclasses.fields(TrainingConfig)}
    if name not in types:
        raise ConfigError(f"unknown training option {name!r}")
    if name == "head_hidden":
        return tuple(int(p) for p in str(raw).split(",") if p.strip())
    if name == "slot_weights":
        raise ConfigError("slot_weights is not settable from a config file")
    kind = types[name]
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return str(raw)


def build_training_config(args):
    """Merge defaults, then the config file, then explicit flags."""
    from nndialog.training import TrainingConfig

    values = {}
    if args.config:
        for key, raw in read_config_file(args.config).items():
            values[key] = _coerce_training_value(key, raw)
    field_names = {f.name for f in dataclasses.fields(TrainingConfig)}
    for name in field_names:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = _coerce_training_value(name, flag) if name == "head_hidden" else flag
    return TrainingConfig(**values)


def _add_training_flags(p):
    p.add_argument("--config", help="key=value options file")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--clip-norm", dest="clip_norm", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--dev-fraction", dest="dev_fraction", type=float)
    p.add_argument("--variant", choices=("base", "feed_response", "feed_slots", "feed_both"))
    p.add_argument("--word-vectors", dest="word_vectors")
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--emb-dim", dest="emb_dim", type=int)
    p.add_argument("--enc-hidden", dest="enc_hidden", type=int)
    p.add_argument("--dlg-hidden", dest="dlg_hidden", type=int)
    p.add_argument("--head-hidden", dest="head_hidden", help="comma-separated layer sizes")
    p.add_argument("--max-entities", dest="max_entities", type=int)


def make_parser():
    parser = argparse.ArgumentParser(prog="nndialog", description=__doc__)
    parser.add_argument("--quiet", action="store_true", help="only warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a KB and scripted dialog corpus")
    p.add_argument("--kb-out", required=True)
    p.add_argument("--corpus-out", required=True)
    p.add_argument("--n-dialogs", type=int, default=1000)
    p.add_argument("--n-entities", type=int, default=60)
    p.add_argument("--kb-seed", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schema", help="slot schema JSON")

    p = sub.add_parser("preprocess", help="validate a corpus and emit canonical JSONL")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("jsonl", "babi"), default="jsonl")
    p.add_argument("--lenient", action="store_true", help="skip malformed dialogs instead of failing")
    p.add_argument("--schema", help="slot schema JSON")

    p = sub.add_parser("train", help="train a model and save the best checkpoint")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--schema", help="slot schema JSON")
    _add_training_flags(p)

    p = sub.add_parser("eval", help="score a checkpoint on a corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--mode", choices=("teacher_forced", "free_running"), default="teacher_forced")
    p.add_argument("--report", help="write the full report JSON here")
    p.add_argument("--max-errors", dest="max_errors", type=int, default=200)

    p = sub.add_parser("gradcheck", help="finite-difference check of every model gradient")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--variant", choices=("base", "feed_response", "feed_slots", "feed_both"),
                   default="feed_both")
    p.add_argument("--tolerance", type=float, default=1e-4)

    p = sub.add_parser("serve", help="run the HTTP chat service")
    p.add_argument("--model", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--frontend", help="directory with the built chat UI")

    p = sub.add_parser("chat", help="talk to a checkpoint on the terminal")
    p.add_argument("--model", required=True)
    p.add_argument("--kb", required=True)

    return parser


def cmd_gen_synthetic(args):
    from nndialog.corpus import generate_kb, generate_synthetic_corpus, serialize_corpus
    from nndialog.kb import save_kb

    schema = _load_schema(args.schema)
    kb = generate_kb(seed=args.kb_seed, n_entities=args.n_entities, schema=schema)
    dialogs = generate_synthetic_corpus(kb, args.n_dialogs, seed=args.seed, schema=schema)
    save_kb(args.kb_out, kb)
    serialize_corpus(args.corpus_out, dialogs)
    print(f"wrote {len(kb.entities)} entities to {args.kb_out}")
    print(f"wrote {len(dialogs)} dialogs to {args.corpus_out}")
    return 0


def cmd_preprocess(args):
    from nndialog.corpus import parse_corpus, serialize_corpus

    schema = _load_schema(args.schema)
    dialogs = parse_corpus(args.corpus, schema, fmt=args.format, lenient=args.lenient)
    serialize_corpus(args.out, dialogs)
    print(f"wrote {len(dialogs)} dialogs to {args.out}")
    return 0


def cmd_train(args):
    from nndialog.corpus import parse_corpus
    from nndialog.kb import load_kb
    from nndialog.training import train

    schema = _load_schema(args.schema)
    tconfig = build_training_config(args)
    dialogs = parse_corpus(args.corpus, schema)
    kb = load_kb(args.kb, schema)
    bundle, history = train(tconfig, dialogs, kb, schema, args.out)
    last = history[-1]
    print(f"saved {args.out} (best epoch {last['epoch']}, train loss {last['train_loss']:.4f})")
    return 0


def cmd_eval(args):
    from nndialog.checkpoint import load_checkpoint
    from nndialog.corpus import parse_corpus
    from nndialog.evaluation import evaluate, report_text, write_report
    from nndialog.kb import load_kb

    bundle = load_checkpoint(args.model)
    dialogs = parse_corpus(args.corpus, bundle.schema)
    kb = load_kb(args.kb, bundle.schema)
    report = evaluate(bundle, dialogs, kb, mode=args.mode, max_errors=args.max_errors)
    print(report_text(report))
    if args.report:
        write_report(args.report, report, extra={"model": args.model, "corpus": args.corpus})
        print(f"report written to {args.report}")
    return 0


def cmd_gradcheck(args):
    from nndialog.gradcheck import run_gradcheck

    report = run_gradcheck(seed=args.seed, eps=args.eps, variant=args.variant)
    print(report.text())
    if report.max_rel_err >= args.tolerance:
        print(f"FAIL: max relative error {report.max_rel_err:.3e} >= {args.tolerance:g}", file=sys.stderr)
        return 1
    print(f"PASS: max relative error {report.max_rel_err:.3e} < {args.tolerance:g}")
    return 0


def _load_bundle_and_kb(args):
    from nndialog.checkpoint import load_checkpoint
    from nndialog.kb import load_kb

    bundle = load_checkpoint(args.model)
    kb = load_kb(args.kb, bundle.schema)
    return bundle, kb


def cmd_serve(args):
    import uvicorn

    from nndialog.service import create_app

    bundle, kb = _load_bundle_and_kb(args)
    app = create_app(bundle, kb, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_chat(args):
    from nndialog.session import InferenceSession

    bundle, kb = _load_bundle_and_kb(args)
    session = InferenceSession(bundle, kb)
    print("type a message, or 'quit' to leave")
    while True:
        try:
            text = input("you> ").strip()
        except EOFError:
            print()
            return 0
        if not text:
            continue
        if text in ("quit", "exit"):
            return 0
        result = session.step(text)
        if result["api_call"]:
            print(f"  [{result['api_call']} -> {result['kb_count']} matches]")
        print(f"bot> {result['system']}")


COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "serve": cmd_serve,
    "chat": cmd_chat,
}


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, CorpusError, CheckpointError, NumericError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
