"""Command-line surface tying the pipeline together.

Subcommands: ``ingest``, ``learn``, ``match``, ``train``, ``distant-train``,
``eval``.  Every source of randomness is surfaced as ``--seed``; commands
are idempotent given identical flags and seeds (byte-identical outputs).

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path
from random import Random
from typing import Sequence

from . import classifier, corpus, evaluation, gp, pattern
from .corpus import FeedbackType
from .gazetteer import GazetteerFormatError, load_gazetteer

log = logging.getLogger(__name__)

_VALIDATION_ERRORS = (
    corpus.CorpusFormatError,
    GazetteerFormatError,
    pattern.PatternInvariantError,
    pattern.DslSyntaxError,
    gp.GpError,
    FileNotFoundError,
    ValueError,
)


def _task(value: str) -> FeedbackType:
    return FeedbackType(value)


def _gp_config(args) -> gp.GpConfig:
    overrides = {
        "rng_seed": getattr(args, "seed", None),
        "max_generations": getattr(args, "max_generations", None),
        "population_size": getattr(args, "population_size", None),
    }
    if getattr(args, "config", None):
        return gp.load_gp_config(args.config, **overrides)
    return gp.GpConfig(**{k: v for k, v in overrides.items() if v is not None})


def _svm_params(args) -> classifier.SvmParams:
    kwargs = {}
    if getattr(args, "seed", None) is not None:
        kwargs["seed"] = args.seed
    if getattr(args, "epochs", None) is not None:
        kwargs["epochs"] = args.epochs
    if getattr(args, "regularization", None) is not None:
        kwargs["regularization"] = args.regularization
    if getattr(args, "class_weight", None) is not None:
        kwargs["class_weight_positive"] = args.class_weight
    return classifier.SvmParams(**kwargs)


def default_manual_group(task: FeedbackType) -> pattern.PatternGroup:
    name = f"patterns/manual_{task.value}.dsl"
    text = resources.files("patmine.data").joinpath(name).read_text(encoding="utf-8")
    return pattern.parse_group_dsl(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args) -> int:
    gaz = load_gazetteer(args.gazetteer)
    reviews = corpus.ingest(args.input, args.format)
    prepared = corpus.prepare(reviews, gaz, seed=args.seed)
    corpus.save_prepared(prepared, args.out)
    s = prepared.split
    print(
        f"ingested {len(reviews)} reviews ({len(prepared.labels)} labeled): "
        f"{len(s.test)} test / {len(s.gold_train)} gold-train / {len(s.distant_train)} distant-train"
    )
    return 0


def cmd_learn(args) -> int:
    prepared = corpus.load_prepared(args.input)
    gaz = load_gazetteer(args.gazetteer)
    config = _gp_config(args)
    pairs = prepared.labeled_for(prepared.split.gold_train, args.task)
    positives = [d for d, y in pairs if y]
    negatives = [d for d, y in pairs if not y]
    if not positives:
        raise gp.GpError(f"no positive gold-train examples for task {args.task.value!r}")
    pool = gp.mine_terminal_pool(positives, negatives, config, gaz)
    history: list = []
    rng = Random(config.rng_seed)
    group = gp.learn_group(
        positives, negatives, config, pool, rng,
        feedback_type=args.task, history=history, jobs=args.jobs,
    )
    pattern.save_group(group, args.out)
    if args.fitness_log:
        lines = ["generation,best,mean"]
        lines += [f"{g},{best:.6f},{mean:.6f}" for g, best, mean in history]
        Path(args.fitness_log).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"learned {len(group.patterns)} pattern(s) for {args.task.value}:")
    for p in group.patterns:
        print(f"  {pattern.print_dsl(p)}")
    return 0


def cmd_match(args) -> int:
    prepared = corpus.load_prepared(args.input)
    group = pattern.load_group(args.patterns)
    lines = ["id,label"]
    for rid in sorted(prepared.documents):
        value = pattern.group_label(group, prepared.documents[rid])
        lines.append(f"{rid},{str(value).lower()}")
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"labeled {len(prepared.documents)} documents with {len(group.patterns)} pattern(s)")
    return 0


def cmd_train(args) -> int:
    prepared = corpus.load_prepared(args.input)
    examples = prepared.labeled_for(prepared.split.gold_train, args.task)
    model = classifier.train(examples, _svm_params(args))
    classifier.save_model(model, args.out)
    print(f"trained on {len(examples)} gold examples; {len(model.space)} features")
    return 0


def cmd_distant_train(args) -> int:
    prepared = corpus.load_prepared(args.input)
    group = pattern.load_group(args.patterns)
    docs = prepared.documents_for(prepared.split.distant_train)
    model = classifier.distant_train(docs, group, _svm_params(args))
    classifier.save_model(model, args.out)
    print(f"distant-trained on {len(docs)} pattern-labeled documents; {len(model.space)} features")
    return 0


def cmd_eval(args) -> int:
    prepared = corpus.load_prepared(args.input)
    gaz = load_gazetteer(args.gazetteer)
    manual_groups = {
        FeedbackType.DEFECT: pattern.load_group(args.patterns_defect)
        if args.patterns_defect
        else default_manual_group(FeedbackType.DEFECT),
        FeedbackType.IMPROVEMENT: pattern.load_group(args.patterns_improvement)
        if args.patterns_improvement
        else default_manual_group(FeedbackType.IMPROVEMENT),
    }
    inputs = evaluation.ExperimentInputs(
        corpus=prepared,
        gazetteer=gaz,
        manual_groups=manual_groups,
        gp_config=_gp_config(args),
        svm_params=classifier.SvmParams(seed=args.seed if args.seed is not None else 0),
        seed=args.seed if args.seed is not None else 0,
        jobs=args.jobs,
    )
    report = evaluation.run_experiment(args.method, prepared.split, inputs)
    print(report)
    evaluation.save_report(report, csv_path=args.out, json_path=args.json)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patmine",
        description="Learn lexico-semantic patterns from app reviews and classify actionable feedback.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="tokenize, tag, entity-annotate, and split a raw review file")
    p.add_argument("--in", dest="input", required=True, help="raw review file")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--gazetteer", default=None, help="gazetteer file (default: bundled)")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--out", required=True, help="prepared corpus file to write")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("learn", help="learn a pattern group by genetic programming")
    p.add_argument("--in", dest="input", required=True, help="prepared corpus file")
    p.add_argument("--task", type=_task, choices=list(FeedbackType), required=True)
    p.add_argument("--seed", type=int, default=None, help="rng seed (overrides config)")
    p.add_argument("--config", default=None, help="key = value GP config file")
    p.add_argument("--max-generations", dest="max_generations", type=int, default=None)
    p.add_argument("--population-size", dest="population_size", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="fitness evaluation fan-out")
    p.add_argument("--gazetteer", default=None)
    p.add_argument("--out", required=True, help="pattern group file (.json or .dsl)")
    p.add_argument("--fitness-log", dest="fitness_log", default=None, help="per-generation CSV log")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("match", help="label every document in a corpus with a pattern group")
    p.add_argument("--patterns", required=True, help="pattern group file")
    p.add_argument("--in", dest="input", required=True, help="prepared corpus file")
    p.add_argument("--out", required=True, help="id,label CSV to write")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("train", help="train the linear classifier on gold labels")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--task", type=_task, choices=list(FeedbackType), required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lambda", dest="regularization", type=float, default=None)
    p.add_argument("--class-weight", dest="class_weight", type=float, default=None)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("distant-train", help="train the classifier on pattern-generated noisy labels")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--task", type=_task, choices=list(FeedbackType), required=True)
    p.add_argument("--patterns", required=True, help="pattern group used as the noisy labeler")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lambda", dest="regularization", type=float, default=None)
    p.add_argument("--class-weight", dest="class_weight", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_distant_train)

    p = sub.add_parser("eval", help="run one of the five methods and score it on the test split")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", choices=evaluation.METHODS, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="GP config file for learned methods")
    p.add_argument("--max-generations", dest="max_generations", type=int, default=None)
    p.add_argument("--population-size", dest="population_size", type=int, default=None)
    p.add_argument("--patterns-defect", dest="patterns_defect", default=None)
    p.add_argument("--patterns-improvement", dest="patterns_improvement", default=None)
    p.add_argument("--gazetteer", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV report path")
    p.add_argument("--json", default=None, help="JSON report path")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - unexpected runtime failure
        log.exception("command failed")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
