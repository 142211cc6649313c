"""Operator command line: ingest, gen, paraphrase, filter, stats, eval,
export-templates, augment.

Provider settings resolve as defaults < config file < flags < environment
(TMWPGEN_ENDPOINT / TMWPGEN_API_KEY / TMWPGEN_MODEL / TMWPGEN_TIMEOUT).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
from pathlib import Path

from . import __version__
from .augmentation import AugmentationSchemaError, NoTemplateFound, augment
from .evaluation import evaluate, format_report, read_predictions
from .paraphrase import (
    ReplyCache,
    RetryPolicy,
    UnparseableReply,
    ProviderFailure,
    make_provider,
    paraphrase_problem,
)
from .pipeline import (
    GenerationExhausted,
    GenerationSettings,
    filter_corpus,
    generate_corpus,
    paraphrase_to_sample,
)
from .quality import FilterConfig, consistency_failure
from .schema import (
    CorpusParseError,
    SchemaError,
    compute_stats,
    format_stats,
    ingest_tabmwp_file,
    iter_corpus,
    read_corpus,
    write_corpus,
)
from .templates import (
    PlaceholderBinding,
    TemplateError,
    TemplateProblem,
    builtin_db,
    dump_db,
    load_template_db,
)


class CliError(RuntimeError):
    pass


def _load_samples(path: str) -> list:
    p = Path(path)
    if p.is_dir():
        samples = []
        for child in sorted(p.glob("problems_*.json")):
            samples.extend(ingest_tabmwp_file(child))
        if not samples:
            raise CliError(f"no problems_*.json files under {path}")
        return samples
    if p.suffix == ".jsonl":
        return read_corpus(p)
    return ingest_tabmwp_file(p)


def _reference_questions(path: str | None) -> list[str]:
    if not path:
        return []
    return [sample.question for sample in _load_samples(path)]


def _provider_settings(args) -> dict:
    settings = {"endpoint": None, "api_key": None, "model": None, "timeout": 60.0}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as handle:
            settings.update(json.load(handle).get("provider", {}))
    for key, flag in (("endpoint", "endpoint"), ("api_key", "api_key"), ("model", "model"), ("timeout", "timeout")):
        value = getattr(args, flag, None)
        if value is not None:
            settings[key] = value
    env_map = {
        "endpoint": "TMWPGEN_ENDPOINT",
        "api_key": "TMWPGEN_API_KEY",
        "model": "TMWPGEN_MODEL",
        "timeout": "TMWPGEN_TIMEOUT",
    }
    for key, env in env_map.items():
        if os.environ.get(env):
            settings[key] = os.environ[env]
    return settings


def _weights_from_args(args, db) -> dict | None:
    if getattr(args, "types", None):
        ids = [int(t) for t in args.types.split(",") if t.strip()]
        for type_id in ids:
            db.get(type_id)
        return {type_id: 1.0 for type_id in ids}
    if getattr(args, "weights", None):
        weights = {}
        for chunk in args.weights.split(","):
            key, _, value = chunk.partition("=")
            weights[int(key)] = float(value)
        return weights
    return None


# ----------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    samples = []
    for path in args.inputs:
        samples.extend(_load_samples(path))
    if args.split:
        from .schema import with_split

        samples = [with_split(s, args.split) for s in samples]
    count = write_corpus(args.out, samples)
    missing = sum(1 for s in samples if not s.solution.strip())
    print(f"ingested {count} samples -> {args.out} ({missing} without a solution)")
    return 0


def cmd_gen(args) -> int:
    db = load_template_db(args.db)
    weights = _weights_from_args(args, db)
    provider = None
    if args.paraphrase != "off":
        provider = make_provider(args.paraphrase, seed=args.seed, settings=_provider_settings(args))
    cache = ReplyCache(args.cache) if args.cache else None
    settings = GenerationSettings(
        count=args.count,
        master_seed=args.seed,
        weights=weights,
        paraphrase=args.paraphrase,
        provider=provider,
        cache=cache,
        delta=args.delta,
        reference_set=_reference_questions(args.reference),
        dedup_threshold=args.dedup_threshold,
        jobs=args.jobs,
    )
    samples, report = generate_corpus(db, settings)

    if args.fraction is not None:
        if not 0 < args.fraction <= 1:
            raise CliError(f"--fraction must be in (0, 1], got {args.fraction}")
        size = max(1, round(args.fraction * len(samples)))
        digest = hashlib.sha256(f"{args.seed}:fraction".encode("ascii")).digest()
        picks = sorted(random.Random(int.from_bytes(digest[:8], "big")).sample(range(len(samples)), size))
        samples = [samples[i] for i in picks]

    write_corpus(args.out, samples)
    report_path = args.report or f"{args.out}.report.json"
    with open(report_path, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, ensure_ascii=False, indent=2)
        handle.write("\n")
    counts = report.counts
    print(
        f"wrote {len(samples)} samples -> {args.out} "
        f"(rejected: {counts['rejected_consistency']} consistency, "
        f"{counts['rejected_leakage']} leakage, {counts['rejected_duplicate']} duplicate); "
        f"report -> {report_path}"
    )
    return 0


def _problem_from_sample(sample) -> TemplateProblem:
    """Treat a serialized template-stage sample as the paraphrase source."""
    return TemplateProblem(
        q_star=sample.question,
        t_star=sample.table,
        a_star=sample.answer,
        s_star=sample.solution,
        source=(sample.template_type or 0, PlaceholderBinding({})),
        table_title=sample.table_title,
        choices=sample.choices,
    )


def cmd_paraphrase(args) -> int:
    samples = read_corpus(args.input)
    provider = make_provider(args.provider, seed=args.seed, settings=_provider_settings(args))
    cache = ReplyCache(args.cache) if args.cache else None
    policy = RetryPolicy()
    accepted = []
    from .quality import ACCEPTED, REJECTED_CONSISTENCY, FilterReport, SampleVerdict

    report = FilterReport(delta=args.delta)
    for sample in samples:
        problem = _problem_from_sample(sample)
        result = paraphrase_problem(problem, provider, policy, cache=cache)
        reason = consistency_failure(result)
        if reason is None:
            try:
                accepted.append(
                    paraphrase_to_sample(result, sample.template_type, sample.id, sample.grade)
                )
                report.verdicts.append(SampleVerdict(sample.id, ACCEPTED))
                continue
            except SchemaError as exc:
                reason = f"paraphrase breaks sample schema: {exc}"
        report.verdicts.append(SampleVerdict(sample.id, REJECTED_CONSISTENCY, detail=reason))
    write_corpus(args.out, accepted)
    report_path = args.report or f"{args.out}.report.json"
    with open(report_path, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, ensure_ascii=False, indent=2)
        handle.write("\n")
    print(
        f"paraphrased {len(accepted)}/{len(samples)} samples -> {args.out}; report -> {report_path}"
    )
    return 0


def cmd_filter(args) -> int:
    samples = read_corpus(args.input)
    cfg = FilterConfig(
        delta=args.delta,
        dedup_threshold=args.dedup_threshold,
        reference_set=_reference_questions(args.reference),
    )
    kept, report = filter_corpus(samples, cfg)
    write_corpus(args.out, kept)
    report_path = args.report or f"{args.out}.report.json"
    with open(report_path, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, ensure_ascii=False, indent=2)
        handle.write("\n")
    counts = report.counts
    print(
        f"kept {len(kept)}/{len(samples)} samples -> {args.out} "
        f"(rejected: {counts['rejected_consistency']} consistency, "
        f"{counts['rejected_leakage']} leakage, {counts['rejected_duplicate']} duplicate)"
    )
    return 0


def cmd_stats(args) -> int:
    samples = []
    for path in args.inputs:
        samples.extend(_load_samples(path))
    print(format_stats(compute_stats(samples)))
    return 0


def cmd_eval(args) -> int:
    corpus = read_corpus(args.corpus)
    preds = read_predictions(args.preds)
    report = evaluate(preds, corpus)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(report.to_dict(), handle, ensure_ascii=False, indent=2)
            handle.write("\n")
    print(format_report(report))
    return 0


def cmd_export_templates(args) -> int:
    dump_db(builtin_db(), args.out)
    print(f"wrote built-in template DB -> {args.out}")
    return 0


def cmd_augment(args) -> int:
    db = load_template_db(args.db if Path(args.db).exists() else None)
    provider = make_provider(args.provider, seed=args.seed, settings=_provider_settings(args))
    cache = ReplyCache(args.cache) if args.cache else None
    rng = random.Random(args.seed)
    try:
        candidate = augment(
            db, args.demo, args.target, provider, n_trials=args.trials, rng=rng, cache=cache
        )
    except (NoTemplateFound, AugmentationSchemaError) as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return 1
    report = candidate.validation
    print(json.dumps(report.to_dict(), indent=2))
    if not report.admitted:
        print("candidate rejected; user DB unchanged", file=sys.stderr)
        return 1
    document = {"schema_version": 1, "pools": {}, "templates": []}
    if Path(args.db).exists():
        with open(args.db, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    from .templates import template_to_dict

    document["templates"].append(template_to_dict(candidate.parsed))
    with open(args.db, "w", encoding="utf-8") as handle:
        json.dump(document, handle, ensure_ascii=False, indent=2)
        handle.write("\n")
    print(f"admitted template type {candidate.parsed.type_id} -> {args.db}")
    return 0


# -------------------------------------------------------------------- main


def _add_provider_flags(parser) -> None:
    parser.add_argument("--config", help="JSON config file with a 'provider' block")
    parser.add_argument("--endpoint", help="chat-completions endpoint URL")
    parser.add_argument("--api-key", dest="api_key", help="provider credential")
    parser.add_argument("--model", help="provider model name")
    parser.add_argument("--timeout", type=float, help="request timeout in seconds")
    parser.add_argument("--cache", help="reply cache path (JSONL, resumable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmwpgen", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert TabMWP-format files into a corpus")
    p.add_argument("inputs", nargs="+", help="problems_*.json files, directories, or JSONL corpora")
    p.add_argument("--out", required=True)
    p.add_argument("--split", help="force a split label on every sample")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gen", help="generate problems from the template DB")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--db", help="extra template DB file merged over the built-ins")
    p.add_argument("--types", help="comma-separated type_ids to draw uniformly from")
    p.add_argument("--weights", help="type_id=weight pairs, comma-separated")
    p.add_argument(
        "--paraphrase",
        default="off",
        help="off, mock:echo, mock:background, mock:corrupt-answer, or live",
    )
    p.add_argument("--delta", type=float, default=0.95, help="BLEU leakage threshold")
    p.add_argument("--reference", help="corpus/TabMWP file with test questions for the leakage filter")
    p.add_argument("--dedup-threshold", dest="dedup_threshold", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--fraction", type=float, help="emit a seeded random subset of the corpus")
    p.add_argument("--report", help="filter report path (default: <out>.report.json)")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("paraphrase", help="paraphrase an existing template-stage corpus")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--provider", default="mock:background")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=0.95)
    p.add_argument("--report")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_paraphrase)

    p = sub.add_parser("filter", help="consistency/leakage/dedup filtering of a corpus")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--delta", type=float, default=0.95)
    p.add_argument("--reference")
    p.add_argument("--dedup-threshold", dest="dedup_threshold", type=float)
    p.add_argument("--report")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("stats", help="corpus statistics per split")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="exact-match evaluation with breakdowns")
    p.add_argument("--preds", required=True, help="JSONL {id, prediction} file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-templates", help="write the built-in template DB to a file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_templates)

    p = sub.add_parser("augment", help="derive and validate a new template via an LLM")
    p.add_argument("--demo", type=int, required=True, help="type_id of the demonstration template")
    p.add_argument("--target", required=True, help="description of the new question type")
    p.add_argument("--db", required=True, help="user template DB file to append to")
    p.add_argument("--provider", default="mock:augment-echo")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_augment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CorpusParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        CliError,
        SchemaError,
        TemplateError,
        GenerationExhausted,
        ProviderFailure,
        UnparseableReply,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
