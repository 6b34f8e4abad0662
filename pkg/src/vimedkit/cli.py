"""Command-line entry point orchestrating the pipeline stages.

Exit codes: 0 success, 1 usage error, 2 data error, 3 partial completion
(translation failures). All randomness flows from named seeds that are
derivable from the global ``--seed`` and recorded into output manifests.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .corruption import CorruptionConfig, corrupt, write_examples_jsonl
from .filtering import FilterConfig, FilterStats, apply_filters
from .ingest import (
    IngestStats,
    parse_medline_file,
    read_abstracts_jsonl,
    write_abstracts_jsonl,
)
from .mednli import (
    MixedStateError,
    NliLoadError,
    export_vimednli,
    lexicon_conflicts,
    load_abbrev_lexicon,
    load_mednli,
    read_nli_jsonl,
    refine_examples,
    translate_nli,
    write_nli_jsonl,
)
from .metrics import (
    MetricReport,
    accuracy,
    corpus_bleu,
    eval_multidomain,
    format_report_table,
    macro_f1,
    read_reports_json,
    rouge_l,
    write_reports_json,
)
from .seeds import derive_seed
from .textnorm import token_count
from .selftrain import (
    mix_corpora,
    read_bitext_tsv,
    synthesize_bitext,
    write_bitext_shards,
    write_manifest,
)
from .translation import (
    HttpTranslatorBackend,
    MockLexiconBackend,
    TranslationJob,
    load_lexicon,
    translate_batch,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3

SUBCOMMANDS = (
    "ingest",
    "filter",
    "translate",
    "selftrain-mix",
    "corrupt",
    "nli-load",
    "nli-translate",
    "nli-refine-serve",
    "nli-export",
    "eval",
    "report",
)


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 on usage errors, not argparse's 2
        raise UsageError(message)


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file; flags win")
    common.add_argument("--seed", type=int, default=None, help="global seed")
    common.add_argument(
        "--jobs",
        type=int,
        default=None,
        help="parallelism bound (default: available processors)",
    )
    common.add_argument(
        "--dry-run",
        action="store_true",
        help="print the plan without writing anything",
    )
    return common


def build_parser() -> CliParser:
    common = _common_parser()
    parser = CliParser(prog="vimedkit", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("ingest", parents=[common], help="parse MEDLINE XML to JSONL")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stats", help="write ingest stats JSON here")

    p = sub.add_parser(
        "filter", parents=[common], help="length-filter, dedup, subset abstracts"
    )
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stats", help="write filter stats JSON here")
    p.add_argument("--max-tokens", type=int, default=None)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--subset-size", type=int, default=None)
    p.add_argument("--subset-seed", type=int, default=None)

    p = sub.add_parser(
        "translate", parents=[common], help="translate abstract bodies"
    )
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_backend_flags(p)
    p.add_argument("--checkpoint", help="checkpoint path (default: <out>.checkpoint)")
    p.add_argument("--checkpoint-interval", type=int, default=100)

    p = sub.add_parser(
        "selftrain-mix",
        parents=[common],
        help="synthesize bitext from monolingual abstracts and mix with gold",
    )
    p.add_argument("--gold", required=True, help="gold bitext TSV")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--synthetic", help="pre-built synthetic bitext TSV")
    group.add_argument("--mono", help="monolingual abstracts JSONL to translate")
    _add_backend_flags(p)
    p.add_argument("--domain", default="medical")
    p.add_argument("--out", required=True, help="output TSV prefix")
    p.add_argument("--manifest", help="mix manifest path (default: <out>.manifest.json)")
    p.add_argument("--mix-seed", type=int, default=None)
    p.add_argument("--shard-size", type=int, default=None)

    p = sub.add_parser(
        "corrupt", parents=[common], help="make span-corruption examples"
    )
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="output JSONL prefix")
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--mean-span", type=float, default=None)
    p.add_argument("--sentinel-prefix", default=None)
    p.add_argument("--corrupt-seed", type=int, default=None)
    p.add_argument("--shard-size", type=int, default=None)
    p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")

    p = sub.add_parser(
        "nli-load", parents=[common], help="load an NLI dataset, print split stats"
    )
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser(
        "nli-translate", parents=[common], help="machine-translate NLI examples"
    )
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_backend_flags(p)
    p.add_argument("--checkpoint")

    p = sub.add_parser(
        "nli-refine-serve",
        parents=[common],
        help="serve the human refinement queue over HTTP",
    )
    p.add_argument("--store", required=True, help="sqlite store path")
    p.add_argument("--in", dest="input", help="machine-state examples to enqueue")
    p.add_argument("--abbrev-lexicon", help="abbreviation rules TSV")
    p.add_argument("--mock-nmt-lexicon", help="token lexicon for POST /translate")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--lease", type=float, default=None, help="claim lease seconds")

    p = sub.add_parser(
        "nli-export", parents=[common], help="export the benchmark files"
    )
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--store", help="export from a refinement store")
    group.add_argument("--in", dest="input", help="export from an examples JSONL")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("jsonl", "tsv", "both"), default="both")
    p.add_argument("--allow-mixed", action="store_true")

    p = sub.add_parser("eval", parents=[common], help="compute evaluation metrics")
    p.add_argument(
        "--metric",
        required=True,
        choices=("bleu", "rouge_l", "macro_f1", "accuracy", "multidomain"),
    )
    p.add_argument("--hyp", help="hypotheses/predictions, one per line")
    p.add_argument("--ref", help="references/golds, one per line")
    p.add_argument("--tsv", help="hypothesis<TAB>reference<TAB>domain file")
    p.add_argument("--labels", help="comma-separated label set for macro_f1")
    p.add_argument("--dataset", default="")
    p.add_argument("--out", help="write MetricReport JSON here")

    p = sub.add_parser("report", parents=[common], help="render report tables")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)

    return parser


def _add_backend_flags(p: argparse.ArgumentParser):
    p.add_argument("--backend", choices=("mock", "http"), default=None)
    p.add_argument("--lexicon", help="mock backend token lexicon TSV")
    p.add_argument("--endpoint", help="http backend URL")
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--retries", type=int, default=None)
    p.add_argument("--timeout", type=float, default=None)


class Context:
    """Resolved config + seeds for one invocation; flags beat config values."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config: dict[str, object] = {}
        if getattr(args, "config", None):
            self.config = load_config(args.config)
        seed = args.seed if args.seed is not None else self.config.get("seed", 0)
        self.global_seed = int(seed)
        jobs = args.jobs if args.jobs is not None else self.config.get("jobs")
        self.jobs = int(jobs) if jobs is not None else (os.cpu_count() or 1)
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")

    def get(self, flag_value, key: str, default):
        if flag_value is not None:
            return flag_value
        if key in self.config:
            return self.config[key]
        return default

    def stage_seed(self, flag_value, key: str, stage: str) -> int:
        value = self.get(flag_value, key, None)
        if value is not None:
            return int(value)
        return derive_seed(self.global_seed, stage)


def _print_plan(plan: dict):
    print(json.dumps({"dry_run": True, **plan}, ensure_ascii=False, indent=2))


def _write_json(obj: dict, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(obj, handle, ensure_ascii=False, indent=2)
        handle.write("\n")


def _make_backend(ctx: Context):
    args = ctx.args
    kind = ctx.get(args.backend, "translate.backend", "mock")
    if kind == "mock":
        lexicon_path = ctx.get(args.lexicon, "translate.lexicon", None)
        lexicon = load_lexicon(lexicon_path) if lexicon_path else {}
        return MockLexiconBackend(lexicon)
    endpoint = ctx.get(args.endpoint, "translate.endpoint", None)
    if not endpoint:
        raise UsageError("http backend requires --endpoint")
    return HttpTranslatorBackend(
        endpoint,
        timeout=float(ctx.get(args.timeout, "translate.timeout", 30.0)),
        retries=int(ctx.get(args.retries, "translate.retries", 3)),
    )


def _batch_size(ctx: Context) -> int:
    return int(ctx.get(ctx.args.batch_size, "translate.batch_size", 32))


def cmd_ingest(ctx: Context) -> int:
    args = ctx.args
    plan = {"command": "ingest", "inputs": args.inputs, "out": args.out}
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK
    stats = IngestStats()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as out:
        for input_path in args.inputs:
            write_abstracts_jsonl(parse_medline_file(input_path, stats), out)
    payload = stats.as_dict()
    if args.stats:
        _write_json(payload, args.stats)
    print(json.dumps(payload, ensure_ascii=False))
    return EXIT_OK


def cmd_filter(ctx: Context) -> int:
    args = ctx.args
    cfg = FilterConfig(
        max_tokens=int(ctx.get(args.max_tokens, "filter.max_tokens", 512)),
        dedup=not args.no_dedup and bool(ctx.get(None, "filter.dedup", True)),
        subset_size=(
            int(v)
            if (v := ctx.get(args.subset_size, "filter.subset_size", None)) is not None
            else None
        ),
        subset_seed=ctx.stage_seed(args.subset_seed, "filter.subset_seed", "subset"),
    )
    plan = {
        "command": "filter",
        "in": args.input,
        "out": args.out,
        "max_tokens": cfg.max_tokens,
        "dedup": cfg.dedup,
        "subset_size": cfg.subset_size,
        "subset_seed": cfg.subset_seed,
    }
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK
    stats = FilterStats()
    stats.seeds["global_seed"] = ctx.global_seed
    kept, stats = apply_filters(read_abstracts_jsonl(args.input), cfg, stats)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as out:
        write_abstracts_jsonl(kept, out)
    payload = stats.as_dict()
    if args.stats:
        _write_json(payload, args.stats)
    print(json.dumps(payload, ensure_ascii=False))
    return EXIT_OK


def cmd_translate(ctx: Context) -> int:
    args = ctx.args
    checkpoint = args.checkpoint or f"{args.out}.checkpoint"
    plan = {
        "command": "translate",
        "in": args.input,
        "out": args.out,
        "checkpoint": checkpoint,
        "jobs": ctx.jobs,
    }
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK
    records = list(read_abstracts_jsonl(args.input))
    if not records:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text("", encoding="utf-8")
        print(json.dumps({"translated": 0, "failed": 0}))
        return EXIT_OK
    backend = _make_backend(ctx)
    job = TranslationJob(
        items=[(record.pmid, record.body) for record in records],
        checkpoint_path=Path(checkpoint),
    )
    translate_batch(
        backend,
        job,
        batch_size=_batch_size(ctx),
        parallelism=ctx.jobs,
        checkpoint_interval=int(args.checkpoint_interval),
    )
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as out:
        for record in records:
            if record.pmid not in job.completed:
                continue
            body = job.completed[record.pmid]
            out.write(
                json.dumps(
                    {
                        "pmid": record.pmid,
                        "title": record.title,
                        "body": body,
                        "token_count": token_count(body),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    summary = {"translated": len(job.completed), "failed": len(job.failed)}
    print(json.dumps(summary, ensure_ascii=False))
    return EXIT_PARTIAL if job.failed else EXIT_OK


def cmd_selftrain_mix(ctx: Context) -> int:
    args = ctx.args
    mix_seed = ctx.stage_seed(args.mix_seed, "mix.seed", "mix")
    manifest_path = args.manifest or f"{args.out}.manifest.json"
    plan = {
        "command": "selftrain-mix",
        "gold": args.gold,
        "synthetic": args.synthetic,
        "mono": args.mono,
        "out": args.out,
        "mix_seed": mix_seed,
    }
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK
    gold = list(read_bitext_tsv(args.gold, default_origin="gold"))
    failed = 0
    if args.synthetic:
        synthetic = list(
            read_bitext_tsv(args.synthetic, default_origin="synthetic")
        )
    else:
        backend = _make_backend(ctx)
        result = synthesize_bitext(
            read_abstracts_jsonl(args.mono),
            backend,
            domain=args.domain,
            batch_size=_batch_size(ctx),
            parallelism=ctx.jobs,
        )
        synthetic = result.pairs
        failed = result.failed_count
    mixed, manifest = mix_corpora(gold, synthetic, mix_seed)
    shards = write_bitext_shards(mixed, args.out, args.shard_size)
    # Shard names are relative to the manifest so runs relocate cleanly.
    manifest.output_shards = [path.name for path in shards]
    write_manifest(manifest, manifest_path)
    payload = manifest.as_dict()
    payload["synthesis_failures"] = failed
    print(json.dumps(payload, ensure_ascii=False))
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_corrupt(ctx: Context) -> int:
    args = ctx.args
    cfg = CorruptionConfig(
        corruption_rate=float(ctx.get(args.rate, "corrupt.rate", 0.15)),
        mean_span_length=float(ctx.get(args.mean_span, "corrupt.mean_span", 3.0)),
        sentinel_prefix=ctx.get(
            args.sentinel_prefix, "corrupt.sentinel_prefix", "<extra_id_{i}>"
        ),
        seed=ctx.stage_seed(args.corrupt_seed, "corrupt.seed", "corrupt"),
    )
    manifest_path = args.manifest or f"{args.out}.manifest.json"
    plan = {
        "command": "corrupt",
        "in": args.input,
        "out": args.out,
        "rate": cfg.corruption_rate,
        "mean_span_length": cfg.mean_span_length,
        "seed": cfg.seed,
    }
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK

    def examples():
        for record in read_abstracts_jsonl(args.input):
            yield corrupt(record.body.split(), cfg)

    count = 0

    def counted():
        nonlocal count
        for example in examples():
            count += 1
            yield example

    shards = write_examples_jsonl(counted(), args.out, args.shard_size)
    manifest = {
        "records": count,
        "rate": cfg.corruption_rate,
        "mean_span_length": cfg.mean_span_length,
        "sentinel_prefix": cfg.sentinel_prefix,
        "seed": cfg.seed,
        "global_seed": ctx.global_seed,
        "shards": [path.name for path in shards],
    }
    _write_json(manifest, manifest_path)
    print(json.dumps(manifest, ensure_ascii=False))
    return EXIT_OK


def cmd_nli_load(ctx: Context) -> int:
    args = ctx.args
    plan = {"command": "nli-load", "in": args.input, "out": args.out}
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK
    examples, stats = load_mednli(args.input)
    write_nli_jsonl(examples, args.out)
    print(json.dumps({"splits": stats, "total": len(examples)}, ensure_ascii=False))
    return EXIT_OK


def cmd_nli_translate(ctx: Context) -> int:
    args = ctx.args
    plan = {"command": "nli-translate", "in": args.input, "out": args.out}
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK
    examples = read_nli_jsonl(args.input)
    backend = _make_backend(ctx)
    translated, failed_uids = translate_nli(
        examples,
        backend,
        batch_size=_batch_size(ctx),
        parallelism=ctx.jobs,
        checkpoint_path=args.checkpoint,
    )
    write_nli_jsonl(translated, args.out)
    print(
        json.dumps(
            {"translated": len(translated), "failed": len(failed_uids)},
            ensure_ascii=False,
        )
    )
    return EXIT_PARTIAL if failed_uids else EXIT_OK


def cmd_nli_refine_serve(ctx: Context) -> int:
    args = ctx.args
    lease = args.lease if args.lease is not None else ctx.get(None, "refine.lease", None)
    plan = {
        "command": "nli-refine-serve",
        "store": args.store,
        "in": args.input,
        "host": args.host,
        "port": args.port,
    }
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK
    from .refine.service import create_app
    from .refine.store import DEFAULT_LEASE_SECONDS, TaskStore

    store = TaskStore(
        args.store,
        lease_seconds=float(lease) if lease is not None else DEFAULT_LEASE_SECONDS,
    )
    lexicon = (
        load_abbrev_lexicon(args.abbrev_lexicon) if args.abbrev_lexicon else []
    )
    for conflict in lexicon_conflicts(lexicon):
        print(f"warning: {conflict}", file=sys.stderr)
    if args.input:
        examples = [
            e for e in read_nli_jsonl(args.input) if e.state == "machine"
        ]
        created = store.enqueue(examples, lexicon)
        print(json.dumps({"enqueued": created, "total": store.progress().total}))
    translate_lexicon = (
        load_lexicon(args.mock_nmt_lexicon) if args.mock_nmt_lexicon else {}
    )
    app = create_app(store, lexicon, translate_lexicon)
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_nli_export(ctx: Context) -> int:
    args = ctx.args
    formats = ("jsonl", "tsv") if args.format == "both" else (args.format,)
    plan = {
        "command": "nli-export",
        "store": args.store,
        "in": args.input,
        "out": args.out,
        "formats": formats,
    }
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK
    if args.store:
        from .refine.store import TaskStore

        examples = TaskStore(args.store).examples()
    else:
        examples = read_nli_jsonl(args.input)
    manifest = export_vimednli(
        examples, args.out, formats=formats, allow_mixed=args.allow_mixed
    )
    _write_json(manifest, Path(args.out) / "manifest.json")
    print(json.dumps(manifest, ensure_ascii=False))
    return EXIT_OK


def _read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as handle:
        return [line.rstrip("\n") for line in handle]


def cmd_eval(ctx: Context) -> int:
    args = ctx.args
    plan = {"command": "eval", "metric": args.metric}
    if args.dry_run:
        _print_plan(plan)
        return EXIT_OK
    if args.metric == "multidomain":
        if not args.tsv:
            raise UsageError("multidomain requires --tsv")
        pairs = []
        for lineno, line in enumerate(_read_lines(args.tsv), 1):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{args.tsv}:{lineno}: expected 3 columns")
            pairs.append(tuple(parts))
        reports = eval_multidomain(pairs, dataset=args.dataset)
    else:
        if not args.hyp or not args.ref:
            raise UsageError(f"{args.metric} requires --hyp and --ref")
        hyps = _read_lines(args.hyp)
        refs = _read_lines(args.ref)
        if args.metric == "bleu":
            value = corpus_bleu(hyps, refs)
            metric = "bleu"
        elif args.metric == "rouge_l":
            if len(hyps) != len(refs):
                raise ValueError("hyp and ref line counts differ")
            if not hyps:
                raise ValueError("empty input")
            scores = [rouge_l(h, r) for h, r in zip(hyps, refs)]
            value = sum(score.f1 for score in scores) / len(scores)
            metric = "rouge_l"
        elif args.metric == "macro_f1":
            labels = (
                args.labels.split(",")
                if args.labels
                else sorted(set(hyps) | set(refs))
            )
            value = macro_f1(hyps, refs, labels)
            metric = "macro_f1"
        else:
            value = accuracy(hyps, refs)
            metric = "accuracy"
        reports = [
            MetricReport(
                dataset=args.dataset,
                domain="all",
                metric=metric,
                value=value,
                support=len(hyps),
            )
        ]
    if args.out:
        write_reports_json(reports, args.out)
    if len(reports) == 1:
        print(round(reports[0].value, 6))
    else:
        print(format_report_table(reports))
    return EXIT_OK


def cmd_report(ctx: Context) -> int:
    args = ctx.args
    if args.dry_run:
        _print_plan({"command": "report", "inputs": args.inputs})
        return EXIT_OK
    reports = []
    for path in args.inputs:
        reports.extend(read_reports_json(path))
    print(format_report_table(reports))
    return EXIT_OK


HANDLERS = {
    "ingest": cmd_ingest,
    "filter": cmd_filter,
    "translate": cmd_translate,
    "selftrain-mix": cmd_selftrain_mix,
    "corrupt": cmd_corrupt,
    "nli-load": cmd_nli_load,
    "nli-translate": cmd_nli_translate,
    "nli-refine-serve": cmd_nli_refine_serve,
    "nli-export": cmd_nli_export,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        ctx = Context(args)
        return HANDLERS[args.command](ctx)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, NliLoadError, MixedStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
