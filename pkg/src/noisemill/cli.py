"""Pipeline driver: synth, build, verify, evaluate.

All data goes to files; structured status events go to standard error as
JSON lines. Exit codes: 0 success, 1 runtime/I-O failure, 2 bad flags or
bad inputs, 3 verification found failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .corpus import (
    IoFailure,
    QualityFilterConfig,
    build_corpus,
    default_jobs,
    read_ledgers,
    read_samples,
)
from .metrics import (
    EmptyInput,
    EvalThresholds,
    aggregate,
    aggregate_to_dict,
    evaluate_pair,
)
from .noising import NoiseConfig
from .objects import (
    MalformedObject,
    SchemaFileInvalid,
    dump_schemas,
    load_schemas,
    parse,
    serialize,
)
from .oracle import LedgerMismatch, VerificationReport, verify_ledger
from .rng import spawn
from .synth import generate_objects, generate_schemas

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_VERIFY_FAILED = 3


def _log(event: str, **fields) -> None:
    print(json.dumps({"event": event, **fields}, ensure_ascii=False), file=sys.stderr)


def _write_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_synth(args) -> int:
    if args.categories < 1 or args.objects < 0:
        _log("error", message="--categories must be >= 1 and --objects >= 0")
        return EXIT_USAGE
    if not 0.0 <= args.noisy_fraction <= 1.0:
        _log("error", message="--noisy-fraction must be in [0, 1]")
        return EXIT_USAGE
    os.makedirs(args.out, exist_ok=True)
    schemas = generate_schemas(args.categories, spawn(args.seed, "schemas"))
    objects = generate_objects(schemas, args.objects, seed=args.seed,
                               noisy_fraction=args.noisy_fraction)
    schemas_path = os.path.join(args.out, "schemas.json")
    objects_path = os.path.join(args.out, "objects.jsonl")
    dump_schemas(schemas, schemas_path)
    by_category = {s.category: s for s in schemas}
    with open(objects_path, "w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(serialize(obj, by_category[obj.category]) + "\n")
    _log("synth_done", categories=args.categories, objects=len(objects),
         schemas=schemas_path, corpus=objects_path)
    return EXIT_OK


def _cmd_build(args) -> int:
    schemas = load_schemas(args.schemas)
    noise_cfg = NoiseConfig.load(args.noise_config) if args.noise_config else NoiseConfig()
    quality_cfg = (
        QualityFilterConfig.load(args.quality_config)
        if args.quality_config else QualityFilterConfig()
    )
    stats = build_corpus(
        input_path=args.in_path,
        schemas=schemas,
        noise_cfg=noise_cfg,
        quality_cfg=quality_cfg,
        output_path=args.out,
        ledger_path=args.ledger,
        jobs=args.jobs,
    )
    _write_json(stats.to_dict(), args.stats)
    _log("build_done", **stats.to_dict())
    return EXIT_OK


def _cmd_verify(args) -> int:
    schemas = load_schemas(args.schemas)
    report = VerificationReport()
    records = 0
    samples = list(read_samples(args.corpus))
    ledgers = list(read_ledgers(args.ledger))
    if len(samples) != len(ledgers):
        raise LedgerMismatch(
            f"corpus has {len(samples)} samples, ledger has {len(ledgers)}"
        )
    for sample, (record_index, ledger) in zip(samples, ledgers):
        target = parse(sample.target_text)
        schema = schemas.get(target.category)
        if schema is None:
            raise LedgerMismatch(f"no schema for category {target.category!r}")
        report.merge(verify_ledger(sample.input_text, ledger, schema, record_index))
        records += 1
    payload = {"records": records, **report.to_dict()}
    _write_json(payload, args.report)
    _log("verify_done", records=records, entries_checked=report.entries_checked,
         passed=report.passed, failed=report.failed, skipped_soup=report.skipped_soup)
    return EXIT_OK if report.ok else EXIT_VERIFY_FAILED


def _read_objects(path: str):
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            try:
                out.append(parse(line))
            except MalformedObject as exc:
                raise MalformedObject(f"{path}:{i + 1}: {exc}") from exc
    return out


def _cmd_evaluate(args) -> int:
    schemas = load_schemas(args.schemas)
    thresholds = EvalThresholds.load(args.thresholds) if args.thresholds else EvalThresholds()
    references = _read_objects(args.reference)
    candidates = _read_objects(args.candidate)
    if not candidates or not references:
        _log("error", message="reference and candidate files must be non-empty")
        return EXIT_USAGE

    if thresholds.join_attribute:
        key = thresholds.join_attribute
        by_id = {c.attributes.get(key): c for c in candidates if key in c.attributes}
        pairs = [
            (r, by_id[r.attributes[key]])
            for r in references
            if r.attributes.get(key) in by_id
        ]
        unmatched = len(references) - len(pairs)
    else:
        if len(references) != len(candidates):
            _log("error", message="line-aligned inputs differ in length "
                 f"({len(references)} vs {len(candidates)}) and no join_attribute is set")
            return EXIT_USAGE
        pairs = list(zip(references, candidates))
        unmatched = 0

    reports = []
    skipped_missing_schema = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for ref, cand in pairs:
            schema = schemas.get(ref.category)
            if schema is None:
                skipped_missing_schema += 1
                continue
            report = evaluate_pair(ref, cand, schema, thresholds)
            reports.append(report)
            fh.write(json.dumps(report.to_dict(), ensure_ascii=False,
                                separators=(",", ":")) + "\n")
    try:
        agg = aggregate_to_dict(aggregate(reports))
    except EmptyInput:
        _log("error", message="no evaluable pairs")
        return EXIT_USAGE
    agg["unmatched"] = unmatched
    agg["skipped_missing_schema"] = skipped_missing_schema
    _write_json(agg, args.aggregate)
    _log("evaluate_done", pairs=len(reports), unmatched=unmatched)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisemill",
        description="Corrupt structured catalog objects into denoising corpora, "
                    "verify recoverability, and score candidate regenerations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic mini-catalog")
    p.add_argument("--categories", type=int, default=5)
    p.add_argument("--objects", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--noisy-fraction", type=float, default=0.1)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("build", help="corrupt a corpus into training samples")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--schemas", required=True)
    p.add_argument("--noise-config")
    p.add_argument("--quality-config")
    p.add_argument("--out", required=True)
    p.add_argument("--ledger")
    p.add_argument("--stats")
    p.add_argument("--jobs", type=int, default=default_jobs())
    p.set_defaults(fn=_cmd_build)

    p = sub.add_parser("verify", help="check every controlled corruption is recoverable")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ledger", required=True)
    p.add_argument("--schemas", required=True)
    p.add_argument("--report")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("evaluate", help="score candidate objects against references")
    p.add_argument("--reference", required=True)
    p.add_argument("--candidate", required=True)
    p.add_argument("--schemas", required=True)
    p.add_argument("--thresholds")
    p.add_argument("--out", required=True)
    p.add_argument("--aggregate")
    p.set_defaults(fn=_cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (SchemaFileInvalid, MalformedObject, ValueError) as exc:
        if isinstance(exc, LedgerMismatch):
            _log("error", kind="ledger_mismatch", message=str(exc))
            return EXIT_RUNTIME
        _log("error", kind="bad_input", message=str(exc))
        return EXIT_USAGE
    except (IoFailure, OSError) as exc:
        _log("error", kind="io_failure", message=str(exc))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
