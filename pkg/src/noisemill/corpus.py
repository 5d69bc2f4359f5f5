"""Corpus materialization: quality filter, corruption, sample templating.

Streams an object JSONL file through the quality filter and the noising
engine, emitting one sentinel-delimited training line per accepted
record. Output bytes depend only on (input line i, seed, i), so serial
and parallel builds are identical.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .noising import CorruptionLedger, NoiseConfig, corrupt, record_seed
from .objects import (
    MalformedObject,
    Schema,
    StructuredObject,
    parse,
    serialize,
)

BOS_MARK = "<BOS>"
EOS_MARK = "<EOS>"

REASON_UNKNOWN_CATEGORY = "unknown_category"
REASON_TITLE_TOO_SHORT = "title_too_short"
REASON_LOW_ATTRIBUTE_COVERAGE = "low_attribute_coverage"
REASON_EMPTY_BULLETS = "empty_bullets"


class TemplateViolation(ValueError):
    """Line does not follow the sentinel-delimited sample template."""


class IoFailure(OSError):
    """Corpus input/output could not be read or written."""


@dataclass(frozen=True)
class TrainingSample:
    input_text: str
    target_text: str
    record_index: int = 0

    def __post_init__(self) -> None:
        if "\n" in self.input_text:
            raise TemplateViolation("input text must not contain raw newlines")
        if "\n" in self.target_text:
            raise TemplateViolation("target text must not contain raw newlines")

    @property
    def rendered(self) -> str:
        return render_sample(self.input_text, self.target_text)


def render_sample(
    input_text: str,
    target_text: str,
    bos_mark: str = BOS_MARK,
    eos_mark: str = EOS_MARK,
) -> str:
    return f"{bos_mark}{input_text}\n{target_text}{eos_mark}"


def parse_sample(
    text: str,
    record_index: int = 0,
    bos_mark: str = BOS_MARK,
    eos_mark: str = EOS_MARK,
) -> TrainingSample:
    """Inverse of render_sample; the target must parse as a valid object."""
    text = text.rstrip("\r\n")
    if not text.startswith(bos_mark):
        raise TemplateViolation(f"missing {bos_mark} sentinel")
    if not text.endswith(eos_mark):
        raise TemplateViolation(f"missing {eos_mark} sentinel")
    body = text[len(bos_mark): len(text) - len(eos_mark)]
    if "\n" not in body:
        raise TemplateViolation("missing input/target separator")
    input_text, target_text = body.split("\n", 1)
    if "\n" in target_text:
        raise TemplateViolation("more than one separator in sample")
    try:
        parse(target_text)
    except MalformedObject as exc:
        raise TemplateViolation(f"target is not a valid object: {exc}") from exc
    return TrainingSample(input_text=input_text, target_text=target_text, record_index=record_index)


@dataclass(frozen=True)
class QualityFilterConfig:
    min_title_words: int = 2
    min_required_attribute_coverage: float = 0.5
    require_nonempty_bullets: bool = False

    def __post_init__(self) -> None:
        if self.min_title_words < 0:
            raise ValueError("min_title_words must be non-negative")
        if not 0.0 <= self.min_required_attribute_coverage <= 1.0:
            raise ValueError("min_required_attribute_coverage must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "min_title_words": self.min_title_words,
            "min_required_attribute_coverage": self.min_required_attribute_coverage,
            "require_nonempty_bullets": self.require_nonempty_bullets,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "QualityFilterConfig":
        known = {"min_title_words", "min_required_attribute_coverage", "require_nonempty_bullets"}
        stray = set(raw) - known
        if stray:
            raise ValueError(f"unknown quality config fields: {sorted(stray)}")
        return cls(**{k: raw[k] for k in known & set(raw)})

    @classmethod
    def load(cls, path: str) -> "QualityFilterConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def filter_record(
    obj: StructuredObject,
    schema: Schema,
    cfg: QualityFilterConfig,
) -> str | None:
    """None on accept, otherwise the first failing reason."""
    if len(obj.title.split()) < cfg.min_title_words:
        return REASON_TITLE_TOO_SHORT
    required = schema.required_names
    if required:
        coverage = sum(1 for n in required if n in obj.attributes) / len(required)
        if coverage < cfg.min_required_attribute_coverage:
            return REASON_LOW_ATTRIBUTE_COVERAGE
    if cfg.require_nonempty_bullets and not any(b.strip() for b in obj.feature_bullets):
        return REASON_EMPTY_BULLETS
    return None


@dataclass
class CorpusStats:
    read: int = 0
    malformed: int = 0
    rejected: dict[str, int] = field(default_factory=dict)
    emitted: int = 0
    soup_count: int = 0

    @property
    def rejected_total(self) -> int:
        return sum(self.rejected.values())

    @property
    def soup_fraction(self) -> float:
        return self.soup_count / self.emitted if self.emitted else 0.0

    def to_dict(self) -> dict:
        return {
            "read": self.read,
            "malformed": self.malformed,
            "rejected": dict(sorted(self.rejected.items())),
            "rejected_total": self.rejected_total,
            "emitted": self.emitted,
            "soup_count": self.soup_count,
            "soup_fraction": self.soup_fraction,
        }


# Worker context installed once per process; record tasks then carry only
# (index, line), which keeps inter-process traffic small.
_WORKER_CTX: dict = {}


def _init_worker(schemas, noise_cfg, quality_cfg) -> None:
    _WORKER_CTX["ctx"] = (schemas, noise_cfg, quality_cfg)


def _process_record(task) -> tuple[int, str, str | None, str | None, bool]:
    """(index, status, rendered line, ledger line, soup flag)."""
    index, line = task
    schemas, noise_cfg, quality_cfg = _WORKER_CTX["ctx"]
    try:
        obj = parse(line)
    except MalformedObject:
        return index, "malformed", None, None, False
    schema = schemas.get(obj.category)
    if schema is None:
        return index, f"rejected:{REASON_UNKNOWN_CATEGORY}", None, None, False
    reason = filter_record(obj, schema, quality_cfg)
    if reason is not None:
        return index, f"rejected:{reason}", None, None, False
    input_text, ledger = corrupt(obj, schema, noise_cfg, record_seed(noise_cfg.seed, index))
    target_text = serialize(obj, schema)
    rendered = render_sample(input_text, target_text, noise_cfg.bos_mark, noise_cfg.eos_mark)
    ledger_line = json.dumps(
        {"record_index": index, **ledger.to_dict()},
        ensure_ascii=False, separators=(",", ":"),
    )
    return index, "emitted", rendered, ledger_line, ledger.soup_applied


def _iter_results(tasks, jobs: int, init_args):
    if jobs <= 1:
        _init_worker(*init_args)
        for task in tasks:
            yield _process_record(task)
        return
    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_init_worker, initargs=init_args
    ) as pool:
        yield from pool.map(_process_record, tasks, chunksize=64)


def build_corpus(
    input_path: str,
    schemas: Mapping[str, Schema],
    noise_cfg: NoiseConfig,
    quality_cfg: QualityFilterConfig,
    output_path: str,
    ledger_path: str | None = None,
    jobs: int = 1,
    rejects_path: str | None = None,
) -> CorpusStats:
    """Corrupt every accepted input record into one rendered sample line.

    Rejected and malformed lines go to a sidecar JSONL (default:
    output_path + ".rejects.jsonl") with their line numbers.
    """
    stats = CorpusStats()
    if rejects_path is None:
        rejects_path = output_path + ".rejects.jsonl"

    def tasks():
        try:
            with open(input_path, "r", encoding="utf-8") as fh:
                for index, line in enumerate(fh):
                    yield index, line
        except OSError as exc:
            raise IoFailure(f"cannot read {input_path}: {exc}") from exc

    init_args = (dict(schemas), noise_cfg, quality_cfg)
    ledger_fh = open(ledger_path, "w", encoding="utf-8") if ledger_path else None
    try:
        with open(output_path, "w", encoding="utf-8") as out_fh, \
                open(rejects_path, "w", encoding="utf-8") as rej_fh:
            for index, status, rendered, ledger_line, soup in _iter_results(tasks(), jobs, init_args):
                stats.read += 1
                if status == "emitted":
                    out_fh.write(rendered + "\n")
                    if ledger_fh is not None:
                        ledger_fh.write(ledger_line + "\n")
                    stats.emitted += 1
                    stats.soup_count += int(soup)
                    continue
                if status == "malformed":
                    stats.malformed += 1
                    reason = "malformed"
                else:
                    reason = status.split(":", 1)[1]
                    stats.rejected[reason] = stats.rejected.get(reason, 0) + 1
                rej_fh.write(json.dumps({"line": index, "reason": reason}) + "\n")
    except OSError as exc:
        if isinstance(exc, IoFailure):
            raise
        raise IoFailure(str(exc)) from exc
    finally:
        if ledger_fh is not None:
            ledger_fh.close()
    return stats


def read_samples(path: str, bos_mark: str = BOS_MARK, eos_mark: str = EOS_MARK) -> Iterable[TrainingSample]:
    """Samples from a corpus file.

    The rendered template holds one raw newline (the input/target
    separator), so each sample occupies exactly two physical lines.
    """
    with open(path, "r", encoding="utf-8") as fh:
        index = 0
        while True:
            first = fh.readline()
            if not first:
                return
            second = fh.readline()
            if not second:
                raise TemplateViolation("corpus ends mid-sample (odd line count)")
            yield parse_sample(
                first + second, record_index=index, bos_mark=bos_mark, eos_mark=eos_mark
            )
            index += 1


def read_ledgers(path: str) -> Iterable[tuple[int, CorruptionLedger]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            raw = json.loads(line)
            yield raw["record_index"], CorruptionLedger.from_dict(raw)


def default_jobs() -> int:
    return os.cpu_count() or 1
