"""Canonical sample record and corpus tooling.

The on-disk form follows TabMWP naming: each record carries `question`,
`choices`, `answer`, `unit`, `table_title`, `table` (rendered text),
`table_for_pd` (column -> cell list), `solution`, `ques_type`, `ans_type`,
`grade`, and `split`. Corpora are stored line-delimited (one JSON object per
line); artifact-specific keys (`id`, `layout`, `original_solution`,
`template_type`, `provenance`) ride alongside.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from decimal import Decimal
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional

from .answers import (
    AnswerError,
    AnswerValue,
    BoolTextVal,
    DecVal,
    FractionVal,
    IntVal,
    TextVal,
    format_answer,
    parse_rational,
)


class SchemaError(ValueError):
    """Base class for sample validation failures."""


class MissingField(SchemaError):
    def __init__(self, name: str):
        super().__init__(f"missing required field: {name}")
        self.field = name


class TypeMismatch(SchemaError):
    def __init__(self, name: str, detail: str):
        super().__init__(f"field {name}: {detail}")
        self.field = name


class InvariantViolation(SchemaError):
    def __init__(self, name: str, detail: str):
        super().__init__(f"invariant on {name}: {detail}")
        self.field = name


LAYOUTS = ("key-value", "frequency", "price-list", "stem-leaf", "two-way-count")
SPLITS = ("train", "valid", "test", "generated")
QUESTION_KINDS = ("free_text", "multi_choice")
ANSWER_TYPES = ("INT", "DEC", "EXTR", "BOOL", "OTH")
PROVENANCES = ("ingested", "template", "paraphrased")

# TabMWP files use long-form ans_type / split labels.
_ANS_TYPE_ALIASES = {
    "integer_number": "INT",
    "decimal_number": "DEC",
    "extractive_text": "EXTR",
    "boolean_text": "BOOL",
    "other_text": "OTH",
}
_ANS_TYPE_WIRE = {v: k for k, v in _ANS_TYPE_ALIASES.items()}
_SPLIT_ALIASES = {"dev": "valid", "val": "valid", "validation": "valid"}

_CURRENCY_CELL_RE = re.compile(r"^\$\d+\.\d{2}$")
_LEAF_CELL_RE = re.compile(r"^(\d( \d)*)?$")


@dataclass(frozen=True)
class TableSpec:
    """A table as ordered headers plus rows of string cells."""

    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    layout: str

    def validate(self) -> None:
        if self.layout not in LAYOUTS:
            raise InvariantViolation("table.layout", f"unknown layout {self.layout!r}")
        if len(self.columns) < 1:
            raise InvariantViolation("table.columns", "table needs >= 1 column")
        if len(self.rows) < 1:
            raise InvariantViolation("table.rows", "table needs >= 1 row")
        if len(set(self.columns)) != len(self.columns):
            raise InvariantViolation("table.columns", "column names must be unique")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise InvariantViolation(
                    "table.rows", f"row {i} has {len(row)} cells, expected {len(self.columns)}"
                )
            for cell in row:
                if not isinstance(cell, str):
                    raise TypeMismatch("table.rows", f"cell {cell!r} is not a string")
        if self.layout == "stem-leaf":
            self._validate_stem_leaf()
        elif self.layout == "price-list":
            self._validate_price_list()

    def _validate_stem_leaf(self) -> None:
        if len(self.columns) != 2:
            raise InvariantViolation("table.layout", "stem-leaf tables have exactly 2 columns")
        stems = []
        for stem_cell, leaf_cell in self.rows:
            if not stem_cell.isdigit():
                raise InvariantViolation("table.rows", f"stem {stem_cell!r} is not a non-negative integer")
            stems.append(int(stem_cell))
            if not _LEAF_CELL_RE.match(leaf_cell):
                raise InvariantViolation("table.rows", f"leaf cell {leaf_cell!r} is not a space-separated digit list")
            digits = [int(d) for d in leaf_cell.split()]
            if digits != sorted(digits):
                raise InvariantViolation("table.rows", f"leaf cell {leaf_cell!r} is not sorted")
        if stems != sorted(set(stems)) or len(stems) != len(set(stems)):
            raise InvariantViolation("table.rows", "stems must be strictly increasing")

    def _validate_price_list(self) -> None:
        if len(self.columns) < 2:
            raise InvariantViolation("table.layout", "price-list tables need >= 2 columns")
        for row in self.rows:
            if not _CURRENCY_CELL_RE.match(row[1]):
                raise InvariantViolation(
                    "table.rows", f"price cell {row[1]!r} is not a $X.YY amount"
                )


def infer_layout(columns: Iterable[str], rows: Iterable[Iterable[str]]) -> str:
    """Deterministic layout classification for records that do not carry one."""
    cols = [str(c) for c in columns]
    rws = [[str(c) for c in row] for row in rows]
    if len(cols) == 2 and [c.strip().casefold() for c in cols] == ["stem", "leaf"]:
        try:
            TableSpec(tuple(cols), tuple(tuple(r) for r in rws), "stem-leaf").validate()
            return "stem-leaf"
        except SchemaError:
            pass
    if len(cols) >= 2 and rws and all(_CURRENCY_CELL_RE.match(r[1]) for r in rws):
        return "price-list"
    if (
        len(cols) >= 3
        and cols[0] == ""
        and rws
        and all(c.isdigit() for r in rws for c in r[1:])
    ):
        return "two-way-count"
    if (
        len(cols) == 2
        and "frequency" in cols[1].casefold()
        and rws
        and all(r[1].isdigit() for r in rws)
    ):
        return "frequency"
    return "key-value"


def make_table(columns: Iterable[str], rows: Iterable[Iterable[str]], layout: Optional[str] = None) -> TableSpec:
    cols = tuple(str(c) for c in columns)
    rws = tuple(tuple(str(c) for c in row) for row in rows)
    table = TableSpec(cols, rws, layout or infer_layout(cols, rws))
    table.validate()
    return table


def render_table_text(table: TableSpec) -> str:
    """Aligned plain-text rendering: header row, then data rows."""
    widths = [len(h) for h in table.columns]
    for row in table.rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []
    for row in (table.columns,) + table.rows:
        line = " | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row))
        lines.append(line.rstrip())
    return "\n".join(lines)


def table_hash(table: TableSpec) -> str:
    """Canonical hash over (columns, rows, layout); titles are ignored."""
    payload = json.dumps(
        [list(table.columns), [list(r) for r in table.rows], table.layout],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def numeric_cells(table: TableSpec) -> list:
    """Multiset (sorted list) of the table's numeric cell values, as exact
    rationals. Used by the paraphrase consistency check."""
    values = []
    for row in table.rows:
        for cell in row:
            if _LEAF_CELL_RE.match(cell) and " " in cell:
                values.extend(parse_rational(d) for d in cell.split())
                continue
            rational = parse_rational(cell)
            if rational is not None:
                values.append(rational)
    return sorted(values)


# Allowed answer-value variants per (question kind, answer type).
_VARIANTS_BY_TYPE = {
    ("free_text", "INT"): (IntVal,),
    ("free_text", "DEC"): (DecVal, FractionVal),
    ("multi_choice", "EXTR"): (TextVal,),
    ("multi_choice", "OTH"): (TextVal,),
    ("multi_choice", "BOOL"): (BoolTextVal,),
}


def answer_type_for(kind: str, value: AnswerValue) -> str:
    """Derive the answer type from (question kind, answer variant).

    Fractions land in DEC: the free-text numeric bucket for non-integers
    (compared as exact rationals everywhere downstream).
    """
    if kind == "free_text":
        if isinstance(value, IntVal):
            return "INT"
        if isinstance(value, (DecVal, FractionVal)):
            return "DEC"
        raise InvariantViolation("answer", f"free-text answers must be numeric, got {type(value).__name__}")
    if kind == "multi_choice":
        if isinstance(value, BoolTextVal):
            return "BOOL"
        if isinstance(value, TextVal):
            return "EXTR"
        raise InvariantViolation("answer", f"multiple-choice answers must be text, got {type(value).__name__}")
    raise InvariantViolation("ques_type", f"unknown question kind {kind!r}")


@dataclass(frozen=True)
class TmwpSample:
    """One complete problem record in TabMWP-compatible shape."""

    id: str
    question: str
    table: TableSpec
    table_text: str
    answer: AnswerValue
    solution: str
    kind: str
    answer_type: str
    grade: int
    split: str
    table_title: Optional[str] = None
    choices: Optional[tuple[str, ...]] = None
    original_solution: Optional[str] = None
    unit: Optional[str] = None
    template_type: Optional[int] = None
    provenance: str = "ingested"

    @property
    def grade_bucket(self) -> str:
        return "1-6" if self.grade <= 6 else "7-8"

    def validate(self) -> None:
        if not self.id:
            raise MissingField("id")
        if not isinstance(self.question, str) or not self.question.strip():
            raise TypeMismatch("question", "must be non-empty text")
        if self.kind not in QUESTION_KINDS:
            raise TypeMismatch("ques_type", f"unknown kind {self.kind!r}")
        if self.split not in SPLITS:
            raise TypeMismatch("split", f"unknown split {self.split!r}")
        if self.provenance not in PROVENANCES:
            raise TypeMismatch("provenance", f"unknown provenance {self.provenance!r}")
        if not isinstance(self.grade, int) or not 1 <= self.grade <= 8:
            raise InvariantViolation("grade", f"grade must be in [1, 8], got {self.grade!r}")
        if self.template_type is not None and self.template_type < 1:
            raise InvariantViolation("template_type", f"must be >= 1, got {self.template_type}")
        self.table.validate()
        try:
            self.answer.validate()
        except AnswerError as exc:
            raise InvariantViolation("answer", str(exc)) from exc
        if self.kind == "multi_choice":
            if not self.choices:
                raise InvariantViolation("choices", "multiple-choice samples need a non-empty choice list")
            if format_answer(self.answer) not in self.choices:
                raise InvariantViolation(
                    "answer", f"{format_answer(self.answer)!r} is not among choices {list(self.choices)}"
                )
        elif self.choices is not None:
            raise InvariantViolation("choices", "free-text samples must not carry choices")
        allowed = _VARIANTS_BY_TYPE.get((self.kind, self.answer_type))
        if allowed is None:
            raise InvariantViolation(
                "ans_type", f"{self.answer_type!r} is not valid for {self.kind!r} questions"
            )
        if not isinstance(self.answer, allowed):
            raise InvariantViolation(
                "ans_type",
                f"{self.answer_type} answers cannot hold {type(self.answer).__name__}",
            )
        if self.table_text != render_table_text(self.table):
            raise InvariantViolation("table", "table_text is not the canonical rendering of table_for_pd")


def _parse_answer_field(raw: Any, kind: str, answer_type: str, choices: Optional[tuple[str, ...]]) -> AnswerValue:
    text = str(raw).strip()
    if answer_type == "INT":
        rational = parse_rational(text)
        if rational is None or rational.denominator != 1:
            raise TypeMismatch("answer", f"{text!r} is not an integer")
        return IntVal(int(rational))
    if answer_type == "DEC":
        if "/" in text:
            rational = parse_rational(text)
            if rational is None or rational < 0:
                raise TypeMismatch("answer", f"{text!r} is not a fraction")
            return FractionVal(rational.numerator, rational.denominator)
        rational = parse_rational(text)
        if rational is None:
            raise TypeMismatch("answer", f"{text!r} is not a decimal")
        cleaned = text.strip().strip("$").replace(",", "")
        scale = len(cleaned.split(".")[1]) if "." in cleaned else 0
        return DecVal(Decimal(cleaned), scale)
    if answer_type == "BOOL":
        pair = tuple(choices) if choices and len(choices) == 2 else ("yes", "no")
        if text not in pair:
            raise InvariantViolation("answer", f"{text!r} not in boolean pair {pair}")
        return BoolTextVal(text, pair)
    if not text:
        raise TypeMismatch("answer", "empty answer text")
    return TextVal(text)


def _table_from_record(record: dict, record_name: str = "record") -> TableSpec:
    table_for_pd = record.get("table_for_pd")
    if not isinstance(table_for_pd, dict) or not table_for_pd:
        raise MissingField("table_for_pd")
    columns = [str(c) for c in table_for_pd.keys()]
    cell_lists = []
    for col, cells in table_for_pd.items():
        if not isinstance(cells, list):
            raise TypeMismatch("table_for_pd", f"column {col!r} is not a list")
        cell_lists.append([_cell_to_str(c) for c in cells])
    lengths = {len(cells) for cells in cell_lists}
    if len(lengths) != 1:
        raise InvariantViolation("table_for_pd", "columns have unequal lengths")
    rows = list(zip(*cell_lists)) if cell_lists[0] else []
    return make_table(columns, rows, record.get("layout"))


def _cell_to_str(cell: Any) -> str:
    if isinstance(cell, str):
        return cell
    if isinstance(cell, bool):
        raise TypeMismatch("table_for_pd", f"boolean cell {cell!r}")
    if isinstance(cell, int):
        return str(cell)
    if isinstance(cell, float):
        return repr(cell)
    raise TypeMismatch("table_for_pd", f"unsupported cell {cell!r}")


def parse_sample(record: dict) -> TmwpSample:
    """Validate a raw record into a TmwpSample.

    Accepts both this artifact's serialized form and raw TabMWP records
    (long-form ques_type/ans_type labels, numeric cells, `dev` split).
    table_text is re-rendered canonically, so parse(serialize(s)) == s while
    parsing foreign records canonicalizes them.
    """
    if not isinstance(record, dict):
        raise TypeMismatch("record", "expected a key-value object")
    for name in ("question", "answer", "ques_type", "ans_type", "grade", "split"):
        if record.get(name) in (None, ""):
            raise MissingField(name)

    kind = str(record["ques_type"]).strip()
    kind = {"multiple-choice": "multi_choice", "free-text": "free_text"}.get(kind, kind)
    if kind not in QUESTION_KINDS:
        raise TypeMismatch("ques_type", f"unknown kind {record['ques_type']!r}")

    answer_type = str(record["ans_type"]).strip()
    answer_type = _ANS_TYPE_ALIASES.get(answer_type, answer_type)
    if answer_type not in ANSWER_TYPES:
        raise TypeMismatch("ans_type", f"unknown answer type {record['ans_type']!r}")

    split = str(record["split"]).strip().casefold()
    split = _SPLIT_ALIASES.get(split, split)
    if split not in SPLITS:
        raise TypeMismatch("split", f"unknown split {record['split']!r}")

    raw_grade = record["grade"]
    if isinstance(raw_grade, str) and raw_grade.isdigit():
        raw_grade = int(raw_grade)
    if not isinstance(raw_grade, int) or isinstance(raw_grade, bool):
        raise TypeMismatch("grade", f"grade must be an integer, got {record['grade']!r}")

    choices = record.get("choices")
    if choices is not None:
        if not isinstance(choices, list) or not all(isinstance(c, str) for c in choices):
            raise TypeMismatch("choices", "must be a list of strings")
        choices = tuple(choices)
    if kind == "free_text" and choices is not None:
        raise InvariantViolation("choices", "free-text samples must not carry choices")

    table = _table_from_record(record)
    answer = _parse_answer_field(record["answer"], kind, answer_type, choices)

    solution = record.get("solution") or ""
    original = record.get("original_solution")
    template_type = record.get("template_type")
    if template_type is not None and not isinstance(template_type, int):
        raise TypeMismatch("template_type", f"must be an integer, got {template_type!r}")

    sample = TmwpSample(
        id=str(record.get("id", "")) or _default_id(record),
        question=str(record["question"]),
        table=table,
        table_text=render_table_text(table),
        answer=answer,
        solution=str(solution),
        kind=kind,
        answer_type=answer_type,
        grade=raw_grade,
        split=split,
        table_title=record.get("table_title") or None,
        choices=choices,
        original_solution=str(original) if original else None,
        unit=record.get("unit") or None,
        template_type=template_type,
        provenance=str(record.get("provenance", "ingested")),
    )
    sample.validate()
    return sample


def _default_id(record: dict) -> str:
    payload = json.dumps(record, sort_keys=True, ensure_ascii=False)
    return "r" + hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def serialize_sample(sample: TmwpSample) -> dict:
    """Canonical wire form; `parse_sample(serialize_sample(s)) == s`."""
    sample.validate()
    table_for_pd = {
        col: [row[i] for row in sample.table.rows]
        for i, col in enumerate(sample.table.columns)
    }
    return {
        "id": sample.id,
        "split": sample.split,
        "question": sample.question,
        "choices": list(sample.choices) if sample.choices is not None else None,
        "unit": sample.unit,
        "answer": format_answer(sample.answer),
        "ques_type": sample.kind,
        "ans_type": _ANS_TYPE_WIRE[sample.answer_type],
        "grade": sample.grade,
        "table_title": sample.table_title,
        "table": sample.table_text,
        "table_for_pd": table_for_pd,
        "layout": sample.table.layout,
        "solution": sample.solution,
        "original_solution": sample.original_solution,
        "template_type": sample.template_type,
        "provenance": sample.provenance,
    }


class CorpusParseError(SchemaError):
    def __init__(self, path: str, line: int, cause: Exception):
        super().__init__(f"{path}, line {line}: {cause}")
        self.path = path
        self.line = line
        self.cause = cause


def write_corpus(path: str | Path, samples: Iterable[TmwpSample]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for sample in samples:
            handle.write(json.dumps(serialize_sample(sample), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_corpus(path: str | Path) -> list[TmwpSample]:
    return list(iter_corpus(path))


def iter_corpus(path: str | Path) -> Iterator[TmwpSample]:
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                yield parse_sample(json.loads(line))
            except (json.JSONDecodeError, SchemaError) as exc:
                raise CorpusParseError(str(path), lineno, exc) from exc


def ingest_tabmwp_file(path: str | Path, split: Optional[str] = None) -> list[TmwpSample]:
    """Read a TabMWP problems_*.json file (an id -> record map).

    The split comes from each record when present, else from `split`, else
    from the filename (problems_train.json -> train, problems_dev.json ->
    valid, ...).
    """
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise TypeMismatch("file", f"{path} is not an id -> record map")
    inferred = split
    if inferred is None:
        stem = Path(path).stem
        for token in ("train", "dev", "test", "val"):
            if token in stem:
                inferred = _SPLIT_ALIASES.get(token, token)
                break
    samples = []
    for key, record in data.items():
        record = dict(record)
        record.setdefault("id", str(key))
        if "split" not in record or record["split"] in (None, ""):
            if inferred is None:
                raise MissingField("split")
            record["split"] = inferred
        samples.append(parse_sample(record))
    return samples


@dataclass
class SplitCounts:
    questions: int = 0
    free_text: int = 0
    multiple_choice: int = 0
    distinct_tables: int = 0
    with_solution: int = 0


@dataclass
class SplitStats:
    per_split: dict = field(default_factory=dict)
    totals: SplitCounts = field(default_factory=SplitCounts)


def compute_stats(corpus: Iterable[TmwpSample]) -> SplitStats:
    """Per-split question/type/table/solution counts.

    Distinct tables are counted by canonical hash; the totals row dedupes
    across splits, so it can be smaller than the per-split sum.
    """
    stats = SplitStats()
    hashes_by_split: dict[str, set] = {}
    all_hashes: set = set()
    for sample in corpus:
        counts = stats.per_split.setdefault(sample.split, SplitCounts())
        counts.questions += 1
        stats.totals.questions += 1
        if sample.kind == "free_text":
            counts.free_text += 1
            stats.totals.free_text += 1
        else:
            counts.multiple_choice += 1
            stats.totals.multiple_choice += 1
        if sample.solution.strip():
            counts.with_solution += 1
            stats.totals.with_solution += 1
        digest = table_hash(sample.table)
        hashes_by_split.setdefault(sample.split, set()).add(digest)
        all_hashes.add(digest)
    for split, hashes in hashes_by_split.items():
        stats.per_split[split].distinct_tables = len(hashes)
    stats.totals.distinct_tables = len(all_hashes)
    return stats


def format_stats(stats: SplitStats) -> str:
    """Aligned text report, one column per split plus a Total column."""
    order = [s for s in SPLITS if s in stats.per_split]
    order += [s for s in sorted(stats.per_split) if s not in order]
    headers = [""] + [s.capitalize() for s in order] + ["Total"]
    rows = [
        ("#Question", "questions"),
        ("#Free-text", "free_text"),
        ("#MCQ", "multiple_choice"),
        ("#Table", "distinct_tables"),
        ("#Solution", "with_solution"),
    ]
    lines = [headers]
    for label, attr in rows:
        line = [label]
        for split in order:
            line.append(f"{getattr(stats.per_split[split], attr):,}")
        line.append(f"{getattr(stats.totals, attr):,}")
        lines.append(line)
    widths = [max(len(row[i]) for row in lines) for i in range(len(headers))]
    return "\n".join(
        " | ".join(cell.rjust(widths[i]) if i else cell.ljust(widths[0]) for i, cell in enumerate(row)).rstrip()
        for row in lines
    )


def with_split(sample: TmwpSample, split: str) -> TmwpSample:
    return replace(sample, split=split)
