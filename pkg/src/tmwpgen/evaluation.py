"""Exact-match scoring with per-question-type, per-answer-type, per-grade,
and per-template-type breakdowns."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .answers import AnswerValue, NormalizedAnswer, format_answer, normalize_answer_text, normalized_form
from .paraphrase import extract_terminal_answer
from .schema import ANSWER_TYPES, TmwpSample


class EvaluationError(ValueError):
    pass


class IdMismatch(EvaluationError):
    pass


class DuplicatePrediction(EvaluationError):
    pass


@dataclass(frozen=True)
class Prediction:
    sample_id: str
    predicted_answer: str


def normalize_answer(raw: str, expected: AnswerValue) -> NormalizedAnswer:
    """Canonical comparison form of a raw prediction against an expected
    answer value: currency symbols, terminal periods, and case are dropped;
    numeric forms (including "p/q") become exact rationals."""
    del expected  # normalization is uniform; the parameter documents intent
    return normalize_answer_text(raw)


def exact_match(pred: Prediction, gold: TmwpSample) -> bool:
    """True iff the prediction's normalized form equals the gold answer's.

    A prediction that looks like a full solution has the value of its
    terminal "The answer is X" line extracted first.
    """
    if pred.sample_id != gold.id:
        raise IdMismatch(f"prediction for {pred.sample_id!r} scored against {gold.id!r}")
    text = pred.predicted_answer
    terminal = extract_terminal_answer(text)
    if terminal is not None:
        text = terminal
    return normalize_answer(text, gold.answer) == normalized_form(gold.answer)


@dataclass
class Cell:
    correct: int = 0
    total: int = 0

    @property
    def accuracy(self) -> Optional[float]:
        if self.total == 0:
            return None
        return 100.0 * self.correct / self.total

    def add(self, ok: bool) -> None:
        self.total += 1
        if ok:
            self.correct += 1


@dataclass
class EvalReport:
    overall: Cell = field(default_factory=Cell)
    by_question_type: dict = field(default_factory=lambda: {"FREE": Cell(), "MC": Cell()})
    by_answer_type: dict = field(default_factory=lambda: {t: Cell() for t in ANSWER_TYPES})
    by_grade: dict = field(default_factory=lambda: {"1-6": Cell(), "7-8": Cell()})
    by_template_type: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def cells(mapping: dict) -> dict:
            return {
                str(key): {
                    "correct": cell.correct,
                    "total": cell.total,
                    "accuracy": None if cell.accuracy is None else round(cell.accuracy, 2),
                }
                for key, cell in mapping.items()
            }

        return {
            "overall": cells({"overall": self.overall})["overall"],
            "question_type": cells(self.by_question_type),
            "answer_type": cells(self.by_answer_type),
            "grade": cells(self.by_grade),
            "template_type": cells(dict(sorted(self.by_template_type.items()))),
        }


def evaluate(preds: Iterable[Prediction], corpus: Sequence[TmwpSample]) -> EvalReport:
    """Score predictions against a corpus; samples without a prediction
    count as incorrect."""
    by_id: dict[str, Prediction] = {}
    for pred in preds:
        if pred.sample_id in by_id:
            raise DuplicatePrediction(f"two predictions for sample {pred.sample_id!r}")
        by_id[pred.sample_id] = pred

    report = EvalReport()
    for sample in corpus:
        pred = by_id.get(sample.id)
        ok = exact_match(pred, sample) if pred is not None else False
        report.overall.add(ok)
        report.by_question_type["FREE" if sample.kind == "free_text" else "MC"].add(ok)
        report.by_answer_type[sample.answer_type].add(ok)
        report.by_grade[sample.grade_bucket].add(ok)
        if sample.template_type is not None:
            report.by_template_type.setdefault(sample.template_type, Cell()).add(ok)
    return report


def _fmt_cell(cell: Cell) -> str:
    return "-" if cell.accuracy is None else f"{cell.accuracy:.2f}"


def format_report(report: EvalReport) -> str:
    """Aligned text table: question type, answer type, and grade columns
    plus the overall average, then per-template-type rows."""
    headers = ["FREE", "MC", "INT", "DEC", "EXTR", "BOOL", "OTH", "1-6", "7-8", "Avg."]
    values = (
        [_fmt_cell(report.by_question_type[k]) for k in ("FREE", "MC")]
        + [_fmt_cell(report.by_answer_type[k]) for k in ANSWER_TYPES]
        + [_fmt_cell(report.by_grade[k]) for k in ("1-6", "7-8")]
        + [_fmt_cell(report.overall)]
    )
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(headers, widths)),
        "  ".join(v.rjust(w) for v, w in zip(values, widths)),
    ]
    if report.by_template_type:
        lines.append("")
        lines.append("Type  Accuracy  (n)")
        for type_id in sorted(report.by_template_type):
            cell = report.by_template_type[type_id]
            lines.append(f"{type_id:>4}  {_fmt_cell(cell):>8}  ({cell.total})")
    return "\n".join(lines)


def read_predictions(path: str | Path) -> list[Prediction]:
    """Line-delimited {id, prediction} records."""
    predictions = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                predictions.append(Prediction(str(record["id"]), str(record["prediction"])))
            except (json.JSONDecodeError, KeyError) as exc:
                raise EvaluationError(f"{path}, line {lineno}: {exc}") from exc
    return predictions


def self_predictions(corpus: Iterable[TmwpSample]) -> list[Prediction]:
    """Gold answers replayed as predictions (sanity oracle: 100.00)."""
    return [Prediction(s.id, format_answer(s.answer)) for s in corpus]
