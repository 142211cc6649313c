"""Post-paraphrase acceptance: answer-consistency checking, BLEU-based
test-set leakage filtering, and intra-corpus near-duplicate removal.

BLEU here is sentence-level, order 4, unsmoothed, with a candidate-side
brevity penalty. Tokenization casefolds and splits words from punctuation.
Pinned boundary semantics: an n-gram order where the candidate has no
n-grams is skipped when the reference has none either (so bleu(x, x) = 1
for any non-empty x) and scores 0 otherwise; any zero precision zeroes the
whole score.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .answers import answers_match, format_answer, normalized_form
from .paraphrase import ParaphraseResult, extract_terminal_answer
from .schema import TmwpSample, numeric_cells


class EmptyText(ValueError):
    """BLEU is undefined for texts with no tokens."""


_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


def _ngram_counts(tokens: Sequence[str], order: int) -> list[Counter]:
    return [
        Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
        for n in range(1, order + 1)
    ]


def bleu(candidate: str, reference: str, order: int = 4) -> float:
    """Sentence-level BLEU in [0, 1]; see the module docstring for the
    pinned variant."""
    if order < 1:
        raise ValueError("order must be >= 1")
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        raise EmptyText("BLEU needs non-empty candidate and reference")
    return _bleu_tokens(cand, _ngram_counts(ref, order), len(ref), order)


def _bleu_tokens(cand: list[str], ref_counts: list[Counter], ref_len: int, order: int) -> float:
    log_sum = 0.0
    used_orders = 0
    for n in range(1, order + 1):
        cand_ngrams = Counter(tuple(cand[i : i + n]) for i in range(len(cand) - n + 1))
        total = sum(cand_ngrams.values())
        if total == 0:
            if sum(ref_counts[n - 1].values()) == 0:
                continue
            return 0.0
        matched = sum(min(count, ref_counts[n - 1][gram]) for gram, count in cand_ngrams.items())
        if matched == 0:
            return 0.0
        log_sum += math.log(matched / total)
        used_orders += 1
    score = math.exp(log_sum / used_orders) if used_orders else 1.0
    if len(cand) < ref_len:
        score *= math.exp(1.0 - ref_len / len(cand))
    return score


@dataclass
class FilterConfig:
    delta: float = 0.95
    bleu_order: int = 4
    dedup_threshold: Optional[float] = None
    reference_set: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must be in (0, 1], got {self.delta}")
        if self.bleu_order < 1:
            raise ValueError("bleu_order must be >= 1")
        if self.dedup_threshold is not None and not 0 < self.dedup_threshold <= 1:
            raise ValueError(f"dedup threshold must be in (0, 1], got {self.dedup_threshold}")


ACCEPTED = "accepted"
REJECTED_CONSISTENCY = "rejected_consistency"
REJECTED_LEAKAGE = "rejected_leakage"
REJECTED_DUPLICATE = "rejected_duplicate"


@dataclass
class SampleVerdict:
    sample_id: str
    verdict: str
    detail: Optional[str] = None
    max_bleu: Optional[float] = None
    matched_reference: Optional[str] = None

    def to_dict(self) -> dict:
        out: dict = {"id": self.sample_id, "verdict": self.verdict}
        if self.detail:
            out["detail"] = self.detail
        if self.max_bleu is not None:
            out["max_bleu"] = round(self.max_bleu, 6)
        if self.matched_reference is not None:
            out["matched_reference"] = self.matched_reference
        return out


@dataclass
class FilterReport:
    delta: float
    verdicts: list[SampleVerdict] = field(default_factory=list)

    @property
    def counts(self) -> dict:
        tally = {ACCEPTED: 0, REJECTED_CONSISTENCY: 0, REJECTED_LEAKAGE: 0, REJECTED_DUPLICATE: 0}
        for verdict in self.verdicts:
            tally[verdict.verdict] += 1
        return tally

    @property
    def accepted_ids(self) -> set:
        return {v.sample_id for v in self.verdicts if v.verdict == ACCEPTED}

    def to_dict(self) -> dict:
        counts = self.counts
        total = len(self.verdicts)
        rejected = total - counts[ACCEPTED]
        return {
            "delta": self.delta,
            "total": total,
            "counts": counts,
            "rejection_rate": round(rejected / total, 6) if total else 0.0,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    def merge(self, other: "FilterReport") -> None:
        self.verdicts.extend(other.verdicts)


# -------------------------------------------------------------- consistency


def consistency_failure(result: ParaphraseResult) -> Optional[str]:
    """Reason the paraphrase is inconsistent with its template source, or
    None when it passes.

    Checks: (a) the answer field still denotes the template answer, (b) the
    solution's terminal line re-derives it, and (c) the numeric table cells
    are the same multiset.
    """
    expected = result.source.a_star
    if normalized_form(result.answer) != normalized_form(expected):
        return (
            f"answer {format_answer(result.answer)!r} != template answer "
            f"{format_answer(expected)!r}"
        )
    terminal = extract_terminal_answer(result.solution)
    if terminal is None:
        return "solution has no terminal answer line"
    if not answers_match(terminal, expected):
        return f"solution concludes {terminal!r} but template answer is {format_answer(expected)!r}"
    if numeric_cells(result.table) != numeric_cells(result.source.t_star):
        return "numeric table cells changed"
    return None


def consistency_check(result: ParaphraseResult) -> SampleVerdict:
    reason = consistency_failure(result)
    sample_id = f"type{result.source.source[0]}"
    if reason is None:
        return SampleVerdict(sample_id, ACCEPTED)
    return SampleVerdict(sample_id, REJECTED_CONSISTENCY, detail=reason)


def sample_terminal_failure(sample: TmwpSample) -> Optional[str]:
    """Corpus-level faithfulness check: the stored solution's terminal line
    must re-derive the stored answer."""
    if not sample.solution.strip():
        return "sample has no solution"
    terminal = extract_terminal_answer(sample.solution)
    if terminal is None:
        return "solution has no terminal answer line"
    if not answers_match(terminal, sample.answer):
        return f"solution concludes {terminal!r} but answer is {format_answer(sample.answer)!r}"
    return None


# ------------------------------------------------------------------ leakage


class _PreparedReferences:
    def __init__(self, references: Iterable[str], order: int):
        self.order = order
        self.entries = []
        for text in references:
            tokens = tokenize(text)
            if tokens:
                self.entries.append((text, _ngram_counts(tokens, order), len(tokens)))

    def max_bleu(self, candidate: str) -> tuple[float, Optional[str]]:
        cand = tokenize(candidate)
        if not cand:
            raise EmptyText("cannot score an empty candidate")
        best, best_ref = 0.0, None
        for text, counts, ref_len in self.entries:
            score = _bleu_tokens(cand, counts, ref_len, self.order)
            if score > best:
                best, best_ref = score, text
        return best, best_ref


def leakage_filter(samples: Sequence[TmwpSample], cfg: FilterConfig) -> FilterReport:
    """Reject samples whose question exceeds BLEU delta against any
    reference question; verdicts record the argmax reference."""
    cfg.validate()
    prepared = _PreparedReferences(cfg.reference_set, cfg.bleu_order)
    report = FilterReport(delta=cfg.delta)
    for sample in samples:
        if not prepared.entries:
            report.verdicts.append(SampleVerdict(sample.id, ACCEPTED))
            continue
        score, reference = prepared.max_bleu(sample.question)
        if score > cfg.delta:
            report.verdicts.append(
                SampleVerdict(
                    sample.id, REJECTED_LEAKAGE, max_bleu=score, matched_reference=reference
                )
            )
        else:
            report.verdicts.append(SampleVerdict(sample.id, ACCEPTED, max_bleu=score))
    return report


class DedupScanner:
    """Stateful greedy first-wins near-duplicate detector over questions."""

    def __init__(self, threshold: Optional[float], order: int = 4):
        if threshold is not None and not 0 < threshold <= 1:
            raise ValueError(f"dedup threshold must be in (0, 1], got {threshold}")
        self.threshold = threshold
        self.order = order
        self._kept: list[tuple[str, list[Counter], int]] = []

    def duplicate_of(self, question: str) -> Optional[str]:
        """Earlier accepted question this one duplicates, if any; call
        `accept` when the sample is kept."""
        if self.threshold is None:
            return None
        cand = tokenize(question)
        for text, counts, ref_len in self._kept:
            if _bleu_tokens(cand, counts, ref_len, self.order) > self.threshold:
                return text
        return None

    def accept(self, question: str) -> None:
        if self.threshold is None:
            return
        cand = tokenize(question)
        self._kept.append((question, _ngram_counts(cand, self.order), len(cand)))


def dedup(samples: Sequence[TmwpSample], threshold: Optional[float], order: int = 4) -> FilterReport:
    """Greedy first-wins scan: a sample is a duplicate iff its question
    exceeds the BLEU threshold against an earlier accepted question."""
    report = FilterReport(delta=threshold if threshold is not None else 1.0)
    scanner = DedupScanner(threshold, order)
    for sample in samples:
        match = scanner.duplicate_of(sample.question)
        if match is not None:
            report.verdicts.append(
                SampleVerdict(sample.id, REJECTED_DUPLICATE, matched_reference=match)
            )
        else:
            scanner.accept(sample.question)
            report.verdicts.append(SampleVerdict(sample.id, ACCEPTED))
    return report
