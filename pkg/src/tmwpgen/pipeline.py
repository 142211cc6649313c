"""End-to-end generation: per-index template selection, binding sampling,
instantiation, optional paraphrasing, and filtering, with deterministic
per-sample RNG streams so output is byte-identical for a given seed
regardless of worker count."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional

from .answers import AnswerValue, FractionVal, DecVal, format_answer
from .paraphrase import (
    LlmProvider,
    ParaphraseResult,
    ReplyCache,
    RetryPolicy,
    paraphrase_problem,
)
from .quality import (
    ACCEPTED,
    REJECTED_CONSISTENCY,
    REJECTED_DUPLICATE,
    REJECTED_LEAKAGE,
    DedupScanner,
    FilterConfig,
    FilterReport,
    SampleVerdict,
    _PreparedReferences,
    consistency_failure,
)
from .schema import SchemaError, TmwpSample, answer_type_for, render_table_text
from .templates import (
    PlaceholderBinding,
    TemplateDb,
    TemplateProblem,
    instantiate,
    rng_for_sample,
    sample_bindings,
    select_template,
)


class GenerationExhausted(RuntimeError):
    """The accept/reject loop ran out of attempts before reaching count."""


def canonical_answer(value: AnswerValue) -> AnswerValue:
    """Denominator-1 fractions store as scale-0 decimals so serialized
    corpora round-trip exactly."""
    if isinstance(value, FractionVal) and value.denominator == 1:
        return DecVal(Decimal(value.numerator), 0)
    return value


def problem_to_sample(
    problem: TemplateProblem,
    type_id: Optional[int],
    sample_id: str,
    grade: int,
) -> TmwpSample:
    answer = canonical_answer(problem.a_star)
    kind = "multi_choice" if problem.choices else "free_text"
    sample = TmwpSample(
        id=sample_id,
        question=problem.q_star,
        table=problem.t_star,
        table_text=render_table_text(problem.t_star),
        answer=answer,
        solution=problem.s_star,
        kind=kind,
        answer_type=answer_type_for(kind, answer),
        grade=grade,
        split="generated",
        table_title=problem.table_title,
        choices=problem.choices,
        template_type=type_id,
        provenance="template",
    )
    sample.validate()
    return sample


def paraphrase_to_sample(
    result: ParaphraseResult,
    type_id: Optional[int],
    sample_id: str,
    grade: int,
) -> TmwpSample:
    answer = canonical_answer(result.answer)
    kind = "multi_choice" if result.choices else "free_text"
    sample = TmwpSample(
        id=sample_id,
        question=result.question,
        table=result.table,
        table_text=render_table_text(result.table),
        answer=answer,
        solution=result.solution,
        kind=kind,
        answer_type=answer_type_for(kind, answer),
        grade=grade,
        split="generated",
        table_title=result.source.table_title,
        choices=result.choices,
        original_solution=result.source.s_star,
        template_type=type_id,
        provenance="paraphrased",
    )
    sample.validate()
    return sample


@dataclass
class GenerationSettings:
    count: int
    master_seed: int = 0
    weights: Optional[dict[int, float]] = None
    paraphrase: str = "off"  # off | mock:<mode> | live
    provider: Optional[LlmProvider] = None
    retry_policy: RetryPolicy = field(default_factory=RetryPolicy)
    cache: Optional[ReplyCache] = None
    delta: float = 0.95
    reference_set: list[str] = field(default_factory=list)
    dedup_threshold: Optional[float] = None
    jobs: int = 1
    max_attempt_factor: int = 5

    def validate(self) -> None:
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must be in (0, 1], got {self.delta}")
        if self.paraphrase != "off" and self.provider is None:
            raise ValueError("paraphrasing requires a provider")


def _build_one(db: TemplateDb, settings: GenerationSettings, index: int):
    """Deterministic per-index work: returns (sample_id, sample or None,
    failure detail)."""
    rng = rng_for_sample(settings.master_seed, index)
    tpl = select_template(db, rng, settings.weights)
    binding = sample_bindings(tpl, rng, db.pools)
    problem = instantiate(tpl, binding)
    grade = rng.randint(*tpl.grade_range)
    sample_id = f"gen_s{settings.master_seed}_{index:06d}"
    if settings.paraphrase == "off":
        return sample_id, problem_to_sample(problem, tpl.type_id, sample_id, grade), None
    result = paraphrase_problem(
        problem, settings.provider, settings.retry_policy, cache=settings.cache
    )
    reason = consistency_failure(result)
    if reason is not None:
        return sample_id, None, reason
    try:
        return sample_id, paraphrase_to_sample(result, tpl.type_id, sample_id, grade), None
    except SchemaError as exc:
        return sample_id, None, f"paraphrase breaks sample schema: {exc}"


def generate_corpus(db: TemplateDb, settings: GenerationSettings) -> tuple[list[TmwpSample], FilterReport]:
    """Emit `count` accepted samples; rejected attempts are replaced by
    later indices and recorded in the report."""
    settings.validate()
    report = FilterReport(delta=settings.delta)
    references = _PreparedReferences(settings.reference_set, order=4)
    scanner = DedupScanner(settings.dedup_threshold)
    accepted: list[TmwpSample] = []
    max_attempts = max(settings.count * settings.max_attempt_factor, settings.count + 1000)
    next_index = 0

    while len(accepted) < settings.count:
        if next_index >= max_attempts:
            raise GenerationExhausted(
                f"only {len(accepted)}/{settings.count} samples accepted after "
                f"{next_index} attempts (see filter report)"
            )
        remaining = settings.count - len(accepted)
        batch = range(next_index, min(next_index + max(remaining + 8, 16), max_attempts))
        next_index = batch.stop
        if settings.jobs > 1:
            with ThreadPoolExecutor(max_workers=settings.jobs) as pool:
                results = list(pool.map(lambda i: _build_one(db, settings, i), batch))
        else:
            results = [_build_one(db, settings, i) for i in batch]
        for sample_id, sample, failure in results:
            if len(accepted) >= settings.count:
                break
            if sample is None:
                report.verdicts.append(
                    SampleVerdict(sample_id, REJECTED_CONSISTENCY, detail=failure)
                )
                continue
            if references.entries:
                score, matched = references.max_bleu(sample.question)
                if score > settings.delta:
                    report.verdicts.append(
                        SampleVerdict(
                            sample.id, REJECTED_LEAKAGE, max_bleu=score, matched_reference=matched
                        )
                    )
                    continue
            duplicate = scanner.duplicate_of(sample.question)
            if duplicate is not None:
                report.verdicts.append(
                    SampleVerdict(sample.id, REJECTED_DUPLICATE, matched_reference=duplicate)
                )
                continue
            scanner.accept(sample.question)
            report.verdicts.append(SampleVerdict(sample.id, ACCEPTED))
            accepted.append(sample)
    return accepted, report


def filter_corpus(samples: list[TmwpSample], cfg: FilterConfig) -> tuple[list[TmwpSample], FilterReport]:
    """Corpus-level filtering for already-serialized samples: terminal-line
    faithfulness, then leakage, then optional dedup."""
    from .quality import sample_terminal_failure

    cfg.validate()
    report = FilterReport(delta=cfg.delta)
    references = _PreparedReferences(cfg.reference_set, cfg.bleu_order)
    scanner = DedupScanner(cfg.dedup_threshold, cfg.bleu_order)
    kept: list[TmwpSample] = []
    for sample in samples:
        reason = sample_terminal_failure(sample)
        if reason is not None:
            report.verdicts.append(SampleVerdict(sample.id, REJECTED_CONSISTENCY, detail=reason))
            continue
        if references.entries:
            score, matched = references.max_bleu(sample.question)
            if score > cfg.delta:
                report.verdicts.append(
                    SampleVerdict(
                        sample.id, REJECTED_LEAKAGE, max_bleu=score, matched_reference=matched
                    )
                )
                continue
        duplicate = scanner.duplicate_of(sample.question)
        if duplicate is not None:
            report.verdicts.append(
                SampleVerdict(sample.id, REJECTED_DUPLICATE, matched_reference=duplicate)
            )
            continue
        scanner.accept(sample.question)
        report.verdicts.append(SampleVerdict(sample.id, ACCEPTED))
        kept.append(sample)
    return kept, report
