"""Template augmentation: ask an LLM to derive a template for a new
question type from one demonstration, then validate the candidate by
instantiating it before it may join a user database.

Replies must use the declarative template schema; code-shaped replies are
rejected outright (NoTemplateFound), and candidates are admitted only when
every validation trial instantiates cleanly with full oracle agreement.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .generators import GeneratorError
from .paraphrase import (
    FIDELITY_DECODING,
    LlmProvider,
    ReplyCache,
    RetryPolicy,
    call_with_retries,
    iter_json_objects,
    _load_asset,
)
from .templates import (
    ConstraintUnsatisfiable,
    OracleMismatch,
    ProblemTemplate,
    TemplateDb,
    TemplateError,
    instantiate,
    sample_bindings,
    template_from_dict,
    template_to_dict,
    validate_template,
)


class NoTemplateFound(ValueError):
    """The reply contained no declarative template document."""


class AugmentationSchemaError(ValueError):
    """The reply's template document does not fit the schema."""


@dataclass(frozen=True)
class AugmentationRequest:
    demonstration_template: ProblemTemplate
    target_task_description: str
    prompt_text: str


@dataclass
class AdmissionReport:
    trials: int = 0
    successes: int = 0
    failures: dict = field(default_factory=dict)
    admitted: bool = False

    @property
    def agreement_rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "failures": dict(self.failures),
            "agreement_rate": round(self.agreement_rate, 4),
            "admitted": self.admitted,
        }


@dataclass
class CandidateTemplate:
    raw_llm_output: str
    parsed: Optional[ProblemTemplate] = None
    validation: Optional[AdmissionReport] = None


def build_augmentation_prompt(demo: ProblemTemplate, target: str) -> AugmentationRequest:
    """Fill the augmentation scaffold: the demonstration is the template
    serialized in the declarative schema, never executable code."""
    if not target.strip():
        raise ValueError("target task description must be non-empty")
    scaffold = _load_asset("augment_scaffold.txt")
    task_label = f'"{demo.question_pattern}"'
    prompt = scaffold.replace("<Task 1>", task_label)
    prompt = prompt.replace(
        "<Demonstration for Task 1>", json.dumps(template_to_dict(demo), ensure_ascii=False, indent=2)
    )
    prompt = prompt.replace("<Task 2>", target.strip())
    prompt += "\n" + _load_asset("augment_output_format.txt")
    return AugmentationRequest(demo, target.strip(), prompt)


_CODE_MARKERS = re.compile(r"```python|^\s*(?:def|import|from)\s+\w", re.MULTILINE)


def parse_augmented_template(raw: str, next_type_id: int, pools: Mapping[str, tuple]) -> ProblemTemplate:
    """Extract the first well-formed template document from a reply and
    assign it the next free type_id (>= 26)."""
    candidate_dict = None
    for obj, start in iter_json_objects(raw):
        if "question" in obj and "constraints" in obj and "family" in obj:
            prefix = raw[:start]
            if _CODE_MARKERS.search(prefix):
                continue
            candidate_dict = dict(obj)
            break
    if candidate_dict is None:
        if _CODE_MARKERS.search(raw):
            raise NoTemplateFound("reply is code-shaped, not a declarative template")
        raise NoTemplateFound("reply contains no template document")
    candidate_dict["type_id"] = max(next_type_id, 26)
    try:
        template = template_from_dict(candidate_dict)
        validate_template(template, pools)
    except (TemplateError, GeneratorError) as exc:
        raise AugmentationSchemaError(str(exc)) from exc
    return template


def admit_template(
    candidate: CandidateTemplate,
    pools: Mapping[str, tuple],
    n_trials: int = 100,
    rng: Optional[random.Random] = None,
) -> AdmissionReport:
    """Instantiate the candidate n_trials times; admit iff every trial
    samples a satisfying binding, substitutes completely, and agrees with
    the family oracle."""
    report = AdmissionReport()
    if candidate.parsed is None:
        report.failures["not_parsed"] = 1
        candidate.validation = report
        return report
    rng = rng or random.Random(0)
    for _ in range(n_trials):
        report.trials += 1
        try:
            binding = sample_bindings(candidate.parsed, rng, pools)
            instantiate(candidate.parsed, binding)
        except OracleMismatch:
            report.failures["oracle_mismatch"] = report.failures.get("oracle_mismatch", 0) + 1
            continue
        except ConstraintUnsatisfiable:
            report.failures["constraint_unsatisfiable"] = (
                report.failures.get("constraint_unsatisfiable", 0) + 1
            )
            break  # deterministic dead end; further trials would just burn the budget
        except (TemplateError, GeneratorError) as exc:
            key = type(exc).__name__
            report.failures[key] = report.failures.get(key, 0) + 1
            continue
        report.successes += 1
    report.admitted = report.trials == n_trials and report.successes == n_trials
    candidate.validation = report
    return report


def augment(
    db: TemplateDb,
    demo_type_id: int,
    target: str,
    provider: LlmProvider,
    n_trials: int = 100,
    policy: Optional[RetryPolicy] = None,
    rng: Optional[random.Random] = None,
    cache: Optional[ReplyCache] = None,
) -> CandidateTemplate:
    """End-to-end augmentation round trip against `provider`."""
    request = build_augmentation_prompt(db.get(demo_type_id), target)
    policy = policy or RetryPolicy()
    if cache is not None and cache.get(request.prompt_text) is not None:
        raw = cache.get(request.prompt_text)
    else:
        raw = call_with_retries(provider, request.prompt_text, FIDELITY_DECODING, policy)
        if cache is not None:
            cache.put(request.prompt_text, raw)
    candidate = CandidateTemplate(raw_llm_output=raw)
    try:
        candidate.parsed = parse_augmented_template(raw, db.next_type_id(), db.pools)
    except (NoTemplateFound, AugmentationSchemaError):
        candidate.validation = AdmissionReport(failures={"unparseable": 1})
        raise
    admit_template(candidate, db.pools, n_trials=n_trials, rng=rng)
    return candidate
