"""LLM paraphrasing: rewrites template problems into contextualized natural
problems and enriches free-form solutions into step-by-step ones.

Providers are pluggable. The bundled mock providers are deterministic given
(prompt, seed) so the whole pipeline, including the downstream filters, runs
offline: `echo` returns the problem unchanged, `background` prepends a
scenario sentence to the question, `corrupt-answer` breaks the answer field
(for exercising the consistency filter), and `step-split` rewrites a
free-form solution into numbered steps.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional, Protocol, Sequence

from .answers import AnswerValue, parse_answer_as, parse_rational
from .schema import SchemaError, TableSpec, make_table, render_table_text
from .templates import TemplateProblem


class ProviderFailure(RuntimeError):
    """Base class for typed provider failures."""


class Timeout(ProviderFailure):
    pass


class RateLimited(ProviderFailure):
    pass


class ServerError(ProviderFailure):
    pass


class MalformedReply(ProviderFailure):
    pass


class UnparseableReply(ValueError):
    """The reply (after the allowed re-ask) had no usable structured block."""


class StructureError(ValueError):
    """Enriched solution failed the numbered-steps structural check."""


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.7
    max_tokens: int = 1024
    seed: Optional[int] = None


# Stage defaults: diversity for paraphrasing, fidelity for enrichment and
# template augmentation.
PARAPHRASE_DECODING = DecodingParams(temperature=0.7)
FIDELITY_DECODING = DecodingParams(temperature=0.0)


class LlmProvider(Protocol):
    def complete(self, prompt: str, params: DecodingParams) -> str: ...


@dataclass
class RetryPolicy:
    max_attempts: int = 3  # transport-level attempts (timeout/rate-limit/5xx)
    backoff_seconds: float = 1.0
    reasks: int = 1  # re-asks after a malformed or unparseable reply
    sleep: Callable[[float], None] = time.sleep


def call_with_retries(provider: LlmProvider, prompt: str, params: DecodingParams, policy: RetryPolicy) -> str:
    delay = policy.backoff_seconds
    for attempt in range(1, policy.max_attempts + 1):
        try:
            return provider.complete(prompt, params)
        except (Timeout, RateLimited, ServerError):
            if attempt == policy.max_attempts:
                raise
            policy.sleep(delay)
            delay *= 2
    raise ProviderFailure("unreachable")


# ------------------------------------------------------------------ prompts


def _load_asset(name: str) -> str:
    return resources.files("tmwpgen.prompts").joinpath(name).read_text(encoding="utf-8")


def default_exemplars() -> list[dict]:
    return json.loads(_load_asset("paraphrase_examples.json"))


def problem_payload(problem: TemplateProblem) -> dict:
    """The five-field object a paraphrase prompt embeds and a reply returns."""
    from .answers import format_answer

    table_for_pd = {
        col: [row[i] for row in problem.t_star.rows]
        for i, col in enumerate(problem.t_star.columns)
    }
    return {
        "question": problem.q_star,
        "table_for_pd": table_for_pd,
        "choices": list(problem.choices) if problem.choices else None,
        "answer": format_answer(problem.a_star),
        "solution": problem.s_star,
    }


def build_paraphrase_prompt(problem: TemplateProblem, exemplars: Optional[Sequence[dict]] = None) -> str:
    if exemplars is None:
        exemplars = default_exemplars()
    if len(exemplars) != 2:
        raise ValueError(f"exactly two in-context exemplars required, got {len(exemplars)}")
    blocks = []
    for i, exemplar in enumerate(exemplars, start=1):
        blocks.append(
            f"Example {i}:\nProblem:\n{json.dumps(exemplar['problem'], ensure_ascii=False)}\n"
            f"Rewritten:\n{json.dumps(exemplar['rewritten'], ensure_ascii=False)}"
        )
    scaffold = _load_asset("paraphrase_scaffold.txt")
    prompt = scaffold.replace("<Two In-context Examples>", "\n\n".join(blocks))
    prompt = prompt.replace(
        "<Template-based Problem>", json.dumps(problem_payload(problem), ensure_ascii=False)
    )
    return prompt + "\n" + _load_asset("paraphrase_output_format.txt")


def build_enrich_prompt(question: str, table: TableSpec, original_solution: str) -> str:
    scaffold = _load_asset("enrich_scaffold.txt")
    prompt = scaffold.replace("<Question>", question)
    prompt = prompt.replace("<Table>", render_table_text(table))
    return prompt.replace("<Original Solution>", original_solution)


# ------------------------------------------------------------ reply parsing

_DECODER = json.JSONDecoder()


def iter_json_objects(text: str):
    """Yield (object, start_index) for every decodable JSON object in text."""
    idx = 0
    while True:
        start = text.find("{", idx)
        if start < 0:
            return
        try:
            obj, end = _DECODER.raw_decode(text, start)
        except json.JSONDecodeError:
            idx = start + 1
            continue
        if isinstance(obj, dict):
            yield obj, start
            idx = end
        else:
            idx = start + 1


def parse_llm_output(raw: str) -> dict:
    """First structured block carrying the required paraphrase keys.

    `table_for_pd` and `choices` may be absent (they fall back to the source
    problem); trailing commentary after the object is ignored.
    """
    for obj, _ in iter_json_objects(raw):
        if all(key in obj for key in ("question", "solution", "answer")):
            return {
                "question": obj["question"],
                "solution": obj["solution"],
                "answer": obj["answer"],
                "table_for_pd": obj.get("table_for_pd"),
                "choices": obj.get("choices"),
            }
    raise UnparseableReply("no JSON object with keys question/solution/answer in reply")


@dataclass(frozen=True)
class ParaphraseResult:
    source: TemplateProblem
    question: str
    solution: str
    table: TableSpec
    choices: Optional[tuple[str, ...]]
    answer: AnswerValue
    raw_reply: str


def _result_from_fields(problem: TemplateProblem, fields: dict, raw: str) -> ParaphraseResult:
    question = str(fields["question"]).strip()
    solution = str(fields["solution"]).strip()
    if not question or not solution:
        raise UnparseableReply("empty question or solution in reply")

    table = problem.t_star
    if fields.get("table_for_pd") is not None:
        table_for_pd = fields["table_for_pd"]
        if not isinstance(table_for_pd, dict) or not table_for_pd:
            raise UnparseableReply("table_for_pd in reply is not a column map")
        try:
            columns = [str(c) for c in table_for_pd.keys()]
            cell_lists = [[str(c) for c in cells] for cells in table_for_pd.values()]
            rows = list(zip(*cell_lists))
            table = make_table(columns, rows, problem.t_star.layout)
        except (SchemaError, TypeError) as exc:
            raise UnparseableReply(f"reply table is malformed: {exc}") from exc

    choices = problem.choices
    if fields.get("choices") is not None:
        raw_choices = fields["choices"]
        if not isinstance(raw_choices, list):
            raise UnparseableReply("choices in reply is not a list")
        choices = tuple(str(c) for c in raw_choices)

    answer = parse_answer_as(str(fields["answer"]), problem.a_star)
    return ParaphraseResult(
        source=problem,
        question=question,
        solution=solution,
        table=table,
        choices=choices,
        answer=answer,
        raw_reply=raw,
    )


def paraphrase_problem(
    problem: TemplateProblem,
    provider: LlmProvider,
    policy: Optional[RetryPolicy] = None,
    exemplars: Optional[Sequence[dict]] = None,
    cache: Optional["ReplyCache"] = None,
    params: DecodingParams = PARAPHRASE_DECODING,
) -> ParaphraseResult:
    """One paraphrase round trip. A malformed or unparseable reply earns
    exactly one re-ask; acceptance is the quality module's job."""
    policy = policy or RetryPolicy()
    prompt = build_paraphrase_prompt(problem, exemplars)
    last_error: Exception | None = None
    for _ in range(1 + policy.reasks):
        try:
            raw = _cached_call(provider, prompt, params, policy, cache)
            return _result_from_fields(problem, parse_llm_output(raw), raw)
        except (MalformedReply, UnparseableReply) as exc:
            last_error = exc
            if cache is not None:
                cache.invalidate(prompt)
    if isinstance(last_error, MalformedReply):
        raise ProviderFailure(str(last_error)) from last_error
    raise UnparseableReply(str(last_error)) from last_error


_STEP_LINE_RE = re.compile(r"^\s*(?:\(\d+\)|\d+[.)])\s+\S", re.MULTILINE)
_TERMINAL_RE = re.compile(r"the answer is\s*(.+?)\s*\.?\s*$", re.IGNORECASE)


def extract_terminal_answer(solution: str) -> Optional[str]:
    """Value of the last "The answer is X." line, if any."""
    matches = [
        _TERMINAL_RE.search(line) for line in solution.splitlines() if _TERMINAL_RE.search(line)
    ]
    if not matches:
        return None
    return matches[-1].group(1).strip()


def solution_structure_ok(text: str, min_steps: int = 2) -> bool:
    return len(_STEP_LINE_RE.findall(text)) >= min_steps and extract_terminal_answer(text) is not None


def enrich_solution(
    question: str,
    table: TableSpec,
    original_solution: str,
    provider: LlmProvider,
    policy: Optional[RetryPolicy] = None,
    cache: Optional["ReplyCache"] = None,
) -> str:
    """Rewrite a free-form solution into numbered steps plus a terminal
    answer line; one retry, then StructureError."""
    if not original_solution.strip():
        raise ValueError("original solution must be non-empty")
    policy = policy or RetryPolicy()
    prompt = build_enrich_prompt(question, table, original_solution)
    reply = ""
    for _ in range(1 + policy.reasks):
        reply = _cached_call(provider, prompt, FIDELITY_DECODING, policy, cache).strip()
        if solution_structure_ok(reply):
            return reply
        if cache is not None:
            cache.invalidate(prompt)
    raise StructureError(f"reply lacks numbered steps or a terminal answer line: {reply[:120]!r}")


def _cached_call(
    provider: LlmProvider,
    prompt: str,
    params: DecodingParams,
    policy: RetryPolicy,
    cache: Optional["ReplyCache"],
) -> str:
    if cache is not None:
        hit = cache.get(prompt)
        if hit is not None:
            return hit
    raw = call_with_retries(provider, prompt, params, policy)
    if cache is not None:
        cache.put(prompt, raw)
    return raw


# -------------------------------------------------------------------- cache


class ReplyCache:
    """Append-only JSONL cache of raw replies keyed by prompt hash, so
    interrupted runs resume without repeating provider calls."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._replies: dict[str, str] = {}
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as handle:
                for line in handle:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    self._replies[record["key"]] = record["reply"]

    @staticmethod
    def key_for(prompt: str) -> str:
        return hashlib.sha256(prompt.encode("utf-8")).hexdigest()

    def get(self, prompt: str) -> Optional[str]:
        return self._replies.get(self.key_for(prompt))

    def put(self, prompt: str, reply: str) -> None:
        key = self.key_for(prompt)
        with self._lock:
            self._replies[key] = reply
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps({"key": key, "reply": reply}, ensure_ascii=False) + "\n")

    def invalidate(self, prompt: str) -> None:
        with self._lock:
            self._replies.pop(self.key_for(prompt), None)


# ---------------------------------------------------------------- providers


_SCENARIOS = (
    "During the school fair on Saturday,",
    "While helping out at the community center,",
    "On a rainy afternoon at the library,",
    "At the end-of-term club meeting,",
    "While organizing the classroom supply shelf,",
    "After the neighborhood bake sale,",
    "During the science camp's opening week,",
    "While tallying results for the school newsletter,",
)


class MockProvider:
    """Deterministic offline provider. Modes: echo, background,
    corrupt-answer, step-split."""

    MODES = ("echo", "background", "corrupt-answer", "step-split", "augment-echo")

    def __init__(self, mode: str, seed: int = 0):
        if mode not in self.MODES:
            raise ValueError(f"unknown mock mode {mode!r}")
        self.mode = mode
        self.seed = seed

    def _pick(self, prompt: str, options: Sequence[str]) -> str:
        digest = hashlib.sha256(f"{self.seed}:{prompt}".encode("utf-8")).digest()
        return options[int.from_bytes(digest[:4], "big") % len(options)]

    def complete(self, prompt: str, params: DecodingParams) -> str:
        if self.mode == "step-split":
            return self._step_split(prompt)
        if self.mode == "augment-echo":
            return self._augment_echo(prompt)
        payload = self._last_object(prompt)
        if payload is None:
            raise MalformedReply("mock could not locate a problem payload in the prompt")
        if self.mode == "background":
            scenario = self._pick(prompt, _SCENARIOS)
            question = str(payload.get("question", ""))
            payload["question"] = f"{scenario} {question[0].lower() + question[1:] if question else question}"
        elif self.mode == "corrupt-answer":
            answer = str(payload.get("answer", ""))
            payload["answer"] = "9" + answer if parse_rational(answer) is not None else "not " + answer
        return json.dumps(payload, ensure_ascii=False)

    @staticmethod
    def _last_object(prompt: str) -> Optional[dict]:
        found = None
        for obj, _ in iter_json_objects(prompt):
            if all(key in obj for key in ("question", "solution", "answer")):
                found = dict(obj)
        return found

    def _step_split(self, prompt: str) -> str:
        marker = "Original solution:\n"
        source = prompt.split(marker, 1)[1] if marker in prompt else prompt
        sentences = [s.strip() for s in re.split(r"(?<=[.!?])\s+", source.strip()) if s.strip()]
        if not sentences:
            sentences = ["Restate the given information."]
        numbers = re.findall(r"\$?\d[\d,]*(?:\.\d+)?(?:/\d+)?", source)
        final = numbers[-1].lstrip("$") if numbers else sentences[-1].rstrip(".").split()[-1]
        lines = [f"({i}) {sentence}" for i, sentence in enumerate(sentences, start=1)]
        if len(lines) < 2:
            lines.append("(2) Carry out the computation described above.")
        lines.append(f"The answer is {final}.")
        return "\n".join(lines)

    @staticmethod
    def _augment_echo(prompt: str) -> str:
        found = None
        for obj, _ in iter_json_objects(prompt):
            if "question" in obj and "constraints" in obj:
                found = obj
        if found is None:
            raise MalformedReply("mock could not locate a demonstration template in the prompt")
        return "Here is the requested template:\n" + json.dumps(found, ensure_ascii=False)


class HttpProvider:
    """Minimal OpenAI-style chat-completions client."""

    def __init__(self, endpoint: str, api_key: str, model: str, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout = timeout

    def complete(self, prompt: str, params: DecodingParams) -> str:
        import requests

        body: dict[str, Any] = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if params.seed is not None:
            body["seed"] = params.seed
        try:
            response = requests.post(
                f"{self.endpoint}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except requests.Timeout as exc:
            raise Timeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise ServerError(str(exc)) from exc
        if response.status_code == 429:
            raise RateLimited(response.text[:200])
        if response.status_code >= 500:
            raise ServerError(f"{response.status_code}: {response.text[:200]}")
        if response.status_code != 200:
            raise ProviderFailure(f"{response.status_code}: {response.text[:200]}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise MalformedReply(f"unexpected response shape: {exc}") from exc


def make_provider(spec: str, seed: int = 0, settings: Optional[dict] = None) -> LlmProvider:
    """Build a provider from a CLI-style spec: "mock:<mode>" or "live"."""
    if spec.startswith("mock:"):
        return MockProvider(spec.split(":", 1)[1], seed=seed)
    if spec == "live":
        settings = settings or {}
        missing = [k for k in ("endpoint", "api_key", "model") if not settings.get(k)]
        if missing:
            raise ValueError(f"live provider needs settings: {', '.join(missing)}")
        return HttpProvider(
            settings["endpoint"],
            settings["api_key"],
            settings["model"],
            float(settings.get("timeout", 60.0)),
        )
    raise ValueError(f"unknown provider spec {spec!r}")
