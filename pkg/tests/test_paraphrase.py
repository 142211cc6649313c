import json
from pathlib import Path

import pytest

from tmwpgen.answers import format_answer
from tmwpgen.paraphrase import (
    DecodingParams,
    MalformedReply,
    MockProvider,
    ProviderFailure,
    RateLimited,
    ReplyCache,
    RetryPolicy,
    StructureError,
    UnparseableReply,
    build_enrich_prompt,
    build_paraphrase_prompt,
    call_with_retries,
    default_exemplars,
    enrich_solution,
    extract_terminal_answer,
    make_provider,
    paraphrase_problem,
    parse_llm_output,
    problem_payload,
    solution_structure_ok,
    _load_asset,
)
from tmwpgen.schema import make_table

from conftest import generate_one

FIXTURES = Path(__file__).parent / "fixtures"


class ScriptedProvider:
    """Returns queued replies; raises queued exceptions."""

    def __init__(self, *replies):
        self.replies = list(replies)
        self.calls = 0

    def complete(self, prompt, params):
        self.calls += 1
        item = self.replies.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def test_scaffolds_are_pinned_byte_exact():
    golden = (FIXTURES / "paraphrase_scaffold.golden.txt").read_text(encoding="utf-8")
    assert _load_asset("paraphrase_scaffold.txt") == golden
    golden = (FIXTURES / "augment_scaffold.golden.txt").read_text(encoding="utf-8")
    assert _load_asset("augment_scaffold.txt") == golden


def test_paraphrase_prompt_contents(db):
    _, _, problem = generate_one(db, 15, seed=1)
    prompt = build_paraphrase_prompt(problem)
    assert "keep the original problem, data, and solution logic unchanged" in prompt
    assert "Here are two examples:" in prompt
    assert json.dumps(problem_payload(problem), ensure_ascii=False) in prompt
    assert prompt == build_paraphrase_prompt(problem)  # deterministic


def test_paraphrase_prompt_requires_two_exemplars(db):
    _, _, problem = generate_one(db, 22, seed=1)
    exemplars = default_exemplars()
    with pytest.raises(ValueError):
        build_paraphrase_prompt(problem, exemplars[:1])
    with pytest.raises(ValueError):
        build_paraphrase_prompt(problem, exemplars + exemplars)


def test_parse_llm_output_variants():
    reply = json.dumps(
        {"question": "q", "solution": "s", "answer": "1", "table_for_pd": {"A": ["1"]}, "choices": None}
    )
    fields = parse_llm_output(reply)
    assert fields["question"] == "q"
    assert fields["table_for_pd"] == {"A": ["1"]}

    fields = parse_llm_output('prefix text {"question": "q", "solution": "s", "answer": "2"} trailing words')
    assert fields["answer"] == "2"
    assert fields["table_for_pd"] is None  # falls back to the source

    with pytest.raises(UnparseableReply):
        parse_llm_output("no structured content at all")
    with pytest.raises(UnparseableReply):
        parse_llm_output('{"unrelated": 1}')


def test_echo_mock_round_trips(db):
    for type_id in (8, 15, 18, 20, 22):
        _, _, problem = generate_one(db, type_id, seed=2)
        result = paraphrase_problem(problem, MockProvider("echo"))
        assert result.question == problem.q_star
        assert result.solution == problem.s_star
        assert result.table == problem.t_star
        assert result.choices == problem.choices
        assert result.answer == problem.a_star


def test_background_mock_adds_scenario(db):
    _, _, problem = generate_one(db, 15, seed=3)
    result = paraphrase_problem(problem, MockProvider("background"))
    assert result.question != problem.q_star
    assert result.question.endswith(problem.q_star[0].lower() + problem.q_star[1:])
    assert len(result.question) > len(problem.q_star)
    assert result.answer == problem.a_star
    assert result.table == problem.t_star
    # deterministic given (prompt, seed)
    again = paraphrase_problem(problem, MockProvider("background"))
    assert again.question == result.question


def test_corrupt_mock_changes_answer(db):
    _, _, problem = generate_one(db, 22, seed=4)
    result = paraphrase_problem(problem, MockProvider("corrupt-answer"))
    assert format_answer(result.answer) != format_answer(problem.a_star)


def test_unparseable_reply_after_one_reask(db):
    _, _, problem = generate_one(db, 22, seed=5)
    provider = ScriptedProvider("prose only", "still prose")
    with pytest.raises(UnparseableReply):
        paraphrase_problem(problem, provider)
    assert provider.calls == 2  # exactly one re-ask


def test_malformed_reply_then_success(db):
    _, _, problem = generate_one(db, 22, seed=6)
    good = MockProvider("echo").complete(build_paraphrase_prompt(problem), DecodingParams())
    provider = ScriptedProvider(MalformedReply("boom"), good)
    result = paraphrase_problem(problem, provider)
    assert result.question == problem.q_star


def test_transport_retry_with_backoff():
    sleeps = []
    policy = RetryPolicy(max_attempts=3, backoff_seconds=1.0, sleep=sleeps.append)
    provider = ScriptedProvider(RateLimited("slow down"), RateLimited("again"), "done")
    assert call_with_retries(provider, "p", DecodingParams(), policy) == "done"
    assert sleeps == [1.0, 2.0]

    provider = ScriptedProvider(RateLimited("1"), RateLimited("2"), RateLimited("3"))
    with pytest.raises(RateLimited):
        call_with_retries(provider, "p", DecodingParams(), policy)


def test_reply_cache_round_trip(tmp_path, db):
    _, _, problem = generate_one(db, 22, seed=7)
    cache_path = tmp_path / "cache.jsonl"
    cache = ReplyCache(cache_path)
    echo = MockProvider("echo")

    class CountingProvider:
        def __init__(self):
            self.calls = 0

        def complete(self, prompt, params):
            self.calls += 1
            return echo.complete(prompt, params)

    provider = CountingProvider()
    first = paraphrase_problem(problem, provider, cache=cache)
    second = paraphrase_problem(problem, provider, cache=cache)
    assert provider.calls == 1
    assert first.question == second.question

    # a fresh cache instance resumes from disk
    resumed = ReplyCache(cache_path)
    third = paraphrase_problem(problem, provider, cache=resumed)
    assert provider.calls == 1
    assert third.raw_reply == first.raw_reply


def test_extract_terminal_answer():
    assert extract_terminal_answer("(1) a.\n(2) b.\nThe answer is 42.") == "42"
    assert extract_terminal_answer("The answer is 1.\nThe answer is 2.") == "2"
    assert extract_terminal_answer("no terminal here") is None
    assert extract_terminal_answer("the answer is yes") == "yes"


def test_enrich_solution_step_split(db):
    table = make_table(["Name", "Pages"], [["Ava", "84"], ["Ben", "92"]])
    s0 = "Add 84 and 92 to get 176. Divide by 2 to get 88."
    enriched = enrich_solution("What is the mean?", table, s0, MockProvider("step-split"))
    assert solution_structure_ok(enriched)
    assert enriched.splitlines()[-1] == "The answer is 88."
    assert enriched.splitlines()[0].startswith("(1)")


def test_enrich_solution_requires_source():
    table = make_table(["A"], [["1"]])
    with pytest.raises(ValueError):
        enrich_solution("q", table, "   ", MockProvider("step-split"))


def test_enrich_solution_structure_error():
    table = make_table(["A"], [["1"]])
    provider = ScriptedProvider("just prose", "more prose")
    with pytest.raises(StructureError):
        enrich_solution("q", table, "Some solution.", provider)
    assert provider.calls == 2


def test_enrich_prompt_embeds_inputs():
    table = make_table(["Name", "Pages"], [["Ava", "84"]])
    prompt = build_enrich_prompt("What is the mean?", table, "Original text.")
    assert "What is the mean?" in prompt
    assert "Ava" in prompt
    assert "Original text." in prompt


def test_make_provider_specs():
    assert isinstance(make_provider("mock:echo"), MockProvider)
    with pytest.raises(ValueError):
        make_provider("mock:nope")
    with pytest.raises(ValueError):
        make_provider("live", settings={})
    provider = make_provider(
        "live", settings={"endpoint": "http://x", "api_key": "k", "model": "m"}
    )
    assert provider.model == "m"
