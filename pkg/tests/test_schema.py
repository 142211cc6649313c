import json
import random
from decimal import Decimal

import pytest

from tmwpgen.answers import DecVal, FractionVal, IntVal
from tmwpgen.schema import (
    CorpusParseError,
    InvariantViolation,
    MissingField,
    SplitStats,
    TmwpSample,
    TypeMismatch,
    compute_stats,
    infer_layout,
    ingest_tabmwp_file,
    make_table,
    parse_sample,
    read_corpus,
    render_table_text,
    serialize_sample,
    table_hash,
    write_corpus,
)

from conftest import generate_one_sample


def _mc_record(**overrides):
    record = {
        "id": "q1",
        "question": "Is the total greater than 10?",
        "choices": ["yes", "no"],
        "answer": "yes",
        "ques_type": "multi_choice",
        "ans_type": "boolean_text",
        "grade": 5,
        "split": "train",
        "table_for_pd": {"Item": ["apple"], "Count": ["4"]},
    }
    record.update(overrides)
    return record


def test_parse_minimal_multiple_choice_sample():
    sample = parse_sample(_mc_record())
    assert sample.kind == "multi_choice"
    assert sample.answer_type == "BOOL"
    assert sample.choices == ("yes", "no")
    sample.validate()


def test_free_text_with_choices_is_invariant_violation():
    record = _mc_record(ques_type="free_text", ans_type="integer_number", answer="4")
    with pytest.raises(InvariantViolation):
        parse_sample(record)


def test_missing_field_names_the_field():
    record = _mc_record()
    del record["question"]
    with pytest.raises(MissingField) as exc:
        parse_sample(record)
    assert "question" in str(exc.value)


def test_type_mismatch_names_the_field():
    with pytest.raises(TypeMismatch) as exc:
        parse_sample(_mc_record(grade="five"))
    assert "grade" in str(exc.value)


def test_answer_must_be_among_choices():
    with pytest.raises(InvariantViolation):
        parse_sample(_mc_record(answer="maybe"))


def test_round_trip_identity_across_all_types(db):
    for type_id in sorted(db.templates):
        sample = generate_one_sample(db, type_id, seed=3)
        wire = serialize_sample(sample)
        again = parse_sample(wire)
        assert again == sample, f"type {type_id} does not round-trip"
        assert serialize_sample(again) == wire


def test_serialize_rejects_unreduced_fraction(db):
    sample = generate_one_sample(db, 21, seed=1)
    bad = TmwpSample(**{**sample.__dict__, "answer": FractionVal(2, 4)})
    with pytest.raises(InvariantViolation):
        serialize_sample(bad)


def test_generated_stem_leaf_serializes_with_two_columns(db):
    sample = generate_one_sample(db, 8, seed=2)
    wire = serialize_sample(sample)
    assert list(wire["table_for_pd"].keys()) == ["Stem", "Leaf"]
    assert wire["layout"] == "stem-leaf"


def test_render_table_text_minimal_and_deterministic():
    table = make_table(["x"], [["5"]])
    text = render_table_text(table)
    assert text.splitlines() == ["x", "5"]
    assert render_table_text(table) == text


def test_render_stem_leaf_line_count():
    table = make_table(["Stem", "Leaf"], [["6", "4 6 6"], ["7", "0 2"]], "stem-leaf")
    assert len(render_table_text(table).splitlines()) == 3


def test_stem_leaf_invariants_enforced():
    with pytest.raises(InvariantViolation):
        make_table(["Stem", "Leaf"], [["7", "0 2"], ["6", "4"]], "stem-leaf")
    with pytest.raises(InvariantViolation):
        make_table(["Stem", "Leaf"], [["6", "6 4"]], "stem-leaf")


def test_price_list_invariant():
    with pytest.raises(InvariantViolation):
        make_table(["Item", "Price"], [["pen", "1.2"]], "price-list")
    make_table(["Item", "Price"], [["pen", "$1.25"]], "price-list").validate()


def test_infer_layout_variants():
    assert infer_layout(["Stem", "Leaf"], [["6", "4 6"]]) == "stem-leaf"
    assert infer_layout(["Item", "Price"], [["pen", "$1.25"]]) == "price-list"
    assert infer_layout(["", "A", "B"], [["x", "1", "2"]]) == "two-way-count"
    assert infer_layout(["Color", "Frequency"], [["red", "3"]]) == "frequency"
    assert infer_layout(["Name", "Pages"], [["Ava", "84"]]) == "key-value"
    # stem-leaf shaped but invariant-violating falls back to key-value
    assert infer_layout(["Stem", "Leaf"], [["7", "1"], ["6", "2"]]) == "key-value"


def test_compute_stats_empty_and_dedup(db):
    empty = compute_stats([])
    assert isinstance(empty, SplitStats)
    assert empty.totals.questions == 0

    a = generate_one_sample(db, 22, seed=5)
    b = TmwpSample(**{**a.__dict__, "id": "twin"})
    stats = compute_stats([a, b])
    assert stats.totals.questions == 2
    assert stats.totals.distinct_tables == 1


def test_compute_stats_counts_and_permutation_invariance(small_corpus):
    stats = compute_stats(small_corpus)
    assert stats.totals.questions == len(small_corpus)
    assert stats.totals.free_text + stats.totals.multiple_choice == stats.totals.questions
    shuffled = list(small_corpus)
    random.Random(0).shuffle(shuffled)
    assert compute_stats(shuffled) == stats


def test_table_hash_ignores_nothing_but_title(db):
    t1 = make_table(["A", "B"], [["1", "2"]])
    t2 = make_table(["A", "B"], [["1", "2"]])
    t3 = make_table(["A", "B"], [["1", "3"]])
    assert table_hash(t1) == table_hash(t2)
    assert table_hash(t1) != table_hash(t3)


def test_ingest_tabmwp_format(tmp_path):
    problems = {
        "1": {
            "question": "How many apples?",
            "choices": None,
            "answer": "4",
            "unit": None,
            "table_title": "Fruit",
            "table": "Item | Count\napple | 4",
            "table_for_pd": {"Item": ["apple"], "Count": [4]},
            "solution": "There are 4 apples.",
            "ques_type": "free_text",
            "ans_type": "integer_number",
            "grade": 3,
        },
        "2": {
            "question": "Is it red?",
            "choices": ["yes", "no"],
            "answer": "no",
            "unit": None,
            "table_title": None,
            "table": "Item | Count\napple | 4",
            "table_for_pd": {"Item": ["apple"], "Count": [4]},
            "solution": "",
            "ques_type": "multi_choice",
            "ans_type": "boolean_text",
            "grade": 7,
        },
    }
    path = tmp_path / "problems_dev.json"
    path.write_text(json.dumps(problems), encoding="utf-8")
    samples = ingest_tabmwp_file(path)
    assert len(samples) == 2
    assert all(s.split == "valid" for s in samples)  # dev aliases to valid
    assert samples[0].answer == IntVal(4)
    stats = compute_stats(samples)
    assert stats.per_split["valid"].with_solution == 1
    assert stats.per_split["valid"].distinct_tables == 1


def test_corpus_error_names_line(tmp_path, small_corpus):
    path = tmp_path / "corpus.jsonl"
    write_corpus(path, small_corpus[:2])
    lines = path.read_text(encoding="utf-8").splitlines()
    lines.insert(2, "{not json")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(CorpusParseError) as exc:
        read_corpus(path)
    assert exc.value.line == 3


def test_write_read_corpus_round_trip(tmp_path, small_corpus):
    path = tmp_path / "corpus.jsonl"
    write_corpus(path, small_corpus)
    assert read_corpus(path) == small_corpus


def test_answer_type_variant_consistency(small_corpus):
    for sample in small_corpus:
        if sample.answer_type == "INT":
            assert isinstance(sample.answer, IntVal)
        elif sample.answer_type == "DEC":
            assert isinstance(sample.answer, (DecVal, FractionVal))
        elif sample.answer_type == "BOOL":
            assert sample.kind == "multi_choice"
