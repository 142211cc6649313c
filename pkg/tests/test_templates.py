import json
import random
from collections import Counter
from decimal import Decimal

import pytest

from tmwpgen.answers import DecVal, IntVal
from tmwpgen.templates import (
    ConstraintUnsatisfiable,
    DuplicateTypeId,
    EmptyDb,
    OracleMismatch,
    ParseError,
    PlaceholderBinding,
    TemplateDb,
    UndeclaredPlaceholder,
    build_db,
    builtin_db,
    dump_db,
    instantiate,
    load_template_db,
    rng_for_sample,
    sample_bindings,
    select_template,
    template_from_dict,
    template_to_dict,
    validate_template,
)

from conftest import generate_one


def _mean_template_dict(**overrides):
    base = {
        "type_id": 50,
        "family": {"group": "stats", "stat": "mean"},
        "answer_rule": "stats.mean",
        "grade_range": [3, 7],
        "question": "What is the mean of the numbers?",
        "table": {
            "layout": "key-value",
            "columns": ["Name", "Value"],
            "rows": [["{who1}", "{value1}"], ["{who2}", "{value2}"], ["{who3}", "{value3}"]],
        },
        "solution": [
            "The table lists one value per person.",
            "Read the numbers from the table: {values_csv}.",
            "So the mean is ({sum_expr}) / {n_values} = {answer}.",
        ],
        "constraints": [
            {"placeholder": "who1", "domain": {"kind": "category", "pool": "student_names", "count": 1, "distinct": True}},
            {"placeholder": "who2", "domain": {"kind": "category", "pool": "student_names", "count": 1, "distinct": True}},
            {
                "placeholder": "who3",
                "domain": {"kind": "category", "pool": "student_names", "count": 1, "distinct": True},
                "relations": [
                    {"op": "all_different", "args": ["who1", "who2", "who3"]},
                    {"op": "sum_divisible", "args": ["value1", "value2", "value3"]},
                ],
            },
            {"placeholder": "value1", "domain": {"kind": "int_range", "lo": 5, "hi": 5}},
            {"placeholder": "value2", "domain": {"kind": "int_range", "lo": 5, "hi": 5}},
            {"placeholder": "value3", "domain": {"kind": "int_range", "lo": 5, "hi": 5}},
        ],
    }
    base.update(overrides)
    return base


def test_builtin_db_has_25_types(db):
    assert sorted(db.templates) == list(range(1, 26))


def test_undeclared_placeholder_in_question_rejected(db):
    data = _mean_template_dict(question="How many numbers are at least {threshold}?")
    tpl = template_from_dict(data)
    with pytest.raises(UndeclaredPlaceholder):
        validate_template(tpl, db.pools)


def test_duplicate_type_id_rejected(db, tmp_path):
    doc = {
        "schema_version": 1,
        "pools": {"student_names": ["a", "b", "c", "d"]},
        "templates": [_mean_template_dict(), _mean_template_dict()],
    }
    path = tmp_path / "db.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(DuplicateTypeId):
        load_template_db(path, include_builtin=False)


def test_user_db_merges_over_builtin(db, tmp_path):
    doc = {"schema_version": 1, "pools": {}, "templates": [_mean_template_dict(type_id=26)]}
    path = tmp_path / "db.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    merged = load_template_db(path)
    assert len(merged) == 26
    assert merged.next_type_id() == 27


def test_answer_rule_must_match_family_group(db):
    data = _mean_template_dict(answer_rule="trading.total")
    tpl = template_from_dict(data)
    with pytest.raises(ParseError):
        validate_template(tpl, db.pools)


def test_select_template_single_and_weighted(db):
    rng = random.Random(0)
    single = TemplateDb(templates={22: db.get(22)}, pools=db.pools)
    assert select_template(single, rng).type_id == 22
    for _ in range(50):
        assert select_template(db, rng, weights={1: 1.0}).type_id == 1
    with pytest.raises(EmptyDb):
        select_template(TemplateDb(), rng)
    with pytest.raises(EmptyDb):
        select_template(db, rng, weights={1: 0.0})


def test_select_template_uniform_frequencies(db):
    # 250k draws: every type within 5% relative of the expected 10k
    rng = random.Random(1234)
    counts = Counter(select_template(db, rng).type_id for _ in range(250_000))
    for type_id in range(1, 26):
        assert abs(counts[type_id] - 10_000) <= 500, (type_id, counts[type_id])


def test_sample_bindings_degenerate_and_relations(db):
    tpl = template_from_dict(_mean_template_dict())
    binding = sample_bindings(tpl, random.Random(3), db.pools)
    assert binding["value1"] == 5  # IntRange(5, 5)

    tpl8 = db.get(8)
    for i in range(200):
        b = sample_bindings(tpl8, rng_for_sample(9, i), db.pools)
        values = [10 * s + d for j, s in enumerate(b["stems"], 1) for d in b[f"leaves_{j}"]]
        assert min(values) <= b["threshold"] <= max(values)

    tpl2 = db.get(2)
    for i in range(200):
        b = sample_bindings(tpl2, rng_for_sample(10, i), db.pools)
        assert b["range_start"] < b["range_end"]


def test_category_pool_exhaustion_is_unsatisfiable(db):
    data = _mean_template_dict()
    data["constraints"][0]["domain"] = {
        "kind": "category",
        "pool": "two_names",
        "count": 3,
        "distinct": True,
    }
    data["question"] = "What is the mean of the numbers?"
    db2 = build_db([data], {"two_names": ["a", "b"], "student_names": ["a", "b", "c"]})
    with pytest.raises(ConstraintUnsatisfiable):
        sample_bindings(db2.get(50), random.Random(0), db2.pools)


def test_instantiate_constant_mean():
    # spec's constant-list case: three 5s -> mean 5, division shown verbatim
    db2 = build_db([_mean_template_dict()], {"student_names": ["Ava", "Ben", "Carla", "Dev"]})
    tpl = db2.get(50)
    problem = instantiate(tpl, sample_bindings(tpl, random.Random(1), db2.pools))
    assert problem.a_star == IntVal(5)
    assert "(5 + 5 + 5) / 3 = 5" in problem.s_star
    assert problem.s_star.endswith("The answer is 5.")


def test_instantiate_stem_leaf_boundary_case(db):
    # {64, 66, 66, 70, 72} with threshold 66: computed >= count is 4
    tpl = db.get(8)
    binding = PlaceholderBinding(
        {
            "topic": "Quiz scores",
            "stems": (6, 7),
            "leaves_1": (4, 6, 6),
            "leaves_2": (0, 2),
            "threshold": 66,
        }
    )
    problem = instantiate(tpl, binding)
    assert problem.a_star == IntVal(4)
    assert problem.s_star.endswith("The answer is 4.")
    assert problem.q_star == "How many numbers are at least 66?"

    tpl9 = db.get(9)
    problem9 = instantiate(tpl9, binding)
    assert problem9.a_star == IntVal(2)


def test_instantiate_trading_remaining(db):
    tpl = db.get(15)
    binding = PlaceholderBinding(
        {
            "name": {"first": "Mia", "pronoun": "she"},
            "products": {"singular": "pencil", "plural": "pencils"},
            "price": Decimal("0.50"),
            "number": 2,
            "budget": Decimal("5.00"),
            "decoy1": {"singular": "pen", "plural": "pens"},
            "dprice1": Decimal("1.25"),
            "decoy2": {"singular": "ruler", "plural": "rulers"},
            "dprice2": Decimal("2.00"),
        }
    )
    problem = instantiate(tpl, binding)
    assert problem.a_star == DecVal(Decimal("4.00"), 2)
    assert problem.q_star == (
        "Mia has $5.00. How much money will Mia have left if she buys 2 pencils?"
    )
    assert "The answer is 4.00." in problem.s_star


def test_instantiate_cross_checks_answer_rule(db):
    # a min-family template whose rule selects max must trip the guard
    source = template_to_dict(db.get(10))
    source["answer_rule"] = "stem_leaf.max"
    source["type_id"] = 60
    db2 = build_db([source], db.pools)
    tpl = db2.get(60)
    binding = PlaceholderBinding(
        {"topic": "Quiz scores", "stems": (6, 7), "leaves_1": (4, 6), "leaves_2": (0, 2)}
    )
    with pytest.raises(OracleMismatch):
        instantiate(tpl, binding)


def test_substitution_completeness(db):
    for type_id in sorted(db.templates):
        for seed in (1, 2):
            _, _, problem = generate_one(db, type_id, seed)
            assert "{" not in problem.q_star and "}" not in problem.q_star
            assert "{" not in problem.s_star and "}" not in problem.s_star
            for row in problem.t_star.rows:
                for cell in row:
                    assert "{" not in cell


def test_determinism_byte_for_byte(db):
    for type_id in (1, 8, 15, 20, 24):
        _, _, p1 = generate_one(db, type_id, seed=5)
        _, _, p2 = generate_one(db, type_id, seed=5)
        assert p1 == p2


def test_template_dict_round_trip(db):
    for tpl in db.ordered():
        data = template_to_dict(tpl)
        again = template_from_dict(data)
        validate_template(again, db.pools)
        assert again == tpl


def test_dump_and_reload_builtin(db, tmp_path):
    path = tmp_path / "builtin.json"
    dump_db(db, path)
    reloaded = load_template_db(path, include_builtin=False)
    assert sorted(reloaded.templates) == sorted(db.templates)
    assert reloaded.get(8) == db.get(8)


def test_choice_rule_produces_choices(db):
    _, _, problem = generate_one(db, 18, seed=4)
    assert problem.choices is not None and len(problem.choices) == 2
    from tmwpgen.answers import format_answer

    assert format_answer(problem.a_star) in problem.choices
