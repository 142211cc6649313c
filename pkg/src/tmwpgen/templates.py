"""Declarative problem templates: database loading, constraint-driven
binding sampling, and instantiation.

Templates are data, not code. A template owns a question pattern, a table
pattern, an answer rule, ordered solution step patterns, and one constraint
per placeholder. Patterns reference bindings as {name} or {name.attr} (for
structured pool entries such as name/pronoun or singular/plural pairs).
Solution steps may additionally reference the family's derived slots
(computed enumerations, sums, and the answer); question and table patterns
may not.

Oracle-relevant placeholders use canonical names so the answer rules can
find them: count_value, range_start, range_end, threshold (stem-leaf);
number/number1..3, products/product1s..3s, budget (trading); column, row1,
row2 (comparison); row, col, category (probability).
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

from .answers import AnswerValue, DecVal, FractionVal, format_answer
from .generators import (
    DERIVED_SLOTS,
    GeneratorError,
    GeneratorFamily,
    brute_force_reference,
    family_oracle,
    render_solution,
)
from .schema import LAYOUTS, TableSpec, make_table


class TemplateError(ValueError):
    """Base class for template database problems."""


class ParseError(TemplateError):
    pass


class DuplicateTypeId(TemplateError):
    pass


class UndeclaredPlaceholder(TemplateError):
    pass


class EmptyDb(TemplateError):
    pass


class ConstraintUnsatisfiable(TemplateError):
    """Binding sampling exhausted its retry budget (or a pool is too small)."""


class OracleMismatch(TemplateError):
    """answer_rule and the family reference disagree — internal bug guard."""


RETRY_BUDGET = 1000

SCHEMA_VERSION = 1


# ----------------------------------------------------------------- domains


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def validate(self) -> None:
        if self.lo > self.hi:
            raise ParseError(f"IntRange lo {self.lo} > hi {self.hi}")


@dataclass(frozen=True)
class DecRange:
    lo: Decimal
    hi: Decimal
    scale: int

    def validate(self) -> None:
        if self.lo > self.hi:
            raise ParseError(f"DecRange lo {self.lo} > hi {self.hi}")
        if self.scale < 0:
            raise ParseError("DecRange scale must be >= 0")


@dataclass(frozen=True)
class CategoryPool:
    pool: str
    count: Union[int, tuple[int, int]] = 1
    distinct: bool = True

    def count_range(self) -> tuple[int, int]:
        if isinstance(self.count, int):
            return (self.count, self.count)
        return self.count

    def validate(self) -> None:
        lo, hi = self.count_range()
        if lo < 1 or lo > hi:
            raise ParseError(f"CategoryPool count range ({lo}, {hi}) invalid")


@dataclass(frozen=True)
class DigitList:
    len_lo: int
    len_hi: int
    sorted: bool = True

    def validate(self) -> None:
        if self.len_lo < 0 or self.len_lo > self.len_hi:
            raise ParseError(f"DigitList length range ({self.len_lo}, {self.len_hi}) invalid")


Domain = Union[IntRange, DecRange, CategoryPool, DigitList]


@dataclass(frozen=True)
class Relation:
    op: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class ConstraintSpec:
    placeholder: str
    domain: Domain
    relations: tuple[Relation, ...] = ()


@dataclass(frozen=True)
class TablePattern:
    layout: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...] = ()
    stem_leaf_source: Optional[tuple[str, str]] = None  # (stems placeholder, leaf-list prefix)
    title_pattern: Optional[str] = None


@dataclass(frozen=True)
class ProblemTemplate:
    type_id: int
    family: GeneratorFamily
    question_pattern: str
    table_pattern: TablePattern
    answer_rule: str
    solution_pattern: tuple[str, ...]
    constraints: tuple[ConstraintSpec, ...]
    choice_rule: Optional[str] = None
    grade_range: tuple[int, int] = (3, 7)
    context_pattern: Optional[str] = None

    def constraint_map(self) -> dict[str, ConstraintSpec]:
        return {c.placeholder: c for c in self.constraints}

    def relations(self) -> list[Relation]:
        return [rel for c in self.constraints for rel in c.relations]


@dataclass(frozen=True)
class PlaceholderBinding:
    values: Mapping[str, Any]

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values


@dataclass(frozen=True)
class TemplateProblem:
    q_star: str
    t_star: TableSpec
    a_star: AnswerValue
    s_star: str
    source: tuple[int, PlaceholderBinding]
    table_title: Optional[str] = None
    choices: Optional[tuple[str, ...]] = None


@dataclass
class TemplateDb:
    templates: dict[int, ProblemTemplate] = field(default_factory=dict)
    pools: dict[str, tuple] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.templates)

    def get(self, type_id: int) -> ProblemTemplate:
        if type_id not in self.templates:
            raise TemplateError(f"no template with type_id {type_id}")
        return self.templates[type_id]

    def ordered(self) -> list[ProblemTemplate]:
        return [self.templates[k] for k in sorted(self.templates)]

    def next_type_id(self) -> int:
        return max([25] + list(self.templates)) + 1


# ------------------------------------------------------------ substitution

_REF_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)(?:\.([A-Za-z_][A-Za-z0-9_]*))?\}")


def pattern_refs(pattern: str) -> list[tuple[str, Optional[str]]]:
    return [(m.group(1), m.group(2)) for m in _REF_RE.finditer(pattern)]


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        raise TemplateError(f"boolean binding value {value!r}")
    if isinstance(value, (int, str)):
        return str(value)
    if isinstance(value, Decimal):
        return str(value)
    if isinstance(value, (tuple, list)):
        return " ".join(format_value(v) for v in value)
    raise TemplateError(f"cannot render binding value {value!r}")


def substitute(pattern: str, binding: Mapping[str, Any], extra: Optional[Mapping[str, str]] = None) -> str:
    """Resolve {name} and {name.attr} references against a binding plus
    optional derived slots."""

    def resolve(match: re.Match) -> str:
        name, attr = match.group(1), match.group(2)
        if name not in binding:
            if extra and name in extra and attr is None:
                return str(extra[name])
            raise UndeclaredPlaceholder(f"pattern references undeclared placeholder {name!r}")
        value = binding[name]
        if isinstance(value, dict):
            if attr is None:
                raise TemplateError(f"structured placeholder {name!r} needs an attribute reference")
            if attr not in value:
                raise TemplateError(f"placeholder {name!r} has no attribute {attr!r}")
            return str(value[attr])
        if attr is not None:
            raise TemplateError(f"placeholder {name!r} is scalar; attribute {attr!r} not allowed")
        return format_value(value)

    return _REF_RE.sub(resolve, pattern)


# ------------------------------------------------------------- db loading


def _domain_from_dict(data: Mapping) -> Domain:
    kind = data.get("kind")
    try:
        if kind == "int_range":
            domain: Domain = IntRange(int(data["lo"]), int(data["hi"]))
        elif kind == "dec_range":
            domain = DecRange(Decimal(str(data["lo"])), Decimal(str(data["hi"])), int(data["scale"]))
        elif kind == "category":
            count = data.get("count", 1)
            if isinstance(count, list):
                count = (int(count[0]), int(count[1]))
            domain = CategoryPool(str(data["pool"]), count, bool(data.get("distinct", True)))
        elif kind == "digit_list":
            lo, hi = data["len"]
            domain = DigitList(int(lo), int(hi), bool(data.get("sorted", True)))
        else:
            raise ParseError(f"unknown domain kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed domain {data!r}: {exc}") from exc
    domain.validate()
    return domain


def _domain_to_dict(domain: Domain) -> dict:
    if isinstance(domain, IntRange):
        return {"kind": "int_range", "lo": domain.lo, "hi": domain.hi}
    if isinstance(domain, DecRange):
        return {"kind": "dec_range", "lo": str(domain.lo), "hi": str(domain.hi), "scale": domain.scale}
    if isinstance(domain, CategoryPool):
        count: Any = domain.count if isinstance(domain.count, int) else list(domain.count)
        return {"kind": "category", "pool": domain.pool, "count": count, "distinct": domain.distinct}
    return {"kind": "digit_list", "len": [domain.len_lo, domain.len_hi], "sorted": domain.sorted}


def template_from_dict(data: Mapping) -> ProblemTemplate:
    try:
        family = GeneratorFamily.from_dict(data["family"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"template missing family: {exc}") from exc
    except GeneratorError as exc:
        raise ParseError(str(exc)) from exc
    table_data = data.get("table") or {}
    layout = table_data.get("layout")
    if layout not in LAYOUTS:
        raise ParseError(f"unknown table layout {layout!r}")
    stem_leaf_source = None
    if "stem_leaf" in table_data:
        src = table_data["stem_leaf"]
        stem_leaf_source = (str(src["stems"]), str(src["leaf_prefix"]))
    try:
        table_pattern = TablePattern(
            layout=layout,
            columns=tuple(str(c) for c in table_data["columns"]),
            rows=tuple(tuple(str(c) for c in row) for row in table_data.get("rows", [])),
            stem_leaf_source=stem_leaf_source,
            title_pattern=table_data.get("title"),
        )
        constraints = []
        for item in data.get("constraints", []):
            relations = tuple(
                Relation(str(r["op"]), tuple(str(a) for a in r.get("args", [])))
                for r in item.get("relations", [])
            )
            constraints.append(
                ConstraintSpec(str(item["placeholder"]), _domain_from_dict(item["domain"]), relations)
            )
        grade_range = tuple(int(g) for g in data.get("grade_range", (3, 7)))
        template = ProblemTemplate(
            type_id=int(data["type_id"]),
            family=family,
            question_pattern=str(data["question"]),
            table_pattern=table_pattern,
            answer_rule=str(data["answer_rule"]),
            solution_pattern=tuple(str(s) for s in data["solution"]),
            constraints=tuple(constraints),
            choice_rule=data.get("choice_rule"),
            grade_range=grade_range,  # type: ignore[arg-type]
            context_pattern=data.get("context"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, TemplateError):
            raise
        raise ParseError(f"malformed template: {exc}") from exc
    return template


def template_to_dict(tpl: ProblemTemplate) -> dict:
    table: dict[str, Any] = {"layout": tpl.table_pattern.layout, "columns": list(tpl.table_pattern.columns)}
    if tpl.table_pattern.title_pattern:
        table["title"] = tpl.table_pattern.title_pattern
    if tpl.table_pattern.stem_leaf_source:
        stems, prefix = tpl.table_pattern.stem_leaf_source
        table["stem_leaf"] = {"stems": stems, "leaf_prefix": prefix}
    if tpl.table_pattern.rows:
        table["rows"] = [list(r) for r in tpl.table_pattern.rows]
    out: dict[str, Any] = {
        "type_id": tpl.type_id,
        "family": tpl.family.to_dict(),
        "answer_rule": tpl.answer_rule,
        "grade_range": list(tpl.grade_range),
        "question": tpl.question_pattern,
        "table": table,
        "solution": list(tpl.solution_pattern),
        "constraints": [
            {
                "placeholder": c.placeholder,
                "domain": _domain_to_dict(c.domain),
                **(
                    {"relations": [{"op": r.op, "args": list(r.args)} for r in c.relations]}
                    if c.relations
                    else {}
                ),
            }
            for c in tpl.constraints
        ],
    }
    if tpl.context_pattern:
        out["context"] = tpl.context_pattern
    if tpl.choice_rule:
        out["choice_rule"] = tpl.choice_rule
    return out


_ORACLE_PARAMS = {
    ("stem_leaf", "count_value"): ("count_value",),
    ("stem_leaf", "range_cc"): ("range_start", "range_end"),
    ("stem_leaf", "range_co"): ("range_start", "range_end"),
    ("stem_leaf", "range_oo"): ("range_start", "range_end"),
    ("stem_leaf", "range_oc"): ("range_start", "range_end"),
    ("stem_leaf", "below_strict"): ("threshold",),
    ("stem_leaf", "below_weak"): ("threshold",),
    ("stem_leaf", "above_weak"): ("threshold",),
    ("stem_leaf", "above_strict"): ("threshold",),
    ("stem_leaf", "min"): (),
    ("stem_leaf", "max"): (),
    ("comparison", "more"): ("column", "row1", "row2"),
    ("comparison", "less"): ("column", "row1", "row2"),
    ("probability", "joint_cell"): ("row", "col"),
    ("probability", "category_fraction"): ("category",),
    ("stats", "mean"): (),
    ("stats", "median"): (),
    ("stats", "mode"): (),
    ("stats", "average"): (),
}


def _required_params(family: GeneratorFamily) -> tuple[str, ...]:
    if family.group == "trading":
        if family.item_count == 1:
            names: tuple[str, ...] = ("number", "products")
        else:
            names = tuple(
                n for i in range(1, family.item_count + 1) for n in (f"number{i}", f"product{i}s")
            )
        if family.mode == "remaining":
            names += ("budget",)
        return names
    selector = family.predicate or family.mode or family.direction or family.stat
    return _ORACLE_PARAMS[(family.group, selector)]


def validate_template(tpl: ProblemTemplate, pools: Mapping[str, tuple]) -> None:
    tpl.family.validate()
    if tpl.type_id < 1:
        raise ParseError(f"type_id must be >= 1, got {tpl.type_id}")
    lo, hi = tpl.grade_range
    if not (1 <= lo <= hi <= 8):
        raise ParseError(f"grade_range {tpl.grade_range} not within [1, 8]")

    rule_group = tpl.answer_rule.partition(".")[0]
    if rule_group != tpl.family.group:
        raise ParseError(
            f"answer_rule {tpl.answer_rule!r} is inconsistent with family group {tpl.family.group!r}"
        )
    _rule_family(tpl.answer_rule, tpl.family)  # validates the selector

    declared: dict[str, ConstraintSpec] = {}
    for constraint in tpl.constraints:
        if constraint.placeholder in declared:
            raise ParseError(f"placeholder {constraint.placeholder!r} declared more than once")
        if isinstance(constraint.domain, CategoryPool):
            if constraint.domain.pool not in pools:
                raise ParseError(f"unknown category pool {constraint.domain.pool!r}")
        declared[constraint.placeholder] = constraint

    derived = DERIVED_SLOTS[tpl.family.group]

    def check_refs(pattern: str, where: str, allow_derived: bool) -> None:
        for name, attr in pattern_refs(pattern):
            if allow_derived and name in derived and name not in declared:
                if attr is not None:
                    raise ParseError(f"derived slot {name!r} takes no attribute")
                continue
            if name not in declared:
                raise UndeclaredPlaceholder(f"{where} references undeclared placeholder {name!r}")
            domain = declared[name].domain
            if isinstance(domain, CategoryPool):
                entries = pools[domain.pool]
                structured = bool(entries) and isinstance(entries[0], dict)
                if structured and attr is None:
                    raise ParseError(
                        f"{where}: placeholder {name!r} draws structured entries; use {{{name}.attr}}"
                    )
                if structured and any(attr not in e for e in entries):
                    raise ParseError(f"pool {domain.pool!r} entries lack attribute {attr!r}")
                if not structured and attr is not None:
                    raise ParseError(f"{where}: placeholder {name!r} is plain text; drop .{attr}")
            elif attr is not None:
                raise ParseError(f"{where}: placeholder {name!r} is numeric; drop .{attr}")

    check_refs(tpl.question_pattern, "question pattern", allow_derived=False)
    if tpl.context_pattern:
        check_refs(tpl.context_pattern, "context pattern", allow_derived=False)
    if tpl.table_pattern.title_pattern:
        check_refs(tpl.table_pattern.title_pattern, "table title", allow_derived=False)
    for header in tpl.table_pattern.columns:
        check_refs(header, "table header", allow_derived=False)
    for row in tpl.table_pattern.rows:
        for cell in row:
            check_refs(cell, "table cell", allow_derived=False)
    for step in tpl.solution_pattern:
        check_refs(step, "solution step", allow_derived=True)
    if len(tpl.solution_pattern) < 3:
        raise ParseError(f"type {tpl.type_id}: solutions need >= 3 steps")

    if tpl.table_pattern.layout == "stem-leaf":
        if tpl.table_pattern.stem_leaf_source is None:
            raise ParseError("stem-leaf table patterns need a stem_leaf source")
        stems_ph, prefix = tpl.table_pattern.stem_leaf_source
        if stems_ph not in declared:
            raise UndeclaredPlaceholder(f"stem source {stems_ph!r} undeclared")
        if not any(name.startswith(prefix) for name in declared):
            raise UndeclaredPlaceholder(f"no leaf placeholders with prefix {prefix!r}")
    elif not tpl.table_pattern.rows:
        raise ParseError("non-stem-leaf table patterns need static rows")

    for name in _required_params(tpl.family):
        if name not in declared:
            raise ParseError(
                f"type {tpl.type_id}: family {tpl.family.group!r} needs placeholder {name!r}"
            )

    if tpl.choice_rule is not None:
        kind, _, rest = tpl.choice_rule.partition(":")
        if kind != "pair":
            raise ParseError(f"unknown choice rule {tpl.choice_rule!r}")
        for name in rest.split(","):
            if name.strip() not in declared:
                raise UndeclaredPlaceholder(f"choice rule references undeclared {name.strip()!r}")

    for rel in tpl.relations():
        if rel.op not in _RELATION_OPS:
            raise ParseError(f"unknown relation op {rel.op!r}")


def build_db(template_dicts: Sequence[Mapping], pools: Mapping[str, Sequence]) -> TemplateDb:
    db = TemplateDb(pools={name: tuple(entries) for name, entries in pools.items()})
    for data in template_dicts:
        tpl = template_from_dict(data)
        if tpl.type_id in db.templates:
            raise DuplicateTypeId(f"type_id {tpl.type_id} appears more than once")
        validate_template(tpl, db.pools)
        db.templates[tpl.type_id] = tpl
    return db


def builtin_db() -> TemplateDb:
    from .builtin_templates import POOLS, TEMPLATES

    return build_db(TEMPLATES, POOLS)


def load_template_db(path: Optional[str | Path] = None, include_builtin: bool = True) -> TemplateDb:
    """Load the built-in database, optionally merged with a user DB file.

    User files use the same schema and may add pools; their type_ids must
    not collide with existing ones.
    """
    db = builtin_db() if include_builtin else TemplateDb()
    if path is None:
        return db
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read template DB {path}: {exc}") from exc
    if not isinstance(document, dict) or "templates" not in document:
        raise ParseError(f"{path}: expected an object with a 'templates' list")
    if document.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"{path}: unsupported schema_version {document.get('schema_version')!r}")
    for name, entries in document.get("pools", {}).items():
        db.pools.setdefault(name, tuple(entries))
    for data in document["templates"]:
        tpl = template_from_dict(data)
        if tpl.type_id in db.templates:
            raise DuplicateTypeId(f"type_id {tpl.type_id} appears more than once")
        validate_template(tpl, db.pools)
        db.templates[tpl.type_id] = tpl
    return db


def dump_db(db: TemplateDb, path: str | Path) -> None:
    document = {
        "schema_version": SCHEMA_VERSION,
        "pools": {name: list(entries) for name, entries in sorted(db.pools.items())},
        "templates": [template_to_dict(tpl) for tpl in db.ordered()],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, ensure_ascii=False, indent=2)
        handle.write("\n")


# ----------------------------------------------------------------- sampling


def rng_for_sample(master_seed: int, index: int) -> random.Random:
    """Independent per-sample stream so generation parallelizes while
    staying reproducible."""
    digest = hashlib.sha256(f"{master_seed}:{index}".encode("ascii")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def select_template(
    db: TemplateDb, rng: random.Random, weights: Optional[Mapping[int, float]] = None
) -> ProblemTemplate:
    """Uniform draw over templates, or proportional to `weights` when given
    (types absent from the map get weight 0)."""
    if not db.templates:
        raise EmptyDb("template database is empty")
    ordered = db.ordered()
    if weights is None:
        return ordered[rng.randrange(len(ordered))]
    weight_list = [float(weights.get(tpl.type_id, 0.0)) for tpl in ordered]
    total = sum(weight_list)
    if total <= 0:
        raise EmptyDb("all template weights are zero")
    pick = rng.random() * total
    acc = 0.0
    for tpl, w in zip(ordered, weight_list):
        acc += w
        if pick < acc:
            return tpl
    return ordered[-1]


def _draw_domain(domain: Domain, pools: Mapping[str, tuple], rng: random.Random) -> Any:
    if isinstance(domain, IntRange):
        return rng.randint(domain.lo, domain.hi)
    if isinstance(domain, DecRange):
        step = Decimal(1).scaleb(-domain.scale)
        span = int((domain.hi - domain.lo) / step)
        return (domain.lo + step * rng.randint(0, span)).quantize(step)
    if isinstance(domain, DigitList):
        length = rng.randint(domain.len_lo, domain.len_hi)
        digits = [rng.randint(0, 9) for _ in range(length)]
        if domain.sorted:
            digits.sort()
        return tuple(digits)
    if isinstance(domain, CategoryPool):
        entries = pools[domain.pool]
        lo, hi = domain.count_range()
        count = rng.randint(lo, hi)
        if domain.distinct:
            if count > len(entries):
                raise ConstraintUnsatisfiable(
                    f"pool {domain.pool!r} has {len(entries)} entries, need {count} distinct"
                )
            drawn = rng.sample(list(entries), count)
        else:
            drawn = [entries[rng.randrange(len(entries))] for _ in range(count)]
        return drawn[0] if count == 1 else tuple(drawn)
    raise TemplateError(f"unknown domain {domain!r}")


def _as_number(value: Any) -> Fraction:
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Decimal):
        return Fraction(value)
    raise TemplateError(f"relation needs a numeric value, got {value!r}")


def _resolve_arg(arg: str, binding: dict) -> Any:
    if arg in binding:
        return binding[arg]
    try:
        return int(arg)
    except ValueError:
        try:
            return Decimal(arg)
        except ArithmeticError:
            raise TemplateError(f"relation argument {arg!r} is neither a placeholder nor a number")


def _plot_values(binding: dict, stems_ph: str, leaf_prefix: str) -> list[int]:
    stems = binding[stems_ph]
    values = []
    for i, stem in enumerate(stems, start=1):
        for digit in binding.get(f"{leaf_prefix}{i}", ()):
            values.append(10 * int(stem) + int(digit))
    return values


def _relation_holds(rel: Relation, binding: dict) -> bool:
    op, args = rel.op, rel.args
    if op in ("lt", "le", "ne"):
        a, b = (_resolve_arg(x, binding) for x in args)
        if op == "ne" and not isinstance(a, (int, Decimal)):
            return a != b
        a, b = _as_number(a), _as_number(b)
        return {"lt": a < b, "le": a <= b, "ne": a != b}[op]
    if op == "all_different":
        seen = []
        for name in args:
            value = binding[name]
            if value in seen:
                return False
            seen.append(value)
        return True
    if op == "strictly_increasing":
        values = list(binding[args[0]])
        return all(a < b for a, b in zip(values, values[1:]))
    if op == "element_ge":
        floor = int(args[1])
        return all(int(v) >= floor for v in binding[args[0]])
    if op == "in_plot":
        target = int(_as_number(_resolve_arg(args[0], binding)))
        return target in _plot_values(binding, args[1], args[2])
    if op == "within_plot_range":
        values = _plot_values(binding, args[1], args[2])
        if not values:
            return False
        target = int(_as_number(_resolve_arg(args[0], binding)))
        return min(values) <= target <= max(values)
    if op == "plot_nonempty":
        return bool(_plot_values(binding, args[0], args[1]))
    if op == "budget_covers":
        budget = _as_number(_resolve_arg(args[0], binding))
        total = Fraction(0)
        for qty_name, price_name in zip(args[1::2], args[2::2]):
            total += _as_number(_resolve_arg(qty_name, binding)) * _as_number(
                _resolve_arg(price_name, binding)
            )
        return budget >= total
    if op == "unique_mode":
        counts: dict[Any, int] = {}
        for name in args:
            value = binding[name]
            counts[value] = counts.get(value, 0) + 1
        top = max(counts.values())
        return sum(1 for c in counts.values() if c == top) == 1
    if op == "sum_divisible":
        values = [int(binding[name]) for name in args]
        return sum(values) % len(values) == 0
    if op == "one_of":
        target = binding[args[0]]
        return any(binding[name] == target for name in args[1:])
    raise TemplateError(f"unknown relation op {rel.op!r}")


_RELATION_OPS = {
    "lt",
    "le",
    "ne",
    "all_different",
    "strictly_increasing",
    "element_ge",
    "in_plot",
    "within_plot_range",
    "plot_nonempty",
    "budget_covers",
    "unique_mode",
    "sum_divisible",
    "one_of",
}


def sample_bindings(tpl: ProblemTemplate, rng: random.Random, pools: Mapping[str, tuple]) -> PlaceholderBinding:
    """Rejection-sample a binding satisfying every constraint and relation."""
    relations = tpl.relations()
    for _ in range(RETRY_BUDGET):
        values = {c.placeholder: _draw_domain(c.domain, pools, rng) for c in tpl.constraints}
        if all(_relation_holds(rel, values) for rel in relations):
            return PlaceholderBinding(values)
    raise ConstraintUnsatisfiable(
        f"type {tpl.type_id}: no satisfying binding within {RETRY_BUDGET} attempts"
    )


# ------------------------------------------------------------ instantiation


def _rule_family(rule: str, family: GeneratorFamily) -> GeneratorFamily:
    """Family descriptor that computes what `rule` selects (structural
    parameters such as trading item_count come from the owning family)."""
    group, _, selector = rule.partition(".")
    if group == "stem_leaf":
        rule_family = GeneratorFamily("stem_leaf", predicate=selector)
    elif group == "trading":
        rule_family = GeneratorFamily("trading", mode=selector, item_count=family.item_count)
    elif group == "comparison":
        rule_family = GeneratorFamily("comparison", direction=selector)
    elif group == "probability":
        rule_family = GeneratorFamily("probability", mode=selector)
    elif group == "stats":
        rule_family = GeneratorFamily("stats", stat=selector)
    else:
        raise ParseError(f"unknown answer rule {rule!r}")
    rule_family.validate()
    return rule_family


def _oracle_params(tpl: ProblemTemplate, binding: PlaceholderBinding) -> dict:
    """Scalar, table-facing values for the oracle's canonical parameters.

    Structured entries resolve to their `singular` attribute (the form used
    as the table row label).
    """
    params = {}
    for name in _required_params(tpl.family):
        value = binding[name]
        if isinstance(value, dict):
            if "singular" not in value:
                raise TemplateError(f"structured placeholder {name!r} lacks a 'singular' attribute")
            value = value["singular"]
        params[name] = value
    return params


def build_table(tpl: ProblemTemplate, binding: PlaceholderBinding) -> TableSpec:
    pattern = tpl.table_pattern
    columns = [substitute(header, binding.values) for header in pattern.columns]
    if pattern.layout == "stem-leaf" and pattern.stem_leaf_source:
        stems_ph, prefix = pattern.stem_leaf_source
        rows = []
        for i, stem in enumerate(binding[stems_ph], start=1):
            leaves = binding.values.get(f"{prefix}{i}", ())
            rows.append((str(stem), " ".join(str(d) for d in leaves)))
    else:
        rows = [tuple(substitute(cell, binding.values) for cell in row) for row in pattern.rows]
    return make_table(columns, rows, pattern.layout)


def instantiate(tpl: ProblemTemplate, binding: PlaceholderBinding) -> TemplateProblem:
    """Fill the template: build the table, compute and cross-check the
    answer, and render the question and step-by-step solution."""
    table = build_table(tpl, binding)
    params = _oracle_params(tpl, binding)

    a_star = family_oracle(_rule_family(tpl.answer_rule, tpl.family), params, table)
    reference = brute_force_reference(tpl.family, params, table)
    if a_star != reference:
        raise OracleMismatch(
            f"type {tpl.type_id}: rule {tpl.answer_rule!r} computed "
            f"{format_answer(a_star)} but family reference computed {format_answer(reference)}"
        )

    question = substitute(tpl.question_pattern, binding.values)
    if tpl.context_pattern:
        question = substitute(tpl.context_pattern, binding.values) + " " + question

    solution = render_solution(
        tpl.family,
        params,
        table,
        tpl.solution_pattern,
        a_star,
        lambda step, extra: substitute(step, binding.values, extra),
    )

    title = substitute(tpl.table_pattern.title_pattern, binding.values) if tpl.table_pattern.title_pattern else None

    choices = None
    if tpl.choice_rule:
        _, _, rest = tpl.choice_rule.partition(":")
        choices = tuple(
            substitute("{%s}" % name.strip(), binding.values) for name in rest.split(",")
        )

    for text, where in ((question, "question"), (solution, "solution"), (title or "", "title")):
        if "{" in text or "}" in text:
            raise TemplateError(f"unresolved placeholder marker left in {where}: {text!r}")
    for row in table.rows:
        for cell in row:
            if "{" in cell or "}" in cell:
                raise TemplateError(f"unresolved placeholder marker left in table cell {cell!r}")
    if solution.count("The answer is") != 1:
        raise TemplateError("solution must contain exactly one terminal answer line")

    return TemplateProblem(
        q_star=question,
        t_star=table,
        a_star=a_star,
        s_star=solution,
        source=(tpl.type_id, binding),
        table_title=title,
        choices=choices,
    )
