"""tmwpgen: template-driven generation, LLM paraphrasing, filtering, and
exact-match evaluation of tabular math word problems."""

__version__ = "0.1.0"

from .answers import (  # noqa: F401
    AnswerValue,
    BoolTextVal,
    DecVal,
    FractionVal,
    IntVal,
    TextVal,
    format_answer,
    fraction_value,
)
from .schema import (  # noqa: F401
    TableSpec,
    TmwpSample,
    compute_stats,
    parse_sample,
    read_corpus,
    render_table_text,
    serialize_sample,
    write_corpus,
)
from .templates import (  # noqa: F401
    PlaceholderBinding,
    ProblemTemplate,
    TemplateDb,
    TemplateProblem,
    builtin_db,
    instantiate,
    load_template_db,
    rng_for_sample,
    sample_bindings,
    select_template,
)
