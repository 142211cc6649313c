from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tmwpgen.pipeline import GenerationSettings, generate_corpus, problem_to_sample
from tmwpgen.templates import builtin_db, instantiate, rng_for_sample, sample_bindings


@pytest.fixture(scope="session")
def db():
    return builtin_db()


@pytest.fixture(scope="session")
def small_corpus(db):
    """120 deterministic template-stage samples across all types."""
    samples, _ = generate_corpus(db, GenerationSettings(count=120, master_seed=7))
    return samples


def generate_one(db, type_id: int, seed: int = 0):
    """One deterministic TemplateProblem of the given type."""
    tpl = db.get(type_id)
    rng = rng_for_sample(seed, type_id)
    binding = sample_bindings(tpl, rng, db.pools)
    return tpl, binding, instantiate(tpl, binding)


def generate_one_sample(db, type_id: int, seed: int = 0):
    tpl, binding, problem = generate_one(db, type_id, seed)
    rng = rng_for_sample(seed, 10_000 + type_id)
    grade = rng.randint(*tpl.grade_range)
    return problem_to_sample(problem, type_id, f"fix_{type_id}_{seed}", grade)
