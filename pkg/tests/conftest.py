from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import settings

from reparam_ppl import programs
from reparam_ppl.reparam import translate_program

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


@pytest.fixture(scope="session")
def compiled():
    """file name -> (validated program, translation table) for every bundled program."""
    out = {}
    for f in programs.FILES:
        program = programs.load(f)
        out[f] = (program, translate_program(program))
    return out


@pytest.fixture(scope="session")
def selection(compiled):
    return compiled["selection.ppl"]


def corpus_models(compiled_map):
    """(program, table, model name) for every distinct model in the bundled files."""
    seen, out = set(), []
    for f, (program, table) in compiled_map.items():
        for name in program.order:
            if name in seen:
                continue
            seen.add(name)
            out.append((program, table, name))
    return out
