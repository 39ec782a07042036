"""Bundled example programs."""

from __future__ import annotations

from importlib import resources

FILES = ("majority.ppl", "selection.ppl", "coin.ppl", "corpus.ppl")


def source(name: str) -> str:
    if not name.endswith(".ppl"):
        name += ".ppl"
    return resources.files(__name__).joinpath(name).read_text()


def load(name: str):
    from ..frontend import load_program
    return load_program(source(name))
