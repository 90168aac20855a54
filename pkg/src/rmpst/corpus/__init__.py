"""Bundled example protocols."""
from __future__ import annotations

from importlib import resources

NAMES = ("g1", "g2", "g3", "independent", "higherlower", "pingpong1", "pingpong2", "pingpong3", "twobuyer",
         "negotiation", "fibonacci", "calculator")

# The protocols every bounded metatheory check runs on.
CHECKED = ("g1", "g2", "g3", "higherlower", "pingpong1", "pingpong2", "pingpong3", "twobuyer", "negotiation",
           "fibonacci", "calculator")


def source(name: str) -> str:
    return resources.files(__package__).joinpath(f"{name}.rscr").read_text(encoding="utf-8")


def path(name: str):
    return resources.files(__package__).joinpath(f"{name}.rscr")


def load(name: str):
    """The desugared global type of a bundled protocol."""
    from ..frontend import load_global
    return load_global(source(name))
