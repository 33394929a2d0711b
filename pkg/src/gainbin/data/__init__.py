"""Bundled example models (debutanizer case study)."""
from importlib import resources

from ..model_io import GainModel, parse_model

FIXTURES = ("debutanizer", "debutanizer_scaled")


def fixture_path(name: str):
    return resources.files(__name__).joinpath(f"{name}.json")


def load_fixture(name: str) -> GainModel:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    return parse_model(fixture_path(name).read_text(encoding="utf-8"), "json")
