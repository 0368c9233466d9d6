"""Triangulations shipped with the package."""
from importlib import resources

from .errors import InputError
from .triangulation import Triangulation, parse_triangulation

SAMPLES = ("free_tet", "one_tet_one_edge", "one_tet_two_edge", "one_tet_three_edge",
           "two_tet_one_edge", "two_tet_two_edge")


def sample_path(name: str):
    if name not in SAMPLES:
        raise InputError(f"unknown sample {name!r}; choose from {', '.join(SAMPLES)}")
    return resources.files("reltv") / "data" / f"{name}.json"


def load_sample(name: str) -> Triangulation:
    return parse_triangulation(sample_path(name).read_text(encoding="utf-8"))
