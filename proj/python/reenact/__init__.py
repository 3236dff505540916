"""Deterministic animation sequencing for crime-scene reconstruction."""

from ._reenact import (
    Project,
    ReenactError,
    Session,
    canonical_script,
    discrete_frechet,
    path_compare,
)

__all__ = [
    "Project",
    "ReenactError",
    "Session",
    "canonical_script",
    "discrete_frechet",
    "path_compare",
    "load",
    "parse",
]


def load(path):
    """Loads a .crimeproj file, or compiles a .crimescn script."""
    path = str(path)
    if path.endswith(".crimescn"):
        with open(path, encoding="utf-8") as f:
            return Project.from_script(f.read())
    return Project.load_file(path)


def parse(text):
    """Compiles scenario script text to a Project."""
    return Project.from_script(text)
