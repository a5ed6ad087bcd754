import re
from typing import List

from sphquad_kit.errors import DomainError

_ORBIT_TYPES = ("vertex", "edge", "face", "generic")
_TOKEN = re.compile(r"^(vertex|edge|face|generic)(?:x(\d+))?$")


def parse_recipe(text: str) -> List[str]:
    """
    Expand a recipe such as "vertex,genericx32" into a list of orbit types.

    Pinned types (vertex, edge, face) may appear at most once.
    """
    recipe: List[str] = []
    for raw in text.split(","):
        token = raw.strip().lower()
        match = _TOKEN.match(token)
        if not match:
            raise DomainError(f"unrecognised recipe token {raw!r}")
        count = int(match.group(2)) if match.group(2) else 1
        if count < 1:
            raise DomainError(f"orbit count must be positive in {raw!r}")
        recipe.extend([match.group(1)] * count)
    validate_recipe(recipe)
    return recipe


def validate_recipe(recipe: List[str]) -> None:
    if not recipe:
        raise DomainError("recipe is empty")
    for orbit_type in recipe:
        if orbit_type not in _ORBIT_TYPES:
            raise DomainError(f"unknown orbit type {orbit_type!r}")
    for pinned in ("vertex", "edge", "face"):
        if recipe.count(pinned) > 1:
            raise DomainError(f"{pinned} orbit appears more than once")


def format_recipe(recipe: List[str]) -> str:
    parts = []
    for orbit_type in _ORBIT_TYPES:
        count = recipe.count(orbit_type)
        if count == 1:
            parts.append(orbit_type)
        elif count > 1:
            parts.append(f"{orbit_type}x{count}")
    return ",".join(parts)
