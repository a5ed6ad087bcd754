import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from sphquad_kit.constants import FOUR_PI, RULE_FILE_MAGIC, RULE_KINDS
from sphquad_kit.errors import RuleFormatError
from sphquad_kit.types import QuadratureRule, RuleMeta

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _format_orbits(decomposition: List[Tuple[str, int]]) -> str:
    return ",".join(f"{name}:{count}" for name, count in decomposition)


def _parse_orbits(text: str, line: int) -> List[Tuple[str, int]]:
    out = []
    for item in text.split(","):
        try:
            name, count = item.split(":")
            out.append((name.strip(), int(count)))
        except ValueError:
            raise RuleFormatError(f"bad orbit entry {item!r}", line)
    return out


def write_rule(rule: QuadratureRule, path: PathLike) -> None:
    """
    Write a rule as text: header lines starting with '#', then one
    `theta phi weight` row per node with 17 significant digits.
    """
    lines = [
        f"# {RULE_FILE_MAGIC}",
        f"# kind {rule.meta.kind}",
        f"# degree {rule.meta.degree if rule.meta.degree is not None else 'none'}",
        f"# count {rule.size}",
    ]
    if rule.meta.orbit_decomposition:
        lines.append(f"# orbits {_format_orbits(rule.meta.orbit_decomposition)}")
    for t, p, w in zip(rule.thetas.tolist(), rule.phis.tolist(), rule.weights.tolist()):
        lines.append(f"{t:.17g} {p:.17g} {w:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
    logger.info(f"Wrote {rule.size}-node rule to {path}")


def read_rule(path: PathLike) -> QuadratureRule:
    """
    Read a rule file written by `write_rule`.

    Raises:
        RuleFormatError: On a missing magic line, malformed header or rows,
            or a row count that disagrees with the header.
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise RuleFormatError(f"cannot read {path}: {e}")
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"# {RULE_FILE_MAGIC}":
        raise RuleFormatError("missing format line", 1)

    header = {}
    rows = []
    for number, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if rows:
                raise RuleFormatError("header line after data", number)
            parts = line[1:].strip().split(None, 1)
            if len(parts) != 2:
                raise RuleFormatError(f"bad header {line!r}", number)
            header[parts[0]] = (parts[1].strip(), number)
            continue
        fields = line.split()
        if len(fields) != 3:
            raise RuleFormatError(f"expected 3 columns, found {len(fields)}", number)
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise RuleFormatError(f"non-numeric value in {line!r}", number)

    for key in ("kind", "degree", "count"):
        if key not in header:
            raise RuleFormatError(f"missing '{key}' header")
    kind, kind_line = header["kind"]
    if kind not in RULE_KINDS:
        raise RuleFormatError(f"unknown rule kind {kind!r}", kind_line)
    degree_text, degree_line = header["degree"]
    count_text, count_line = header["count"]
    try:
        degree: Optional[int] = None if degree_text == "none" else int(degree_text)
        count = int(count_text)
    except ValueError:
        raise RuleFormatError("degree and count must be integers", min(degree_line, count_line))
    if count != len(rows):
        raise RuleFormatError(f"header announces {count} nodes, found {len(rows)}", count_line)
    if count == 0:
        raise RuleFormatError("rule has no nodes", count_line)
    orbits = None
    if "orbits" in header:
        orbits = _parse_orbits(*header["orbits"])

    data = np.array(rows)
    rule = QuadratureRule(data[:, 0], data[:, 1], data[:, 2],
                          RuleMeta(kind=kind, degree=degree, orbit_decomposition=orbits))
    total = rule.weight_sum
    if not math.isclose(total, FOUR_PI, abs_tol=1e-6):
        logger.warning(f"Weights in {path} sum to {total:.12g}, not 4*pi")
    return rule
