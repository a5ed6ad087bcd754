import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from sphquad_kit.constants import FOUR_PI, HG_AXIS, HG_G, WEIGHT_BAND, WEIGHT_GROUP_TOL
from sphquad_kit.errors import DomainError
from sphquad_kit.tools.harmonics import legendre_table
from sphquad_kit.tools.rules import apply
from sphquad_kit.types import (Direction, HGIntegrand, QuadratureRule,
                               SweepRow, WeightStats)

logger = logging.getLogger(__name__)


def default_integrand() -> HGIntegrand:
    return HGIntegrand(g=HG_G, axis=Direction.from_vector(HG_AXIS))


def hg_values(g: float, axis: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    mu = np.asarray(vectors) @ np.asarray(axis, dtype=float)
    return (1.0 - g * g) / (FOUR_PI * (1.0 + g * g - 2.0 * g * mu) ** 1.5)


def hg_value(k: HGIntegrand, xi: Direction) -> float:
    """Henyey-Greenstein phase function about the integrand axis; unit integral."""
    return float(hg_values(k.g, k.axis.vector(), xi.vector()))


def hg_legendre_sum(k: HGIntegrand, xi: Direction, n_max: int) -> float:
    """Truncated expansion sum_{n <= n_max} (2n + 1) g^n P_n(mu) / (4 pi)."""
    mu = float(np.clip(np.dot(k.axis.vector(), xi.vector()), -1.0, 1.0))
    # orthonormal m = 0 rows equal sqrt((2n + 1) / 4 pi) P_n
    rows = legendre_table(n_max, 0, mu)[:, 0]
    n = np.arange(n_max + 1)
    return float(np.sum(np.sqrt((2.0 * n + 1.0) / FOUR_PI) * k.g ** n * rows))


def tail_bound(N: int, g: float) -> float:
    """sum_{n > N} (2n + 1) |g|^n, the error bound of a positive rule exact to degree N."""
    if N < 0:
        raise DomainError("degree must be non-negative")
    a = abs(g)
    if a >= 1.0:
        raise DomainError("anisotropy must satisfy |g| < 1")
    return a ** (N + 1) * ((2.0 * N + 3.0) - (2.0 * N + 1.0) * a) / (1.0 - a) ** 2


def rule_id(rule: QuadratureRule) -> str:
    suffix = f"-N{rule.meta.degree}" if rule.meta.degree is not None else ""
    return f"{rule.meta.kind}{suffix}-K{rule.size}"


def error_sweep(rules: Sequence[QuadratureRule], k: Optional[HGIntegrand] = None,
                ids: Optional[Sequence[str]] = None) -> List[SweepRow]:
    """
    Absolute error |Q_K(f) - 1| of each rule on the phase function.

    Args:
        rules: Rules to benchmark.
        k: Integrand; g = 0.5 about (1/9, 4/9, 8/9) when omitted.
        ids: Row identifiers, derived from the rule metadata when omitted.

    Returns:
        One SweepRow per rule, in input order.
    """
    k = k or default_integrand()
    ids = list(ids) if ids is not None else [rule_id(r) for r in rules]
    if len(ids) != len(rules):
        raise DomainError("one id per rule is required")
    axis = k.axis.vector()
    rows = []
    for rid, rule in zip(ids, rules):
        q = apply(rule, lambda v: hg_values(k.g, axis, v), vectorized=True)
        rows.append(SweepRow(rule_id=rid, node_count=rule.size, degree=rule.meta.degree,
                             abs_error=abs(q - 1.0)))
        logger.debug(f"{rid}: |Q - 1| = {rows[-1].abs_error:.3e}")
    return rows


def _grouped_extreme(values: np.ndarray, target: float) -> int:
    return int(np.count_nonzero(np.abs(values - target) <= WEIGHT_GROUP_TOL))


def weight_stats(rule: QuadratureRule, band: Tuple[float, float] = WEIGHT_BAND,
                 bins: int = 20) -> WeightStats:
    """
    Weight extrema with multiplicities, histogram and the share of nodes in `band`.

    Zero-weight nodes (product-rule poles) are left out of the minimum and the
    histogram but counted in the band denominator.
    """
    w = rule.weights
    positive = w[w > 0.0]
    if positive.size == 0:
        raise DomainError("rule has no positive weights")
    w_min, w_max = float(positive.min()), float(positive.max())
    counts, edges = np.histogram(positive, bins=bins)
    histogram = [(float(lo), float(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts)]
    lo, hi = band
    in_band = int(np.count_nonzero((w >= lo) & (w <= hi)))
    return WeightStats(
        node_count=rule.size,
        min_value=w_min,
        min_count=_grouped_extreme(positive, w_min),
        max_value=w_max,
        max_count=_grouped_extreme(positive, w_max),
        histogram=histogram,
        band=(float(lo), float(hi)),
        band_fraction=in_band / rule.size,
    )


class BenchManager:
    @staticmethod
    def compare(rules: Sequence[QuadratureRule], g: float = HG_G,
                axis: Sequence[float] = HG_AXIS) -> List[SweepRow]:
        """
        Run the phase-function sweep for a custom anisotropy and axis.

        Args:
            rules: Rules to benchmark.
            g: Anisotropy in (-1, 1).
            axis: Non-zero axis vector, normalised here.

        Returns:
            Rows sorted by absolute error.
        """
        try:
            k = HGIntegrand(g=g, axis=Direction.from_vector(axis))
        except ValueError as e:
            logger.error(f"Invalid integrand: {e}", exc_info=True)
            raise DomainError(str(e)) from e
        return sorted(error_sweep(rules, k), key=lambda r: r.abs_error)

    @staticmethod
    def efficiency(rule: QuadratureRule) -> float:
        """(N + 1)^2 / (3 K), one for a rule as efficient as an ideal design."""
        if rule.meta.degree is None:
            raise DomainError("rule has no recorded degree")
        return (rule.meta.degree + 1) ** 2 / (3.0 * rule.size)
