import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from sphquad_kit.errors import DomainError
from sphquad_kit.helpers import to_angles
from sphquad_kit.types import Direction, QuadratureRule, RuleKind, RuleMeta

logger = logging.getLogger(__name__)


def _check_counts(m_theta: int, m_phi: int, minimum: int) -> None:
    for name, value in (("M_theta", m_theta), ("M_phi", m_phi)):
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < minimum:
            raise DomainError(f"{name} must be an integer >= {minimum}, got {value!r}")


def product_trapezoid(m_theta: int, m_phi: int) -> QuadratureRule:
    """
    Trapezoid x trapezoid product rule.

    theta_m = m pi / M_theta, phi_n = 2 pi n / M_phi, weight
    (pi / M_theta)(2 pi / M_phi) sin(theta_m). The M_phi copies of each pole
    collapse into a single node carrying their summed (zero) weight.
    Node order: north pole, rings by increasing theta, south pole.
    """
    _check_counts(m_theta, m_phi, 2)
    c = (math.pi / m_theta) * (2.0 * math.pi / m_phi)
    ring_phi = 2.0 * math.pi * np.arange(m_phi) / m_phi
    thetas, phis, weights = [0.0], [0.0], [0.0]
    for m in range(1, m_theta):
        theta = m * math.pi / m_theta
        thetas.extend([theta] * m_phi)
        phis.extend(ring_phi.tolist())
        weights.extend([c * math.sin(theta)] * m_phi)
    thetas.append(math.pi)
    phis.append(0.0)
    weights.append(0.0)
    return QuadratureRule(np.array(thetas), np.array(phis), np.array(weights),
                          RuleMeta(kind="trapezoid_trapezoid"))


def product_gauss_legendre(m_theta: int, m_phi: int) -> QuadratureRule:
    """
    Gauss-Legendre in cos(theta) times trapezoid in phi.

    Exact for every harmonic of degree <= min(2 M_theta - 1, M_phi - 1).
    """
    _check_counts(m_theta, m_phi, 1)
    mu, w = leggauss(m_theta)
    # leggauss is symmetric up to rounding; enforce it so mirrored rings match
    mu = 0.5 * (mu - mu[::-1])
    w = 0.5 * (w + w[::-1])
    order = np.argsort(-mu)
    ring_phi = 2.0 * math.pi * np.arange(m_phi) / m_phi
    thetas = np.repeat(np.arccos(mu[order]), m_phi)
    phis = np.tile(ring_phi, m_theta)
    weights = np.repeat(w[order] * 2.0 * math.pi / m_phi, m_phi)
    degree = min(2 * m_theta - 1, m_phi - 1)
    return QuadratureRule(thetas, phis, weights,
                          RuleMeta(kind="gauss_legendre_trapezoid", degree=degree))


def custom_rule(directions: Sequence[Direction], weights: Sequence[float],
                kind: RuleKind = "custom", degree: Optional[int] = None) -> QuadratureRule:
    if len(directions) != len(weights):
        raise DomainError("nodes and weights differ in length")
    return QuadratureRule(np.array([d.theta for d in directions]),
                          np.array([d.phi for d in directions]),
                          np.asarray(weights, dtype=float),
                          RuleMeta(kind=kind, degree=degree))


def rotate_rule(rule: QuadratureRule, rotation: np.ndarray) -> QuadratureRule:
    rotated = rule.vectors @ np.asarray(rotation, dtype=float).T
    thetas, phis = to_angles(rotated)
    return QuadratureRule(thetas, phis, rule.weights.copy(), rule.meta.model_copy())


def apply(rule: QuadratureRule, f: Callable, vectorized: bool = False):
    """
    Weighted sum of f over the nodes, accumulated in node order.

    With `vectorized=True` f receives the (K, 3) unit-vector array and must
    return K values; otherwise it is called once per Direction.
    """
    if vectorized:
        values = np.asarray(f(rule.vectors))
        if values.shape != (rule.size,):
            raise DomainError(f"vectorised integrand returned shape {values.shape}")
    else:
        values = np.array([f(p) for p in rule.nodes])
    total = 0.0
    for term in (rule.weights * values).tolist():
        total += term
    return total


class RuleManager:
    @staticmethod
    def product(kind: str, m_theta: int, m_phi: int) -> QuadratureRule:
        """
        Build a product rule.

        Args:
            kind: "tt" for trapezoid x trapezoid, "glt" for Gauss-Legendre x trapezoid.
            m_theta: Polar subdivisions (TT) or Gauss points (GLT).
            m_phi: Azimuthal subdivisions.

        Returns:
            QuadratureRule.

        Raises:
            DomainError: On an unknown kind or invalid counts.
        """
        builders = {"tt": product_trapezoid, "glt": product_gauss_legendre}
        if kind not in builders:
            raise DomainError(f"unknown product rule {kind!r}")
        rule = builders[kind](m_theta, m_phi)
        logger.info(f"Built {rule.meta.kind} rule with {rule.size} nodes")
        return rule
