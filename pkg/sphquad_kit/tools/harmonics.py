import logging
import math

import numpy as np

from sphquad_kit.constants import POLE_EPS
from sphquad_kit.errors import DomainError
from sphquad_kit.types import Direction, HarmonicIndex, SymmetryResiduals

logger = logging.getLogger(__name__)

_INV_SQRT_FOUR_PI = 1.0 / math.sqrt(4.0 * math.pi)


def _check_degree_order(n: int, m: int) -> None:
    if n < 0 or m < 0 or m > n:
        raise DomainError(f"invalid degree/order pair n={n}, m={m}")


def legendre_table(n_max: int, m: int, x) -> np.ndarray:
    """
    Orthonormal associated Legendre functions for fixed order.

    Row i holds the normalised function of degree m + i evaluated at `x`, so
    that the spherical harmonic is (-1)^m times the row times exp(i m phi).
    The three-term recurrence runs on normalised values and stays finite for
    degrees in the hundreds.

    Args:
        n_max: Highest degree.
        m: Order, 0 <= m <= n_max.
        x: Points in [-1, 1].

    Returns:
        Array of shape (n_max - m + 1, len(x)).
    """
    _check_degree_order(n_max, m)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > 1.0):
        raise DomainError("Legendre argument outside [-1, 1]")
    s = np.sqrt((1.0 - x) * (1.0 + x))
    out = np.zeros((n_max - m + 1, x.size))
    pmm = np.full(x.size, _INV_SQRT_FOUR_PI)
    for k in range(1, m + 1):
        pmm = pmm * math.sqrt((2.0 * k + 1.0) / (2.0 * k)) * s
    out[0] = pmm
    if n_max > m:
        out[1] = math.sqrt(2.0 * m + 3.0) * x * pmm
    for n in range(m + 2, n_max + 1):
        a = math.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
        b = math.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
        out[n - m] = a * (x * out[n - m - 1] - b * out[n - m - 2])
    return out


def legendre_table_derivative(n_max: int, m: int, x, table: np.ndarray = None) -> np.ndarray:
    """
    Polar-angle derivative of `legendre_table`, same layout.

    Values at exact poles are returned as zero.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if table is None:
        table = legendre_table(n_max, m, x)
    s = np.sqrt((1.0 - x) * (1.0 + x))
    pole = s < POLE_EPS
    s_safe = np.where(pole, 1.0, s)
    out = np.empty_like(table)
    for n in range(m, n_max + 1):
        row = n * x * table[n - m]
        if n > m:
            c = math.sqrt((2.0 * n + 1.0) * (n * n - m * m) / (2.0 * n - 1.0))
            row = row - c * table[n - m - 1]
        out[n - m] = np.where(pole, 0.0, row / s_safe)
    return out


def _log_normalisation(n: int, m: int) -> float:
    return 0.5 * (
        math.log((2.0 * n + 1.0) / (4.0 * math.pi))
        + math.lgamma(n - m + 1.0)
        - math.lgamma(n + m + 1.0)
    )


def assoc_legendre(n: int, m: int, x):
    """
    Associated Legendre function P_n^m(x) without the Condon-Shortley phase.

    Args:
        n: Degree, n >= 0.
        m: Order, 0 <= m <= n.
        x: Scalar or array in [-1, 1].

    Returns:
        Float (scalar input) or array.

    Raises:
        DomainError: On m > n, negative arguments or |x| > 1.
    """
    _check_degree_order(n, m)
    scalar = np.ndim(x) == 0
    values = legendre_table(n, m, x)[-1] * math.exp(-_log_normalisation(n, m))
    return float(values[0]) if scalar else values


def sph_harm_angles(n: int, m: int, theta, phi):
    """
    Complex spherical harmonic evaluated straight from the closed form.

    Angles are used as given (no canonicalisation); the Legendre factor takes
    cos(theta), so (1 - x^2)^(m/2) equals |sin(theta)|^m.
    """
    if n < 0 or abs(m) > n:
        raise DomainError(f"invalid harmonic index n={n}, m={m}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    am = abs(m)
    x = np.clip(np.cos(theta), -1.0, 1.0)
    p = legendre_table(n, am, x.ravel())[-1].reshape(x.shape)
    y = (-1.0) ** am * p * np.exp(1j * am * phi)
    if m < 0:
        y = (-1.0) ** am * np.conj(y)
    return complex(y) if y.ndim == 0 else y


def sph_harm(idx: HarmonicIndex, p: Direction) -> complex:
    return sph_harm_angles(idx.n, idx.m, p.theta, p.phi)


def symmetry_check(idx: HarmonicIndex, p: Direction) -> SymmetryResiduals:
    """
    Residuals of the three reflection identities used by the orbit reduction.

    The shifted arguments (theta, phi + pi) and (theta + pi, pi - phi) are fed
    to the closed form as raw angles.
    """
    n, m = idx.n, idx.m
    theta, phi = p.theta, p.phi
    y = sph_harm_angles(n, m, theta, phi)
    r1 = abs(sph_harm_angles(n, m, theta, phi + math.pi) - (-1.0) ** m * y)
    r2 = abs(sph_harm_angles(n, m, theta + math.pi, math.pi - phi) - (-1.0) ** n * np.conj(y))
    r3 = abs(sph_harm_angles(n, -m, theta + math.pi, math.pi - phi) - (-1.0) ** (n + m) * y)
    return SymmetryResiduals(azimuth_shift=float(r1), inversion=float(r2), inversion_flip=float(r3))


class HarmonicsManager:
    @staticmethod
    def evaluate(n: int, m: int, direction: Direction) -> complex:
        """
        Evaluate Y_n^m at a direction.

        Args:
            n: Degree.
            m: Order, |m| <= n.
            direction: Canonical direction.

        Returns:
            Complex value.

        Raises:
            DomainError: On an invalid index.
        """
        try:
            return sph_harm(HarmonicIndex(n=n, m=m), direction)
        except ValueError as e:
            logger.error(f"Invalid harmonic index: {e}", exc_info=True)
            raise DomainError(str(e)) from e
