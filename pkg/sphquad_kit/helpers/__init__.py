from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

from sphquad_kit.constants import POLE_EPS


def to_vectors(theta, phi) -> np.ndarray:
    """Unit vectors (..., 3) for polar angles, no canonicalisation."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = np.sin(theta)
    return np.stack([s * np.cos(phi), s * np.sin(phi), np.cos(theta)], axis=-1)


def to_angles(vectors) -> Tuple[np.ndarray, np.ndarray]:
    """
    Canonical polar angles of (normalised) vectors.

    theta is in [0, pi], phi in [0, 2*pi); directions with sin(theta) below
    POLE_EPS are snapped onto the pole with phi = 0.
    """
    v = np.asarray(vectors, dtype=float)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    rho = np.hypot(v[..., 0], v[..., 1])
    theta = np.arctan2(rho, v[..., 2])
    phi = np.mod(np.arctan2(v[..., 1], v[..., 0]), 2.0 * np.pi)
    phi = np.where(phi >= 2.0 * np.pi, 0.0, phi)
    pole = rho < POLE_EPS
    theta = np.where(pole, np.where(v[..., 2] > 0.0, 0.0, np.pi), theta)
    phi = np.where(pole, 0.0, phi)
    return theta, phi


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def dedupe_points(points: np.ndarray, tol: float) -> np.ndarray:
    """Indices of the first occurrence of every point, chordal tolerance `tol`."""
    points = np.asarray(points, dtype=float)
    first = np.array([min(hits) for hits in cKDTree(points).query_ball_point(points, r=tol)], dtype=int)
    return np.flatnonzero(first == np.arange(len(points)))
