import logging
import math
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from sphquad_kit.constants import (ALPHA, GROUP_ORDER, ORBIT_SIZES, ORBIT_TOL,
                                   WEIGHT_GROUP_TOL)
from sphquad_kit.errors import DomainError, SphQuadKitError
from sphquad_kit.helpers import dedupe_points, normalize, to_angles
from sphquad_kit.types import (Direction, Orbit, OrbitType, RotationGroup,
                               Theorem1Report)

logger = logging.getLogger(__name__)

_TYPE_BY_SIZE = {size: name for name, size in ORBIT_SIZES.items()}

VERTEX_AXIS = normalize(np.array([1.0, 0.0, ALPHA]))
EDGE_AXIS = np.array([0.0, 0.0, 1.0])
# centroid of the face (0, a, 1), (0, -a, 1), (1, 0, a)
FACE_AXIS = normalize(np.array([1.0, 0.0, 2.0 + ALPHA]))


def build_group(tol: float = 1e-9) -> RotationGroup:
    """
    Close a five-fold vertex rotation and a two-fold edge rotation under
    multiplication.

    Raises:
        SphQuadKitError: If closure does not give exactly 60 rotations.
    """
    five = Rotation.from_rotvec(2.0 * math.pi / 5.0 * VERTEX_AXIS).as_matrix()
    two = Rotation.from_rotvec(math.pi * EDGE_AXIS).as_matrix()
    elements = [np.eye(3)]
    frontier = [np.eye(3)]
    while frontier:
        grown = []
        for g in frontier:
            for gen in (five, two):
                h = gen @ g
                if all(np.abs(h - e).max() >= tol for e in elements):
                    elements.append(h)
                    grown.append(h)
        if len(elements) > GROUP_ORDER:
            break
        frontier = grown
    if len(elements) != GROUP_ORDER:
        raise SphQuadKitError(f"Group closure produced {len(elements)} rotations")
    logger.debug("Built icosahedral rotation group")
    return RotationGroup(matrices=np.stack(elements))


@lru_cache(maxsize=1)
def get_group() -> RotationGroup:
    return build_group()


def orbit_images(group: RotationGroup, vector) -> np.ndarray:
    """All 60 images R v, duplicates kept."""
    return np.einsum("gij,j->gi", group.matrices, np.asarray(vector, dtype=float))


def orbit(group: RotationGroup, seed: Direction, tol: float = ORBIT_TOL) -> Orbit:
    images = orbit_images(group, seed.vector())
    points = images[dedupe_points(images, tol)]
    try:
        orbit_type = _TYPE_BY_SIZE[len(points)]
    except KeyError:
        raise SphQuadKitError(f"Orbit of size {len(points)} does not match any stratum")
    return Orbit(representative=seed, vectors=points, orbit_type=orbit_type)


def pinned_seed(orbit_type: OrbitType) -> Direction:
    if orbit_type == "vertex":
        return Direction.from_vector(VERTEX_AXIS)
    if orbit_type == "edge":
        return Direction.from_vector(EDGE_AXIS)
    if orbit_type == "face":
        return Direction.from_vector(FACE_AXIS)
    raise DomainError(f"{orbit_type!r} orbits have no pinned seed")


def canonical_seed(group: RotationGroup, direction: Direction) -> Direction:
    """Orbit representative with the largest z, ties broken by smallest phi."""
    images = orbit_images(group, direction.vector())
    top = images[images[:, 2] >= images[:, 2].max() - 1e-12]
    _, phis = to_angles(top)
    return Direction.from_vector(top[int(np.argmin(phis))])


def _characters(group: RotationGroup, n: int) -> np.ndarray:
    cos_alpha = np.clip((np.trace(group.matrices, axis1=1, axis2=2) - 1.0) / 2.0, -1.0, 1.0)
    alpha = np.arccos(cos_alpha)
    return 1.0 + 2.0 * sum((np.cos(k * alpha) for k in range(1, n + 1)), np.zeros_like(alpha))


def invariant_count(N: int, group: Optional[RotationGroup] = None) -> int:
    """Number of invariant harmonics of degree <= N (character average per degree)."""
    if N < 0:
        raise DomainError("degree must be non-negative")
    group = group or get_group()
    return sum(int(round(float(_characters(group, n).mean()))) for n in range(N + 1))


def _partner_indices(tree: cKDTree, targets: np.ndarray, tol: float) -> List[List[int]]:
    return tree.query_ball_point(targets, r=tol)


def check_theorem1_conditions(nodes: Sequence[Direction], weights: Sequence[float],
                              tol: float = ORBIT_TOL) -> Theorem1Report:
    """
    Check the reflection conditions under which the zero-moment equations
    reduce to even degree and even order.

    Each node needs exactly one partner of equal weight under
    (x, y, z) -> (-x, -y, z) and under (x, y, z) -> (x, -y, -z).
    """
    weights = np.asarray(weights, dtype=float)
    if len(nodes) != weights.size:
        raise DomainError("nodes and weights differ in length")
    v = np.array([p.unit_vector for p in nodes])
    tree = cKDTree(v)
    offending = set()
    for flip in (np.array([-1.0, -1.0, 1.0]), np.array([1.0, -1.0, -1.0])):
        for k, hits in enumerate(_partner_indices(tree, v * flip, tol)):
            scale = max(1.0, abs(weights[k]))
            if len(hits) != 1 or abs(weights[hits[0]] - weights[k]) > WEIGHT_GROUP_TOL * scale:
                offending.add(k)
    return Theorem1Report(passed=not offending, offending_nodes=sorted(offending))


def partition_orbits(group: RotationGroup, vectors: np.ndarray, weights: np.ndarray,
                     tol: float = ORBIT_TOL) -> Optional[List[Tuple[OrbitType, List[int]]]]:
    """
    Split a node set into group orbits of constant weight.

    Returns None when the nodes are not a union of such orbits.
    """
    vectors = np.asarray(vectors, dtype=float)
    tree = cKDTree(vectors)
    assigned = np.zeros(len(vectors), dtype=bool)
    parts = []
    for k in range(len(vectors)):
        if assigned[k]:
            continue
        orb = orbit(group, Direction.from_vector(vectors[k]), tol)
        members = []
        for hits in tree.query_ball_point(orb.vectors, r=tol):
            if len(hits) != 1:
                return None
            members.append(hits[0])
        w = weights[members]
        if np.abs(w - w[0]).max() > WEIGHT_GROUP_TOL * max(1.0, abs(w[0])):
            return None
        assigned[members] = True
        parts.append((orb.orbit_type, sorted(members)))
    return parts


def decomposition_summary(parts: List[Tuple[OrbitType, List[int]]]) -> List[Tuple[OrbitType, int]]:
    counts: Dict[str, int] = {}
    for orbit_type, _ in parts:
        counts[orbit_type] = counts.get(orbit_type, 0) + 1
    order = ("vertex", "edge", "face", "generic")
    return [(t, counts[t]) for t in order if t in counts]


class IcosahedralManager:
    @staticmethod
    def group() -> RotationGroup:
        return get_group()

    @staticmethod
    def orbit_of(direction: Direction) -> Orbit:
        """
        Orbit of a direction under the icosahedral rotations.

        Args:
            direction: Seed direction.

        Returns:
            Orbit with deduplicated points and its stratum.
        """
        try:
            return orbit(get_group(), direction)
        except Exception as e:
            logger.error(f"Failed to compute orbit: {e}", exc_info=True)
            raise
