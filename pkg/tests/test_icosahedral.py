import math

import numpy as np
import pytest

from sphquad_kit.constants import ICOSAHEDRON_VERTICES
from sphquad_kit.errors import DomainError
from sphquad_kit.tools.icosahedral import (canonical_seed,
                                           check_theorem1_conditions,
                                           decomposition_summary,
                                           invariant_count, orbit,
                                           orbit_images, partition_orbits,
                                           pinned_seed)
from sphquad_kit.types import Direction


class TestRotationGroup:
    def test_order_and_orthogonality(self, group):
        assert group.matrices.shape == (60, 3, 3)
        for r in group.matrices:
            np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-12)
            assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)

    def test_closed_under_multiplication(self, group):
        for a in group.matrices[::7]:
            for b in group.matrices:
                assert group.contains(a @ b)

    def test_maps_icosahedron_to_itself(self, group):
        verts = ICOSAHEDRON_VERTICES
        for r in group.matrices:
            moved = verts @ r.T
            dist = np.linalg.norm(moved[:, None, :] - verts[None, :, :], axis=2)
            assert np.all(dist.min(axis=1) < 1e-12)

    def test_contains_both_reflection_rotations(self, group):
        assert group.contains(np.diag([-1.0, -1.0, 1.0]))
        assert group.contains(np.diag([1.0, -1.0, -1.0]))


class TestOrbits:
    @pytest.mark.parametrize("kind,size", [("vertex", 12), ("face", 20), ("edge", 30)])
    def test_pinned_orbit_sizes(self, group, kind, size):
        orb = orbit(group, pinned_seed(kind))
        assert len(orb) == size
        assert orb.orbit_type == kind

    def test_generic_orbit(self, group):
        orb = orbit(group, Direction.from_angles(0.3, 0.2))
        assert len(orb) == 60
        assert orb.orbit_type == "generic"

    def test_vertex_orbit_is_the_icosahedron(self, group):
        orb = orbit(group, pinned_seed("vertex"))
        verts = ICOSAHEDRON_VERTICES / np.linalg.norm(ICOSAHEDRON_VERTICES, axis=1, keepdims=True)
        dist = np.linalg.norm(orb.vectors[:, None, :] - verts[None, :, :], axis=2)
        assert np.all(dist.min(axis=1) < 1e-12)

    def test_orbit_is_invariant(self, group):
        orb = orbit(group, Direction.from_angles(1.1, 4.0))
        for r in group.matrices:
            moved = orb.vectors @ r.T
            dist = np.linalg.norm(moved[:, None, :] - orb.vectors[None, :, :], axis=2)
            assert np.all(dist.min(axis=1) < 1e-9)

    def test_orbit_does_not_depend_on_seeding_member(self, group):
        first = orbit(group, Direction.from_angles(0.7, 2.3))
        for k in (5, 31, 59):
            other = orbit(group, Direction.from_vector(first.vectors[k]))
            assert len(other) == len(first)
            dist = np.linalg.norm(other.vectors[:, None, :] - first.vectors[None, :, :], axis=2)
            assert np.all(dist.min(axis=1) < 1e-12)

    def test_generic_has_no_pinned_seed(self):
        with pytest.raises(DomainError):
            pinned_seed("generic")

    def test_canonical_seed_stays_in_orbit(self, group):
        d = Direction.from_angles(2.0, 5.5)
        c = canonical_seed(group, d)
        images = orbit_images(group, d.vector())
        assert np.min(np.linalg.norm(images - c.vector(), axis=1)) < 1e-12
        assert c.unit_vector[2] == pytest.approx(images[:, 2].max(), abs=1e-12)


class TestInvariantCount:
    @pytest.mark.parametrize("N,count", [(0, 1), (5, 1), (6, 2), (11, 3), (14, 4), (17, 6), (29, 15), (75, 97)])
    def test_counts(self, group, N, count):
        assert invariant_count(N, group) == count

    def test_negative_degree_rejected(self):
        with pytest.raises(DomainError):
            invariant_count(-1)


class TestReflectionConditions:
    def test_union_of_orbits_passes(self, group):
        orbits = [orbit(group, pinned_seed("vertex")), orbit(group, Direction.from_angles(0.4, 0.1))]
        nodes = [p for o in orbits for p in o.points]
        weights = [0.3] * 12 + [0.15] * 60
        assert check_theorem1_conditions(nodes, weights).passed

    def test_single_generic_node_fails(self):
        report = check_theorem1_conditions([Direction.from_angles(0.5, 0.5)], [4 * math.pi])
        assert not report.passed
        assert report.offending_nodes == [0]

    def test_poles_pass_as_a_pair(self):
        nodes = [Direction.from_angles(0.0, 0.0), Direction.from_angles(math.pi, 0.0)]
        assert check_theorem1_conditions(nodes, [2 * math.pi, 2 * math.pi]).passed

    def test_lone_pole_has_no_partner(self):
        # the x-axis half turn carries the north pole to the south pole
        report = check_theorem1_conditions([Direction.from_angles(0.0, 0.0)], [4 * math.pi])
        assert not report.passed

    def test_unequal_partner_weights_fail(self, group):
        nodes = orbit(group, pinned_seed("vertex")).points
        weights = np.full(12, 1.0)
        weights[3] = 1.5
        report = check_theorem1_conditions(nodes, weights)
        assert not report.passed
        assert 3 in report.offending_nodes


class TestPartition:
    def test_recovers_orbit_structure(self, group):
        vertex = orbit(group, pinned_seed("vertex"))
        generic = orbit(group, Direction.from_angles(0.9, 0.3))
        vectors = np.vstack([vertex.vectors, generic.vectors])
        weights = np.concatenate([np.full(12, 0.2), np.full(60, 0.17)])
        parts = partition_orbits(group, vectors, weights)
        assert parts is not None
        assert decomposition_summary(parts) == [("vertex", 1), ("generic", 1)]

    def test_broken_orbit_is_rejected(self, group):
        vectors = orbit(group, pinned_seed("vertex")).vectors[:11]
        assert partition_orbits(group, vectors, np.ones(11)) is None
