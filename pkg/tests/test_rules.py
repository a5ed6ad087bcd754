import math

import mpmath
import numpy as np
import pytest

from sphquad_kit.errors import DomainError
from sphquad_kit.tools.construct import verify_exactness
from sphquad_kit.tools.rules import (apply, custom_rule, product_gauss_legendre,
                                     product_trapezoid, rotate_rule)
from sphquad_kit.types import Direction


class TestTrapezoidProduct:
    def test_node_count_and_merged_poles(self, tt_30_60):
        assert tt_30_60.size == 29 * 60 + 2
        assert tt_30_60.thetas[0] == 0.0 and tt_30_60.weights[0] == 0.0
        assert tt_30_60.thetas[-1] == math.pi and tt_30_60.weights[-1] == 0.0

    def test_weight_extremes(self, tt_30_60):
        w = tt_30_60.weights
        w_max = 2 * math.pi**2 / 1800
        assert w.max() == pytest.approx(w_max, rel=1e-14)
        assert w[w > 0].min() == pytest.approx(w_max * math.sin(math.radians(6)), rel=1e-12)

    def test_weight_sum_falls_short_of_sphere_area(self, tt_30_60):
        deficit = 1 - tt_30_60.weight_sum / (4 * math.pi)
        assert deficit == pytest.approx(math.pi**2 / (12 * 30**2), rel=1e-2)

    def test_fine_rule_node_count(self):
        assert product_trapezoid(60, 120).size == 7082

    def test_single_polar_interval_rejected(self):
        with pytest.raises(DomainError):
            product_trapezoid(1, 4)

    def test_non_integer_counts_rejected(self):
        with pytest.raises(DomainError):
            product_trapezoid(4.5, 8)


class TestGaussLegendreProduct:
    def test_exact_through_advertised_degree(self):
        rule = product_gauss_legendre(16, 32)
        assert rule.meta.degree == 31
        assert verify_exactness(rule, 15) <= 1e-12

    def test_nodes_and_weights_match_high_precision_legendre(self, glt_30_60):
        mu = np.cos(glt_30_60.thetas[::60])
        w = glt_30_60.weights[::60] * 60 / (2 * math.pi)
        with mpmath.workdps(40):
            for x, wk in zip(mu, w):
                x = mpmath.mpf(float(x))
                p, p_prev = mpmath.legendre(30, x), mpmath.legendre(29, x)
                dp = 30 * (x * p - p_prev) / (x * x - 1)
                assert abs(float(p / dp)) <= 1e-13
                assert abs(wk - float(2 / ((1 - x * x) * dp * dp))) <= 1e-13

    def test_minimal_rule(self):
        rule = product_gauss_legendre(1, 2)
        np.testing.assert_allclose(rule.thetas, [math.pi / 2] * 2)
        np.testing.assert_allclose(rule.weights, [2 * math.pi] * 2)

    def test_rings_ordered_by_polar_angle(self, glt_30_60):
        assert np.all(np.diff(glt_30_60.thetas) >= 0)

    def test_zero_counts_rejected(self):
        with pytest.raises(DomainError):
            product_gauss_legendre(0, 4)


class TestApply:
    def test_constant_integrates_to_area(self, glt_30_60):
        assert apply(glt_30_60, lambda p: 1.0) == pytest.approx(4 * math.pi, rel=1e-13)

    def test_vectorized_matches_scalar(self):
        rule = product_gauss_legendre(6, 12)
        scalar = apply(rule, lambda p: p.unit_vector[2] ** 2)
        vector = apply(rule, lambda v: v[:, 2] ** 2, vectorized=True)
        assert scalar == pytest.approx(vector, abs=1e-14)
        assert vector == pytest.approx(4 * math.pi / 3, rel=1e-13)

    def test_bad_vectorized_shape_rejected(self):
        rule = product_gauss_legendre(2, 4)
        with pytest.raises(DomainError):
            apply(rule, lambda v: np.ones(3), vectorized=True)

    def test_invariant_rule_is_rotation_invariant(self, rule_n11, group):
        a = np.array([0.3, -0.2, 0.5])
        base = apply(rule_n11, lambda v: np.exp(v @ a), vectorized=True)
        for r in group.matrices[::5]:
            moved = apply(rule_n11, lambda v: np.exp((v @ r.T) @ a), vectorized=True)
            assert moved == pytest.approx(base, abs=1e-12)


class TestCustomRules:
    def test_length_mismatch_rejected(self):
        with pytest.raises(DomainError):
            custom_rule([Direction.from_angles(0.1, 0.2)], [1.0, 2.0])

    def test_rule_arrays_are_read_only(self):
        rule = custom_rule([Direction.from_angles(0.1, 0.2)], [4 * math.pi])
        with pytest.raises(ValueError):
            rule.weights[0] = 1.0

    def test_rotation_keeps_weights_and_exactness(self):
        rule = product_gauss_legendre(8, 16)
        c, s = math.cos(0.4), math.sin(0.4)
        rotated = rotate_rule(rule, np.array([[1, 0, 0], [0, c, -s], [0, s, c]]))
        np.testing.assert_array_equal(rotated.weights, rule.weights)
        assert verify_exactness(rotated, 7) <= 1e-12
