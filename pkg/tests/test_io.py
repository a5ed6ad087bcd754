import numpy as np
import pytest

from sphquad_kit.errors import (DomainError, MaterialError, RuleFormatError,
                                VolumeFormatError)
from sphquad_kit.tools.rules import product_gauss_legendre
from sphquad_kit.tools.rte import load_voxel_problem
from sphquad_kit.utils.recipe import format_recipe, parse_recipe
from sphquad_kit.utils.rule_io import read_rule, write_rule
from sphquad_kit.utils.to_json import to_json
from sphquad_kit.utils.voxel_io import (read_fluence, read_labels,
                                        read_material_table, write_fluence,
                                        write_labels)


class TestRuleFiles:
    def test_round_trip_is_bit_identical(self, tmp_path, rule_n11):
        path = tmp_path / "rule.txt"
        write_rule(rule_n11, path)
        back = read_rule(path)
        np.testing.assert_array_equal(back.thetas, rule_n11.thetas)
        np.testing.assert_array_equal(back.phis, rule_n11.phis)
        np.testing.assert_array_equal(back.weights, rule_n11.weights)
        assert back.meta == rule_n11.meta

    def test_product_rule_without_degree(self, tmp_path, tt_30_60):
        path = tmp_path / "tt.txt"
        write_rule(tt_30_60, path)
        back = read_rule(path)
        assert back.meta.degree is None
        assert back.size == tt_30_60.size

    def test_missing_format_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# kind custom\n# degree none\n# count 1\n0 0 12.56\n")
        with pytest.raises(RuleFormatError) as info:
            read_rule(path)
        assert info.value.line == 1

    def test_row_missing_weight(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# sphquad-rule v1\n# kind custom\n# degree none\n# count 2\n"
                        "0 0 6.28\n3.14159 0\n")
        with pytest.raises(RuleFormatError) as info:
            read_rule(path)
        assert info.value.line == 6

    def test_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# sphquad-rule v1\n# kind custom\n# degree none\n# count 3\n0 0 12.56\n")
        with pytest.raises(RuleFormatError):
            read_rule(path)

    def test_unknown_kind(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# sphquad-rule v1\n# kind lebedev\n# degree 3\n# count 1\n0 0 12.56\n")
        with pytest.raises(RuleFormatError):
            read_rule(path)


class TestVolumes:
    def test_labels_round_trip_x_fastest(self, tmp_path):
        labels = np.arange(24, dtype=np.uint8).reshape(2, 3, 4)
        write_labels(labels, 0.5, tmp_path / "vol.hdr")
        raw = np.fromfile(tmp_path / "vol.raw", dtype=np.uint8)
        assert raw[1] == labels[1, 0, 0]
        back, spacing = read_labels(tmp_path / "vol.hdr")
        np.testing.assert_array_equal(back, labels)
        assert spacing == 0.5

    def test_dimension_mismatch(self, tmp_path):
        (tmp_path / "vol.raw").write_bytes(bytes(7))
        (tmp_path / "vol.hdr").write_text("dims 2 2 2\nspacing 1.0\ndata vol.raw\n")
        with pytest.raises(VolumeFormatError):
            read_labels(tmp_path / "vol.hdr")

    def test_zero_absorption_rejected(self, tmp_path):
        path = tmp_path / "mat.csv"
        path.write_text("label,mu_a,mu_s,g\n1,0.0,1.0,0.9\n")
        with pytest.raises(MaterialError):
            read_material_table(path)

    def test_unknown_label_rejected(self, tmp_path):
        write_labels(np.full((2, 2, 2), 3, dtype=np.uint8), 1.0, tmp_path / "vol.hdr")
        with pytest.raises(VolumeFormatError):
            load_voxel_problem(tmp_path / "vol.hdr", {1: (0.1, 1.0, 0.8)}, product_gauss_legendre(2, 4))

    def test_problem_from_volume(self, tmp_path):
        labels = np.ones((3, 2, 2), dtype=np.uint8)
        labels[0] = 2
        write_labels(labels, 0.25, tmp_path / "vol.hdr")
        (tmp_path / "mat.csv").write_text("label,mu_a,mu_s,g\n1,0.01,10.0,0.9\n2,0.02,5.0,0.8\n")
        problem = load_voxel_problem(tmp_path / "vol.hdr", tmp_path / "mat.csv", product_gauss_legendre(2, 4))
        assert problem.grid == (3, 2, 2)
        assert problem.h == 0.25
        assert problem.mu_a[0, 0, 0] == 0.02 and problem.mu_a[2, 1, 1] == 0.01

    def test_fluence_round_trip(self, tmp_path):
        values = np.random.default_rng(0).random((3, 4, 5))
        write_fluence(values, 1.0, tmp_path / "phi.hdr")
        np.testing.assert_array_equal(read_fluence(tmp_path / "phi.hdr"), values)


class TestRecipes:
    def test_parse_and_format(self):
        recipe = parse_recipe("vertex,genericx32")
        assert recipe == ["vertex"] + ["generic"] * 32
        assert format_recipe(recipe) == "vertex,genericx32"

    def test_repeated_pinned_orbit_rejected(self):
        with pytest.raises(DomainError):
            parse_recipe("vertex,vertex")

    def test_unknown_token_rejected(self):
        with pytest.raises(DomainError):
            parse_recipe("vertex,octahedral")


class TestToJson:
    def test_strict_and_loose_forms(self):
        assert to_json('{"degree": 5, "out": "r.txt"}') == {"degree": 5, "out": "r.txt"}
        assert to_json("{degree:5,out:r.txt}") == {"degree": 5, "out": "r.txt"}

    def test_garbage_raises(self):
        with pytest.raises(ValueError):
            to_json("not a dict")
