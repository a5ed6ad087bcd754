import csv

import numpy as np
import pytest

from sphquad_kit.cli import EXIT_IO, EXIT_OK, EXIT_VALIDATION, main
from sphquad_kit.utils.rule_io import read_rule
from sphquad_kit.utils.voxel_io import read_fluence, write_labels


@pytest.fixture
def glt_file(tmp_path):
    path = tmp_path / "glt.txt"
    assert main(["product", "--kind", "glt", "--m-theta", "4", "--m-phi", "8", "--out", str(path)]) == EXIT_OK
    return path


class TestProductAndCheck:
    def test_product_writes_rule(self, glt_file):
        assert read_rule(glt_file).size == 32

    def test_check_passes_within_degree(self, glt_file, capsys):
        assert main(["check", "--rule", str(glt_file), "--degree", "7"]) == EXIT_OK
        assert "PASS" in capsys.readouterr().out

    def test_check_fails_beyond_degree(self, glt_file, capsys):
        assert main(["check", "--rule", str(glt_file), "--degree", "12"]) == EXIT_VALIDATION
        assert "FAIL" in capsys.readouterr().out

    def test_missing_rule_is_io_error(self, tmp_path):
        assert main(["check", "--rule", str(tmp_path / "nope.txt"), "--degree", "3"]) == EXIT_IO

    def test_bad_product_counts(self, tmp_path):
        out = tmp_path / "tt.txt"
        assert main(["product", "--kind", "tt", "--m-theta", "1", "--m-phi", "4", "--out", str(out)]) == EXIT_VALIDATION


class TestConstruct:
    def test_vertex_rule(self, tmp_path):
        out = tmp_path / "riqs5.txt"
        assert main(["construct", "--degree", "5", "--recipe", "vertex", "--out", str(out)]) == EXIT_OK
        rule = read_rule(out)
        assert rule.size == 12 and rule.meta.degree == 5
        with open(tmp_path / "riqs5.convergence.csv") as fh:
            assert next(csv.reader(fh)) == ["step", "N", "residual_inf", "damping", "dof", "equations"]

    def test_seed_and_restarts_flags(self, tmp_path):
        out = tmp_path / "r.txt"
        args = ["construct", "--degree", "5", "--recipe", "vertex", "--seed", "3", "--restarts", "2", "--out", str(out)]
        assert main(args) == EXIT_OK
        assert read_rule(out).size == 12

    def test_same_seed_gives_identical_files(self, tmp_path):
        outs = [tmp_path / "a.txt", tmp_path / "b.txt"]
        for out in outs:
            args = ["construct", "--degree", "11", "--recipe", "vertex,genericx2", "--seed", "7", "--out", str(out)]
            assert main(args) == EXIT_OK
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_bad_recipe(self, tmp_path):
        out = tmp_path / "r.txt"
        assert main(["construct", "--degree", "5", "--recipe", "vertex,cube", "--out", str(out)]) == EXIT_VALIDATION

    def test_recipe_too_small(self, tmp_path):
        out = tmp_path / "r.txt"
        assert main(["construct", "--degree", "17", "--recipe", "vertex", "--out", str(out)]) == EXIT_VALIDATION

    def test_unknown_subcommand(self):
        assert main(["launch"]) == EXIT_VALIDATION


class TestBench:
    def test_sweep_csv(self, glt_file, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["bench", "--rules", str(glt_file), "--out", str(out), "--axis", "1/9,4/9,8/9"]) == EXIT_OK
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["rule_id", "node_count", "degree", "abs_error"]
        assert rows[1][:3] == ["glt", "32", "7"]
        with open(tmp_path / "sweep_weights.csv") as fh:
            weights = list(csv.reader(fh))
        assert weights[0][:3] == ["rule_id", "w_min", "w_min_count"]
        assert weights[1][0] == "glt"
        assert (tmp_path / "sweep_weights_histogram.csv").exists()


class TestRte:
    def _volume(self, tmp_path, mu_a="0.05"):
        write_labels(np.ones((4, 4, 4), dtype=np.uint8), 0.5, tmp_path / "vol.hdr")
        (tmp_path / "mat.csv").write_text(f"label,mu_a,mu_s,g\n1,{mu_a},1.0,0.5\n")

    def test_uniform_source_run(self, glt_file, tmp_path, capsys):
        self._volume(tmp_path)
        prefix = tmp_path / "run"
        code = main(["rte", "--volume", str(tmp_path / "vol.hdr"), "--materials", str(tmp_path / "mat.csv"),
                     "--rule", str(glt_file), "--out", str(prefix), "--source", "uniform", "--tol", "1e-6"])
        assert code == EXIT_OK
        phi = read_fluence(tmp_path / "run_fluence.hdr")
        assert phi.shape == (4, 4, 4) and np.all(phi > 0)
        with open(tmp_path / "run_residuals.csv") as fh:
            assert next(csv.reader(fh)) == ["iteration", "relative_residual"]
        assert "unknowns 2048" in capsys.readouterr().out

    def test_zero_absorption_is_a_validation_failure(self, glt_file, tmp_path):
        self._volume(tmp_path, mu_a="0.0")
        code = main(["rte", "--volume", str(tmp_path / "vol.hdr"), "--materials", str(tmp_path / "mat.csv"),
                     "--rule", str(glt_file), "--out", str(tmp_path / "run")])
        assert code == EXIT_VALIDATION

    def test_missing_volume_is_io_error(self, glt_file, tmp_path):
        self._volume(tmp_path)
        code = main(["rte", "--volume", str(tmp_path / "other.hdr"), "--materials", str(tmp_path / "mat.csv"),
                     "--rule", str(glt_file), "--out", str(tmp_path / "run")])
        assert code == EXIT_IO

    def test_no_source_gives_zero_fluence(self, glt_file, tmp_path):
        self._volume(tmp_path)
        code = main(["rte", "--volume", str(tmp_path / "vol.hdr"), "--materials", str(tmp_path / "mat.csv"),
                     "--rule", str(glt_file), "--out", str(tmp_path / "run"), "--source", "none"])
        assert code == EXIT_OK
        assert np.all(read_fluence(tmp_path / "run_fluence.hdr") == 0.0)
        raw = np.fromfile(tmp_path / "run_fluence.raw", dtype="<f8")
        assert raw.size == 64


class TestUnknowns:
    def test_ratio_printed(self, capsys):
        assert main(["unknowns", "--grid", "181,217,181", "--sizes", "7082,1932"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].split()[1] == str(181 * 217 * 181 * 7082)
        assert float(lines[1].split()[2]) == pytest.approx(7082 / 1932, abs=1e-4)
