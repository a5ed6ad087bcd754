import math

import numpy as np
import pytest

from sphquad_kit import SphQuadKit, SphQuadKitError
from sphquad_kit.errors import DomainError
from sphquad_kit.types import Direction


class TestConfiguration:
    def test_environment_defaults(self, monkeypatch):
        monkeypatch.setenv("SPHQUAD_SEED", "7")
        monkeypatch.setenv("SPHQUAD_RESTARTS", "3")
        kit = SphQuadKit()
        assert kit.seed == 7
        assert kit.restarts == 3
        assert kit.construct_options().restarts == 3

    def test_explicit_arguments_win(self, monkeypatch):
        monkeypatch.setenv("SPHQUAD_SEED", "7")
        assert SphQuadKit(seed=1).seed == 1

    def test_bad_environment_value(self, monkeypatch):
        monkeypatch.setenv("SPHQUAD_MAX_ITERS", "many")
        with pytest.raises(SphQuadKitError):
            SphQuadKit()

    def test_rte_options_carry_cap(self):
        assert SphQuadKit(max_unknowns=99).rte_options().max_unknowns == 99


class TestFacade:
    def test_construct_vertex_rule(self):
        kit = SphQuadKit(seed=0)
        rule, log = kit.construct(5, ["vertex"])
        assert rule.size == 12
        assert kit.verify_exactness(rule, 5) <= 1e-10
        assert kit.check_theorem1_conditions(rule).passed

    def test_domain_errors_propagate(self):
        kit = SphQuadKit()
        with pytest.raises(DomainError):
            kit.construct(17, ["vertex"])
        with pytest.raises(DomainError):
            kit.assoc_legendre(1, 2, 0.0)

    def test_harmonics_and_orbits(self):
        kit = SphQuadKit()
        p = Direction.from_angles(math.pi / 2, 0.0)
        assert abs(kit.sph_harm(2, 2, p) - 0.3862742020231896) < 1e-13
        assert len(kit.orbit(p)) == 30
        assert kit.invariant_count(17) == 6
        assert kit.symmetry_check(4, 2, p).max() < 1e-13

    def test_transport_solve_reports_final_residual(self):
        from sphquad_kit.tools.rules import product_gauss_legendre
        from sphquad_kit.types import RteProblem

        kit = SphQuadKit()
        problem = RteProblem(grid=(3, 3, 3), h=0.5, mu_a=0.1, mu_s=0.5, g=0.3,
                             rule=product_gauss_legendre(2, 4), source=np.ones((3, 3, 3)))
        field = kit.solve_rte(problem, tol=1e-9)
        assert field.converged_residual == field.residual_history[-1][1]
        assert field.converged_residual <= 1e-9
        assert kit.fluence(problem, field).shape == (3, 3, 3)
