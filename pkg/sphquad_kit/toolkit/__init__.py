import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from dotenv import load_dotenv

from sphquad_kit.constants import DEFAULT_OPTIONS
from sphquad_kit.errors import SphQuadKitError
from sphquad_kit.types import (ConstructOptions, ConvergenceRow, Direction,
                               HarmonicIndex, HGIntegrand, MomentSystem,
                               Orbit, QuadratureRule, RotationGroup,
                               RteField, RteOptions, RteProblem, SweepRow,
                               SymmetryResiduals, Theorem1Report, WeightStats)

logger = logging.getLogger(__name__)


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value in (None, ""):
        return default
    try:
        return int(float(value))
    except ValueError:
        raise SphQuadKitError(f"{name} must be an integer, got {value!r}")


class SphQuadKit:
    """
    Entry point for rule construction, benchmarking and transport solves.

    Attributes:
        seed (int): Seed for construction restarts.
        restarts (int): Restarts per continuation step.
        max_iters (int): Gauss-Newton iterations per continuation step.
        max_unknowns (int): Cap on voxels x directions for transport solves.
    """

    def __init__(
        self,
        seed: Optional[int] = None,
        restarts: Optional[int] = None,
        max_iters: Optional[int] = None,
        max_unknowns: Optional[int] = None,
    ):
        """
        Initialize the SphQuadKit.

        Args:
            seed (int, optional): Restart seed, SPHQUAD_SEED otherwise.
            restarts (int, optional): Restarts per step, SPHQUAD_RESTARTS otherwise.
            max_iters (int, optional): Iteration budget, SPHQUAD_MAX_ITERS otherwise.
            max_unknowns (int, optional): Transport size cap, SPHQUAD_MAX_UNKNOWNS otherwise.
        """
        load_dotenv()
        self.seed = seed if seed is not None else _env_int("SPHQUAD_SEED", DEFAULT_OPTIONS["SEED"])
        self.restarts = restarts if restarts is not None else _env_int("SPHQUAD_RESTARTS", DEFAULT_OPTIONS["RESTARTS"])
        self.max_iters = max_iters if max_iters is not None else _env_int("SPHQUAD_MAX_ITERS", DEFAULT_OPTIONS["MAX_ITERS"])
        self.max_unknowns = (max_unknowns if max_unknowns is not None
                             else _env_int("SPHQUAD_MAX_UNKNOWNS", DEFAULT_OPTIONS["MAX_UNKNOWNS"]))
        logger.debug(f"SphQuadKit seed={self.seed} restarts={self.restarts} max_iters={self.max_iters}")

    def construct_options(self, **overrides: Any) -> ConstructOptions:
        values: Dict[str, Any] = {"restarts": self.restarts, "max_iters": self.max_iters}
        values.update(overrides)
        return ConstructOptions(**values)

    def rte_options(self, **overrides: Any) -> RteOptions:
        values: Dict[str, Any] = {"max_unknowns": self.max_unknowns}
        values.update(overrides)
        return RteOptions(**values)

    # harmonics

    def assoc_legendre(self, n: int, m: int, x):
        from sphquad_kit.tools.harmonics import assoc_legendre
        return assoc_legendre(n, m, x)

    def sph_harm(self, n: int, m: int, direction: Direction) -> complex:
        from sphquad_kit.tools.harmonics import HarmonicsManager
        return HarmonicsManager.evaluate(n, m, direction)

    def symmetry_check(self, n: int, m: int, direction: Direction) -> SymmetryResiduals:
        from sphquad_kit.tools.harmonics import symmetry_check
        return symmetry_check(HarmonicIndex(n=n, m=m), direction)

    # group and orbits

    def build_group(self) -> RotationGroup:
        from sphquad_kit.tools.icosahedral import get_group
        return get_group()

    def orbit(self, direction: Direction) -> Orbit:
        from sphquad_kit.tools.icosahedral import IcosahedralManager
        return IcosahedralManager.orbit_of(direction)

    def check_theorem1_conditions(self, rule: QuadratureRule) -> Theorem1Report:
        from sphquad_kit.tools.icosahedral import check_theorem1_conditions
        return check_theorem1_conditions(rule.nodes, rule.weights)

    def invariant_count(self, N: int) -> int:
        from sphquad_kit.tools.icosahedral import invariant_count
        return invariant_count(N)

    # rules

    def product_rule(self, kind: str, m_theta: int, m_phi: int) -> QuadratureRule:
        from sphquad_kit.tools.rules import RuleManager
        return RuleManager.product(kind, m_theta, m_phi)

    def apply(self, rule: QuadratureRule, f, vectorized: bool = False):
        from sphquad_kit.tools.rules import apply
        return apply(rule, f, vectorized)

    def read_rule(self, path: Union[str, Path]) -> QuadratureRule:
        from sphquad_kit.utils.rule_io import read_rule
        return read_rule(path)

    def write_rule(self, rule: QuadratureRule, path: Union[str, Path]) -> None:
        from sphquad_kit.utils.rule_io import write_rule
        write_rule(rule, path)

    # construction

    def index_set(self, N: int) -> List[Tuple[int, int]]:
        from sphquad_kit.tools.construct import index_set
        return index_set(N)

    def residual(self, system: MomentSystem) -> np.ndarray:
        from sphquad_kit.tools.construct import residual
        return residual(system)

    def jacobian(self, system: MomentSystem) -> np.ndarray:
        from sphquad_kit.tools.construct import jacobian
        return jacobian(system)

    def construct(self, N: int, recipe: Optional[Sequence[str]] = None,
                  positive_weights: bool = True) -> Tuple[QuadratureRule, List[ConvergenceRow]]:
        from sphquad_kit.tools.construct import ConstructionManager
        try:
            opts = self.construct_options(positive_weights=positive_weights)
            return ConstructionManager.construct(N, recipe, self.seed, opts)
        except SphQuadKitError:
            raise
        except Exception as e:
            raise SphQuadKitError(f"Failed to construct rule: {e}")

    def verify_exactness(self, rule: QuadratureRule, N: int) -> float:
        from sphquad_kit.tools.construct import verify_exactness
        return verify_exactness(rule, N)

    # benchmark

    def hg_value(self, k: HGIntegrand, direction: Direction) -> float:
        from sphquad_kit.tools.bench import hg_value
        return hg_value(k, direction)

    def error_sweep(self, rules: Sequence[QuadratureRule], g: Optional[float] = None,
                    axis: Optional[Sequence[float]] = None) -> List[SweepRow]:
        from sphquad_kit.constants import HG_AXIS, HG_G
        from sphquad_kit.tools.bench import BenchManager
        return BenchManager.compare(rules, HG_G if g is None else g, HG_AXIS if axis is None else axis)

    def weight_stats(self, rule: QuadratureRule) -> WeightStats:
        from sphquad_kit.tools.bench import weight_stats
        return weight_stats(rule)

    # transport

    def load_voxel_problem(self, label_file, materials, rule: QuadratureRule, **kwargs) -> RteProblem:
        from sphquad_kit.tools.rte import load_voxel_problem
        return load_voxel_problem(label_file, materials, rule, **kwargs)

    def solve_rte(self, problem: RteProblem, **overrides: Any) -> RteField:
        from sphquad_kit.tools.rte import RteManager
        try:
            return RteManager.run(problem, self.rte_options(**overrides))
        except SphQuadKitError:
            raise
        except Exception as e:
            raise SphQuadKitError(f"Failed to solve transport problem: {e}")

    def fluence(self, problem: RteProblem, field: RteField) -> np.ndarray:
        from sphquad_kit.tools.rte import fluence
        return fluence(problem, field)


__all__ = ["SphQuadKit", "SphQuadKitError"]
