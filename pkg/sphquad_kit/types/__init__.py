from dataclasses import dataclass, field
from typing import Callable, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from sphquad_kit.constants import (DEFAULT_OPTIONS, GROUP_ORDER,
                                   ORBIT_SIZES)
from sphquad_kit.errors import DomainError
from sphquad_kit.helpers import to_angles, to_vectors

OrbitType = Literal["vertex", "edge", "face", "generic"]
RuleKind = Literal["riqs20", "trapezoid_trapezoid", "gauss_legendre_trapezoid", "custom"]


class BaseModelWithArbitraryTypes(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


class Direction(BaseModelWithArbitraryTypes):
    """A point on the unit sphere in canonical polar angles."""

    model_config = ConfigDict(frozen=True)

    theta: float
    phi: float
    unit_vector: Tuple[float, float, float]

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "Direction":
        return cls.from_vector(to_vectors(theta, phi))

    @classmethod
    def from_vector(cls, v) -> "Direction":
        v = np.asarray(v, dtype=float)
        norm = np.linalg.norm(v)
        if v.shape != (3,) or not np.isfinite(norm) or norm == 0.0:
            raise DomainError(f"Cannot build a direction from {v!r}")
        theta, phi = to_angles(v / norm)
        u = to_vectors(theta, phi)
        return cls(theta=float(theta), phi=float(phi), unit_vector=tuple(float(c) for c in u))

    def vector(self) -> np.ndarray:
        return np.asarray(self.unit_vector)

    def canonical(self) -> "Direction":
        """Same point with angles re-wrapped and snapped at the poles."""
        return Direction.from_vector(self.unit_vector)


class HarmonicIndex(BaseModelWithArbitraryTypes):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=0)
    m: int

    @model_validator(mode="after")
    def _check_order(self) -> "HarmonicIndex":
        if abs(self.m) > self.n:
            raise ValueError(f"|m| = {abs(self.m)} exceeds n = {self.n}")
        return self


class SymmetryResiduals(BaseModelWithArbitraryTypes):
    azimuth_shift: float
    inversion: float
    inversion_flip: float

    def max(self) -> float:
        return max(self.azimuth_shift, self.inversion, self.inversion_flip)


class OrbitParam(BaseModelWithArbitraryTypes):
    orbit_type: OrbitType
    seed_theta: Optional[float] = None
    seed_phi: Optional[float] = None
    weight: float

    @model_validator(mode="after")
    def _check_seed(self) -> "OrbitParam":
        if self.orbit_type == "generic" and (self.seed_theta is None or self.seed_phi is None):
            raise ValueError("generic orbits need a seed direction")
        return self


class RuleMeta(BaseModelWithArbitraryTypes):
    kind: RuleKind
    degree: Optional[int] = None
    orbit_decomposition: Optional[List[Tuple[OrbitType, int]]] = None


class Theorem1Report(BaseModelWithArbitraryTypes):
    passed: bool
    offending_nodes: List[int] = []


class HGIntegrand(BaseModelWithArbitraryTypes):
    g: float
    axis: Direction

    @model_validator(mode="after")
    def _check_g(self) -> "HGIntegrand":
        if not -1.0 < self.g < 1.0:
            raise ValueError(f"anisotropy g = {self.g} outside (-1, 1)")
        return self


class SweepRow(BaseModelWithArbitraryTypes):
    rule_id: str
    node_count: int
    degree: Optional[int] = None
    abs_error: float


class WeightStats(BaseModelWithArbitraryTypes):
    node_count: int
    min_value: float
    min_count: int
    max_value: float
    max_count: int
    histogram: List[Tuple[float, float, int]]
    band: Tuple[float, float]
    band_fraction: float


class ConvergenceRow(BaseModelWithArbitraryTypes):
    step: int
    degree: int
    residual_inf: float
    damping: float
    dof: int
    equations: int


class ConstructOptions(BaseModelWithArbitraryTypes):
    restarts: int = Field(default=DEFAULT_OPTIONS["RESTARTS"], ge=0)
    max_iters: int = Field(default=DEFAULT_OPTIONS["MAX_ITERS"], ge=1)
    residual_tol: float = DEFAULT_OPTIONS["RESIDUAL_TOL"]
    step_tol: float = DEFAULT_OPTIONS["STEP_TOL"]
    exactness_tol: float = DEFAULT_OPTIONS["EXACTNESS_TOL"]
    ladder_start: int = DEFAULT_OPTIONS["LADDER_START"]
    ladder_step: int = Field(default=DEFAULT_OPTIONS["LADDER_STEP"], ge=1)
    positive_weights: bool = True


class RteOptions(BaseModelWithArbitraryTypes):
    max_iters: int = Field(default=DEFAULT_OPTIONS["RTE_MAX_ITERS"], ge=0)
    tol: float = Field(default=DEFAULT_OPTIONS["RTE_TOL"], gt=0.0)
    workers: int = Field(default=1, ge=1)
    allow_large: bool = False
    max_unknowns: int = DEFAULT_OPTIONS["MAX_UNKNOWNS"]
    divergence_window: int = Field(default=DEFAULT_OPTIONS["DIVERGENCE_WINDOW"], ge=1)
    normalize_phase: bool = True


@dataclass(frozen=True)
class QuadratureRule:
    """
    Immutable set of weighted directions.

    Arrays are stored read-only; `vectors` is derived from the angles.
    """

    thetas: np.ndarray
    phis: np.ndarray
    weights: np.ndarray
    meta: RuleMeta
    vectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        thetas = np.array(self.thetas, dtype=float).ravel()
        phis = np.array(self.phis, dtype=float).ravel()
        weights = np.array(self.weights, dtype=float).ravel()
        if not (thetas.size == phis.size == weights.size):
            raise DomainError("nodes and weights differ in length")
        if thetas.size == 0:
            raise DomainError("a rule needs at least one node")
        if not (np.all(np.isfinite(thetas)) and np.all(np.isfinite(phis)) and np.all(np.isfinite(weights))):
            raise DomainError("non-finite node or weight")
        vectors = to_vectors(thetas, phis)
        for arr in (thetas, phis, weights, vectors):
            arr.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "vectors", vectors)

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def nodes(self) -> List[Direction]:
        return [Direction.from_angles(t, p) for t, p in zip(self.thetas, self.phis)]

    @property
    def weight_sum(self) -> float:
        return float(sum(self.weights.tolist()))

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class RotationGroup:
    """Proper rotations of the icosahedron as a (60, 3, 3) stack."""

    matrices: np.ndarray

    def __post_init__(self):
        if self.matrices.shape != (GROUP_ORDER, 3, 3):
            raise DomainError(f"expected {GROUP_ORDER} rotations, got {self.matrices.shape[0]}")

    @property
    def elements(self) -> List[np.ndarray]:
        return list(self.matrices)

    def __len__(self) -> int:
        return GROUP_ORDER

    def contains(self, rotation: np.ndarray, tol: float = 1e-9) -> bool:
        diff = np.abs(self.matrices - np.asarray(rotation)[None, :, :]).max(axis=(1, 2))
        return bool(diff.min() < tol)


@dataclass(frozen=True)
class Orbit:
    representative: Direction
    vectors: np.ndarray
    orbit_type: OrbitType

    @property
    def points(self) -> List[Direction]:
        return [Direction.from_vector(v) for v in self.vectors]

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


@dataclass
class MomentSystem:
    """Reduced moment equations for a fixed orbit recipe."""

    degree: int
    params: List[OrbitParam]
    index_set: List[Tuple[int, int]]

    @property
    def dof(self) -> int:
        return sum(3 if p.orbit_type == "generic" else 1 for p in self.params)

    @property
    def node_count(self) -> int:
        return sum(ORBIT_SIZES[p.orbit_type] for p in self.params)


@dataclass(frozen=True)
class PhaseMatrix:
    """Discrete Henyey-Greenstein redistribution P[k, j] for one rule."""

    values: np.ndarray
    g: float
    normalized: bool


BoundaryFn = Callable[[str, Tuple[int, int, int], np.ndarray], float]


@dataclass
class RteProblem:
    grid: Tuple[int, int, int]
    h: float
    mu_a: np.ndarray
    mu_s: np.ndarray
    g: Union[float, np.ndarray]
    rule: QuadratureRule
    boundary: Optional[BoundaryFn] = None
    source: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.grid) != 3 or any(int(n) < 1 for n in self.grid):
            raise DomainError(f"invalid grid {self.grid}")
        self.grid = tuple(int(n) for n in self.grid)
        if not self.h > 0.0:
            raise DomainError("voxel size must be positive")
        shape = self.grid
        self.mu_a = np.broadcast_to(np.asarray(self.mu_a, dtype=float), shape).copy()
        self.mu_s = np.broadcast_to(np.asarray(self.mu_s, dtype=float), shape).copy()
        self.g = np.broadcast_to(np.asarray(self.g, dtype=float), shape).copy()
        if np.any(self.mu_a <= 0.0):
            raise DomainError("absorption must be strictly positive everywhere")
        if np.any(self.mu_s < 0.0):
            raise DomainError("scattering must be non-negative")
        if np.any(np.abs(self.g) >= 1.0):
            raise DomainError("anisotropy must lie in (-1, 1)")
        if self.source is not None:
            src = np.asarray(self.source, dtype=float)
            if src.shape == shape:
                src = np.repeat(src.reshape(-1, 1), self.rule.size, axis=1)
            elif src.shape != (self.voxel_count, self.rule.size):
                raise DomainError(f"source shape {src.shape} does not match problem")
            if np.any(src < 0.0):
                raise DomainError("sources must be non-negative")
            self.source = src

    @property
    def voxel_count(self) -> int:
        nx, ny, nz = self.grid
        return nx * ny * nz

    @property
    def unknowns(self) -> int:
        return self.voxel_count * self.rule.size


@dataclass
class RteField:
    """Intensity per (voxel, direction); voxels flattened C-order over the grid."""

    intensity: np.ndarray
    residual_history: List[Tuple[int, float]] = field(default_factory=list)

    @property
    def converged_residual(self) -> Optional[float]:
        return self.residual_history[-1][1] if self.residual_history else None


__all__ = [
    "BaseModelWithArbitraryTypes",
    "BoundaryFn",
    "ConstructOptions",
    "ConvergenceRow",
    "Direction",
    "HGIntegrand",
    "HarmonicIndex",
    "MomentSystem",
    "Orbit",
    "OrbitParam",
    "OrbitType",
    "PhaseMatrix",
    "QuadratureRule",
    "RotationGroup",
    "RteField",
    "RteOptions",
    "RteProblem",
    "RuleKind",
    "RuleMeta",
    "SweepRow",
    "SymmetryResiduals",
    "Theorem1Report",
    "WeightStats",
]
